//! Scans reservoir seeds and ridge strengths for closed-loop stability on
//! the Mackey-Glass task, reusing one state harvest per seed.
//!
//!     cargo run --release --example reservoir_tuning -- 0,1,2,3 1e-8,1e-7,1e-6

use noisynets::esn::{ridge_readout, EsnModel, RidgeConfig};
use noisynets::mackey_glass::{integrate, split_train_test, MgParams, TEST_LEN, TRAIN_LEN};
use noisynets::noise::NoiseSpec;
use noisynets::numerics::{rmse, RngStream};

fn parse_list<T: std::str::FromStr>(arg: Option<String>, default: &[T]) -> Vec<T>
where
    T: Copy,
{
    match arg {
        None => default.to_vec(),
        Some(s) => s
            .split(',')
            .map(|p| p.parse().unwrap_or_else(|_| panic!("bad list entry {p}")))
            .collect(),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seeds: Vec<u64> = parse_list(args.next(), &[0, 1, 2, 3, 4, 5]);
    let lambdas: Vec<f64> = parse_list(args.next(), &[1e-8, 1e-7, 1e-6]);

    let series = integrate(&MgParams::default(), TRAIN_LEN + TEST_LEN)?;
    let (train, test) = split_train_test(&series)?;
    let washout = RidgeConfig::default().washout;
    let clean = NoiseSpec::none();

    let mut open_inputs = Vec::with_capacity(TEST_LEN);
    open_inputs.push(train[TRAIN_LEN - 1]);
    open_inputs.extend_from_slice(&test[..TEST_LEN - 1]);

    for &seed in &seeds {
        let t0 = std::time::Instant::now();
        let mut model = EsnModel::init_reservoir(1000, seed, 1.2, 1.0)?;
        let mut rng = RngStream::new(seed, 1);
        let (states, targets) = model.harvest(train, &clean, &mut rng, washout)?;
        let harvest_s = t0.elapsed().as_secs_f64();

        for &lambda in &lambdas {
            let t1 = std::time::Instant::now();
            let w = ridge_readout(&states, &targets, lambda)?;
            let wnorm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            model.set_w_out(w)?;

            let mut open_model = model.clone();
            let open = open_model.predict_open_loop(&open_inputs, &clean, &mut rng.clone())?;
            let open_rmse = rmse(&open, test)?;

            let mut closed_model = model.clone();
            let run = closed_model.predict_closed_loop(
                &train[TRAIN_LEN - 1..],
                TEST_LEN,
                &clean,
                &mut rng.clone(),
            )?;
            let closed_rmse = rmse(&run.outputs, test)?;

            println!(
                "seed={seed} lambda={lambda:.0e} open={open_rmse:.3e} closed={closed_rmse:.4} \
                 |w|={wnorm:.3} diverged={} harvest={harvest_s:.0}s ridge={:.0}s",
                run.diverged_steps,
                t1.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
