//! Command line driver: generate data, train and evaluate single networks,
//! and run noise-intensity sweeps.
//!
//! Every subcommand reads the same JSON config (all fields optional, see
//! `SweepConfig` defaults), applies flag overrides, and echoes the effective
//! configuration to `config.echo.json` in the output directory.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use noisynets::esn::EsnModel;
use noisynets::experiments::{
    box_stats, run_esn_sweep, run_fnn_sweep, write_config_echo, write_curves, write_results,
    CurveRow, Network, ResultRow, SweepConfig,
};
use noisynets::fnn::DenseNet;
use noisynets::mackey_glass::{integrate, split_train_test, TEST_LEN, TRAIN_LEN};
use noisynets::mnist::{self, LabeledImageSet};
use noisynets::noise::NoiseSpec;
use noisynets::numerics::{rmse, RngStream};
use noisynets::{Error, Result};

#[derive(Parser)]
#[command(name = "noisynets", version, about = "Noise injection experiments on small networks")]
struct Cli {
    /// JSON config file; missing fields take documented defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, created if absent.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Caps dataset or series length for quick runs.
    #[arg(long, global = true, value_name = "N")]
    limit: Option<usize>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the delay equation and write series.csv.
    MgGen,
    /// Train a classifier on IDX data; writes model.ckpt and curves.csv.
    FnnTrain {
        /// Directory holding the four conventionally named IDX files.
        #[arg(long, value_name = "DIR")]
        data: PathBuf,
    },
    /// Score a saved classifier under the configured test noise.
    FnnEval {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        #[arg(long, value_name = "DIR")]
        data: PathBuf,
    },
    /// Train a reservoir on the generated series; writes model.ckpt.
    EsnTrain,
    /// Score a saved reservoir open- or self-closed-loop over the test grid.
    EsnEval {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
    },
    /// Run the full train-by-test noise grid for the configured network.
    Sweep {
        /// MNIST directory; required when network = fnn.
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
        /// Evaluate the full grid instead of paired intensities.
        #[arg(long)]
        cross: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<SweepConfig> {
    match path {
        None => Ok(SweepConfig::default()),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| Error::io(p.display().to_string(), e))?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = load_config(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
        config.fnn.seed = seed;
    }
    if let Cmd::Sweep { cross: true, .. } = cli.command {
        config.cross = true;
    }
    config.validate()?;

    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParam {
                name: "threads",
                reason: e.to_string(),
            })?;
    }

    std::fs::create_dir_all(&cli.out)
        .map_err(|e| Error::io(cli.out.display().to_string(), e))?;
    write_config_echo(&config, &cli.out.join("config.echo.json"))?;

    match &cli.command {
        Cmd::MgGen => mg_gen(&config, &cli),
        Cmd::FnnTrain { data } => fnn_train(&config, &cli, data),
        Cmd::FnnEval { model, data } => fnn_eval(&config, &cli, model, data),
        Cmd::EsnTrain => esn_train(&config, &cli),
        Cmd::EsnEval { model } => esn_eval(&config, &cli, model),
        Cmd::Sweep { data, .. } => sweep(&config, &cli, data.as_deref()),
    }
}

fn mg_gen(config: &SweepConfig, cli: &Cli) -> Result<()> {
    let length = cli.limit.unwrap_or(TRAIN_LEN + TEST_LEN);
    let series = integrate(&config.mg, length)?;
    let mut out = format!("# params: {}\n", serde_json::to_string(&config.mg)?);
    out.push_str("value\n");
    for v in &series.values {
        out.push_str(&format!("{v}\n"));
    }
    let path = cli.out.join("series.csv");
    std::fs::write(&path, out).map_err(|e| Error::io(path.display().to_string(), e))?;
    println!("wrote {} ({length} samples)", path.display());
    Ok(())
}

fn load_train_set(dir: &Path, limit: Option<usize>) -> Result<LabeledImageSet> {
    let set = LabeledImageSet::load_idx(
        &dir.join(mnist::TRAIN_IMAGES_FILE),
        &dir.join(mnist::TRAIN_LABELS_FILE),
    )?;
    Ok(match limit {
        Some(n) => set.truncate(n),
        None => set,
    })
}

fn load_test_set(dir: &Path, limit: Option<usize>) -> Result<LabeledImageSet> {
    let set = LabeledImageSet::load_idx(
        &dir.join(mnist::TEST_IMAGES_FILE),
        &dir.join(mnist::TEST_LABELS_FILE),
    )?;
    Ok(match limit {
        Some(n) => set.truncate(n),
        None => set,
    })
}

fn fnn_train(config: &SweepConfig, cli: &Cli, data: &Path) -> Result<()> {
    let train = load_train_set(data, cli.limit)?;
    let cfg = config.fnn;
    let mut net = DenseNet::mnist_default(cfg.seed);
    let history = net.train(&train, &cfg)?;

    let model_path = cli.out.join("model.ckpt");
    net.save(&model_path)?;
    let intensity = cfg.noise.d_add + cfg.noise.d_mul;
    let curves: Vec<CurveRow> = history
        .iter()
        .enumerate()
        .map(|(epoch, s)| CurveRow {
            train_intensity: intensity,
            epoch,
            accuracy: s.accuracy,
            mean_loss: s.mean_loss,
        })
        .collect();
    write_curves(&curves, config, &cli.out.join("curves.csv"))?;

    let last = history.last().expect("at least one epoch");
    println!(
        "trained {} epochs on {} images, final train accuracy {:.4}",
        history.len(),
        train.len(),
        last.accuracy
    );
    println!("wrote {}", model_path.display());
    Ok(())
}

fn fnn_eval(config: &SweepConfig, cli: &Cli, model: &Path, data: &Path) -> Result<()> {
    let net = DenseNet::load(model)?;
    let test = load_test_set(data, cli.limit)?;
    let spec = config.fnn.noise;
    let rng = RngStream::new(config.seed, 0);
    let mut accs = Vec::with_capacity(config.repeats);
    for repeat in 0..config.repeats {
        accs.push(net.evaluate(&test, &spec, &rng.substream(repeat as u64))?);
    }
    let stats = box_stats(&accs)?;
    let row = ResultRow {
        train_intensity: f64::NAN,
        test_intensity: spec.d_add + spec.d_mul,
        metric: "accuracy".to_string(),
        stats,
        diverged: 0,
        seed: config.seed,
        error: None,
    };
    write_results(&[row], config, &cli.out.join("results.csv"))?;
    println!(
        "accuracy median {:.4} over {} repeats ({} images)",
        stats.median,
        config.repeats,
        test.len()
    );
    Ok(())
}

fn esn_train(config: &SweepConfig, cli: &Cli) -> Result<()> {
    let series = integrate(&config.mg, TRAIN_LEN + TEST_LEN)?;
    let (train, test) = split_train_test(&series)?;
    let train = match cli.limit {
        Some(n) if n < train.len() => &train[..n],
        _ => train,
    };

    let mut model = EsnModel::init_reservoir(
        config.reservoir_size,
        config.seed,
        config.spectral_radius,
        config.density,
    )?;
    model.set_noisy_feedback(config.noisy_feedback);
    let train_noise = config.noise_spec(config.train_intensities[0]);
    let mut rng = RngStream::new(config.seed, 1);
    model.train(train, &train_noise, &mut rng, &config.ridge)?;

    let model_path = cli.out.join("model.ckpt");
    model.save(&model_path)?;

    // quick quality readout: noise-free teacher-forced error on the test span
    let mut probe = model.clone();
    let mut open_inputs = vec![train[train.len() - 1]];
    open_inputs.extend_from_slice(&test[..TEST_LEN - 1]);
    let outputs = probe.predict_open_loop(&open_inputs, &NoiseSpec::none(), &mut rng)?;
    println!(
        "trained reservoir of {} on {} samples, clean open-loop rmse {:.3e}",
        config.reservoir_size,
        train.len(),
        rmse(&outputs, test)?
    );
    println!("wrote {}", model_path.display());
    Ok(())
}

fn esn_eval(config: &SweepConfig, cli: &Cli, model_path: &Path) -> Result<()> {
    let mut model = EsnModel::load(model_path)?;
    let series = integrate(&config.mg, TRAIN_LEN + TEST_LEN)?;
    let (train, test) = split_train_test(&series)?;

    // Checkpoints store no reservoir state. Teacher-forcing the training
    // span noise-free rebuilds the exact post-training state when the clean
    // state drives the recursion, because training starts from zero state
    // over the same inputs.
    let mut warm_rng = RngStream::new(config.seed, 1);
    model.predict_open_loop(&train[..TRAIN_LEN - 1], &NoiseSpec::none(), &mut warm_rng)?;

    let mut open_inputs = vec![train[TRAIN_LEN - 1]];
    open_inputs.extend_from_slice(&test[..TEST_LEN - 1]);

    let mut rows = Vec::new();
    for (cell, &test_d) in config.test_intensities.iter().enumerate() {
        let spec = config.noise_spec(test_d);
        let base_rng = RngStream::new(config.seed, cell as u64);
        let mut errors = Vec::with_capacity(config.repeats);
        let mut diverged = 0;
        for repeat in 0..config.repeats {
            let mut m = model.clone();
            let mut rng = base_rng.substream(repeat as u64);
            let e = if config.closed_loop {
                let run =
                    m.predict_closed_loop(&train[TRAIN_LEN - 1..], TEST_LEN, &spec, &mut rng)?;
                diverged += run.diverged_steps;
                rmse(&run.outputs, test)?
            } else {
                rmse(&m.predict_open_loop(&open_inputs, &spec, &mut rng)?, test)?
            };
            errors.push(e);
        }
        let stats = box_stats(&errors)?;
        println!(
            "test D={test_d:.1e}  median rmse {:.4}  diverged steps {diverged}",
            stats.median
        );
        rows.push(ResultRow {
            train_intensity: f64::NAN,
            test_intensity: test_d,
            metric: "rmse".to_string(),
            stats,
            diverged,
            seed: config.seed,
            error: None,
        });
    }
    let path = cli.out.join("results.csv");
    write_results(&rows, config, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn print_summary(rows: &[ResultRow]) {
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        println!("{} of {} cells failed", failed, rows.len());
    }
    for r in rows {
        let note = match &r.error {
            Some(e) => format!("  FAILED: {e}"),
            None if r.diverged > 0 => format!("  diverged steps {}", r.diverged),
            None => String::new(),
        };
        println!(
            "train D={:<9.3e} test D={:<9.3e} {} median {:.4}{note}",
            r.train_intensity, r.test_intensity, r.metric, r.stats.median
        );
    }
}

fn sweep(config: &SweepConfig, cli: &Cli, data: Option<&Path>) -> Result<()> {
    let results_path = cli.out.join("results.csv");
    match config.network {
        Network::Fnn => {
            let data = data.ok_or(Error::InvalidParam {
                name: "data",
                reason: "fnn sweeps need --data pointing at the IDX directory".into(),
            })?;
            let train = load_train_set(data, cli.limit)?;
            let test = load_test_set(data, cli.limit)?;
            let (rows, curves) = run_fnn_sweep(config, &train, &test)?;
            write_results(&rows, config, &results_path)?;
            write_curves(&curves, config, &cli.out.join("curves.csv"))?;
            print_summary(&rows);
        }
        Network::Esn => {
            let rows = run_esn_sweep(config)?;
            write_results(&rows, config, &results_path)?;
            print_summary(&rows);
        }
    }
    println!("wrote {}", results_path.display());
    Ok(())
}
