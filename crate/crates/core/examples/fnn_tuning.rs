//! Scans classifier hyperparameters and prints where training accuracy
//! plateaus under heavy hidden-layer noise, next to the clean baseline.
//!
//!     cargo run --release --example fnn_tuning -- [mnist_dir] [lr,batch,epochs;...]
//!
//! For each combination it trains three nets (clean, additive D=0.5,
//! multiplicative D=0.5, all uncorrelated) and reports the per-epoch
//! training accuracy plus the noise-free test accuracy.

use std::path::Path;
use std::time::Instant;

use noisynets::fnn::{DenseNet, TrainConfig};
use noisynets::mnist::load_mnist_dir;
use noisynets::noise::NoiseSpec;
use noisynets::numerics::RngStream;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let dir = args.get(1).map(String::as_str).unwrap_or("data/mnist");
    let combos = args.get(2).map(String::as_str).unwrap_or("0.1,32,30");

    let (train, test) = load_mnist_dir(Path::new(dir)).expect("mnist");

    for combo in combos.split(';') {
        let parts: Vec<&str> = combo.split(',').collect();
        let lr: f64 = parts[0].parse().expect("lr");
        let batch: usize = parts[1].parse().expect("batch");
        let epochs: usize = parts[2].parse().expect("epochs");
        println!("== lr {lr} batch {batch} epochs {epochs} ==");

        for (tag, spec) in [
            ("clean   ", NoiseSpec::none()),
            ("addU 0.5", NoiseSpec::additive(0.5, false)),
            ("mulU 0.5", NoiseSpec::multiplicative(0.5, false)),
        ] {
            let t0 = Instant::now();
            let cfg = TrainConfig {
                learning_rate: lr,
                batch_size: batch,
                epochs,
                noise: spec,
                seed: 7,
                ..TrainConfig::default()
            };
            let mut net = DenseNet::mnist_default(7);
            let history = net.train(&train, &cfg).expect("train");
            let curve: Vec<String> = history
                .iter()
                .map(|e| format!("{:.3}", e.accuracy))
                .collect();
            let clean_test = net
                .evaluate(&test, &NoiseSpec::none(), &RngStream::new(7, 0))
                .expect("eval");
            println!(
                "{tag} train [{}]  final {:.3}  clean-test {:.3}  ({}s)",
                curve.join(" "),
                history.last().unwrap().accuracy,
                clean_test,
                t0.elapsed().as_secs()
            );
        }
    }
}
