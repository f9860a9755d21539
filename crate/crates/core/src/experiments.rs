//! Sweep protocols: train networks across a grid of noise intensities,
//! evaluate under test noise, and emit box statistics as plot-ready CSV.
//!
//! Every task derives its random stream from (sweep seed, cell index,
//! repeat index), so results do not depend on the execution schedule.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::esn::{EsnModel, RidgeConfig};
use crate::fnn::{DenseNet, EpochStats, TrainConfig};
use crate::mackey_glass::{integrate, split_train_test, MgParams, TEST_LEN, TRAIN_LEN};
use crate::mnist::LabeledImageSet;
use crate::noise::NoiseSpec;
use crate::numerics::{rmse, RngStream};

/// Training rng streams sit far above the cell-indexed evaluation streams.
const TRAIN_STREAM_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Network {
    Fnn,
    Esn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    Add,
    Mul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correlation {
    Corr,
    Uncorr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub network: Network,
    pub noise_family: NoiseFamily,
    pub correlation: Correlation,
    pub train_intensities: Vec<f64>,
    pub test_intensities: Vec<f64>,
    /// K repeats per cell; the reference protocol uses 100 for ESN runs.
    pub repeats: usize,
    /// ESN only: evaluate self-closed prediction instead of teacher-forced.
    pub closed_loop: bool,
    /// Evaluate the full train x test grid instead of paired intensities.
    pub cross: bool,
    pub seed: u64,
    pub reservoir_size: usize,
    pub spectral_radius: f64,
    pub density: f64,
    pub noisy_feedback: bool,
    pub fnn: TrainConfig,
    pub ridge: RidgeConfig,
    pub mg: MgParams,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            network: Network::Esn,
            noise_family: NoiseFamily::Add,
            correlation: Correlation::Uncorr,
            train_intensities: vec![0.0, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2],
            test_intensities: vec![1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2],
            repeats: 100,
            closed_loop: false,
            cross: false,
            seed: 0,
            reservoir_size: crate::esn::DEFAULT_RESERVOIR_SIZE,
            spectral_radius: crate::esn::DEFAULT_SPECTRAL_RADIUS,
            density: crate::esn::DEFAULT_DENSITY,
            noisy_feedback: false,
            fnn: TrainConfig::default(),
            ridge: RidgeConfig::default(),
            mg: MgParams::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, list) in [
            ("train_intensities", &self.train_intensities),
            ("test_intensities", &self.test_intensities),
        ] {
            if list.is_empty() {
                return Err(Error::InvalidParam {
                    name,
                    reason: "must be nonempty".into(),
                });
            }
            if list.iter().any(|d| !d.is_finite() || *d < 0.0) {
                return Err(Error::InvalidParam {
                    name,
                    reason: "entries must be finite and >= 0".into(),
                });
            }
        }
        if self.repeats == 0 {
            return Err(Error::InvalidParam {
                name: "repeats",
                reason: "must be at least 1".into(),
            });
        }
        self.fnn.validate()?;
        self.ridge.validate()?;
        self.mg.validate()
    }

    /// The noise placement for one intensity under this sweep's family.
    pub fn noise_spec(&self, intensity: f64) -> NoiseSpec {
        let corr = self.correlation == Correlation::Corr;
        match self.noise_family {
            NoiseFamily::Add => NoiseSpec::additive(intensity, corr),
            NoiseFamily::Mul => NoiseSpec::multiplicative(intensity, corr),
        }
    }
}

/// Five-number summary plus mean, as drawn in box plots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

impl BoxStats {
    pub fn scalar(value: f64) -> BoxStats {
        BoxStats {
            min: value,
            q1: value,
            median: value,
            q3: value,
            max: value,
            mean: value,
            count: 1,
        }
    }
}

/// Quartiles by linear interpolation between order statistics.
pub fn box_stats(samples: &[f64]) -> Result<BoxStats> {
    if samples.is_empty() {
        return Err(Error::InvalidParam {
            name: "samples",
            reason: "box statistics need at least one sample".into(),
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let quantile = |p: f64| -> f64 {
        let h = (sorted.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        let frac = h - lo as f64;
        if lo + 1 < sorted.len() {
            sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
        } else {
            sorted[lo]
        }
    };
    Ok(BoxStats {
        min: sorted[0],
        q1: quantile(0.25),
        median: quantile(0.5),
        q3: quantile(0.75),
        max: sorted[sorted.len() - 1],
        mean: samples.iter().sum::<f64>() / samples.len() as f64,
        count: samples.len(),
    })
}

/// One evaluated grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub train_intensity: f64,
    pub test_intensity: f64,
    pub metric: String,
    pub stats: BoxStats,
    pub diverged: usize,
    pub seed: u64,
    pub error: Option<String>,
}

/// One training-curve point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub train_intensity: f64,
    pub epoch: usize,
    pub accuracy: f64,
    pub mean_loss: f64,
}

fn failed_row(config: &SweepConfig, train_d: f64, test_d: f64, metric: &str, e: &Error) -> ResultRow {
    ResultRow {
        train_intensity: train_d,
        test_intensity: test_d,
        metric: metric.to_string(),
        stats: BoxStats::scalar(f64::NAN),
        diverged: 0,
        seed: config.seed,
        error: Some(e.to_string()),
    }
}

/// Trains one classifier per train intensity from shared initial weights,
/// then scores each against every test intensity. Returns result rows and
/// per-epoch training curves.
pub fn run_fnn_sweep(
    config: &SweepConfig,
    train_data: &LabeledImageSet,
    test_data: &LabeledImageSet,
) -> Result<(Vec<ResultRow>, Vec<CurveRow>)> {
    config.validate()?;
    let base = DenseNet::mnist_default(config.seed);
    let n_tests = config.test_intensities.len();

    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for (ti, &train_d) in config.train_intensities.iter().enumerate() {
        let mut net = base.clone();
        let cfg = TrainConfig {
            noise: config.noise_spec(train_d),
            ..config.fnn
        };
        let history: Vec<EpochStats> = match net.train(train_data, &cfg) {
            Ok(h) => h,
            Err(e) => {
                for (si, &test_d) in config.test_intensities.iter().enumerate() {
                    let _ = si;
                    rows.push(failed_row(config, train_d, test_d, "accuracy", &e));
                }
                continue;
            }
        };
        for (epoch, stats) in history.iter().enumerate() {
            curves.push(CurveRow {
                train_intensity: train_d,
                epoch,
                accuracy: stats.accuracy,
                mean_loss: stats.mean_loss,
            });
        }

        let cells: Vec<ResultRow> = config
            .test_intensities
            .par_iter()
            .enumerate()
            .map(|(si, &test_d)| {
                let cell = (ti * n_tests + si) as u64;
                let spec = config.noise_spec(test_d);
                let base_rng = RngStream::new(config.seed, cell);
                let mut accs = Vec::with_capacity(config.repeats);
                for repeat in 0..config.repeats {
                    match net.evaluate(test_data, &spec, &base_rng.substream(repeat as u64)) {
                        Ok(a) => accs.push(a),
                        Err(e) => return failed_row(config, train_d, test_d, "accuracy", &e),
                    }
                }
                ResultRow {
                    train_intensity: train_d,
                    test_intensity: test_d,
                    metric: "accuracy".to_string(),
                    stats: box_stats(&accs).expect("repeats >= 1"),
                    diverged: 0,
                    seed: config.seed,
                    error: None,
                }
            })
            .collect();
        rows.extend(cells);
    }
    Ok((rows, curves))
}

/// Trains a clean reservoir plus one per nonzero train intensity from the
/// same initialization, then runs K repeats per paired (or crossed) test
/// intensity. The trained state carries over from harvest into evaluation,
/// and every repeat clones it.
pub fn run_esn_sweep(config: &SweepConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let series = integrate(&config.mg, TRAIN_LEN + TEST_LEN)?;
    let (train, test) = split_train_test(&series)?;

    let mut template = EsnModel::init_reservoir(
        config.reservoir_size,
        config.seed,
        config.spectral_radius,
        config.density,
    )?;
    template.set_noisy_feedback(config.noisy_feedback);

    // clean model first, then one per nonzero train intensity
    let mut train_ds: Vec<f64> = vec![0.0];
    train_ds.extend(config.train_intensities.iter().copied().filter(|d| *d > 0.0));

    let mut models = Vec::with_capacity(train_ds.len());
    for (mi, &train_d) in train_ds.iter().enumerate() {
        let mut model = template.clone();
        let mut rng = RngStream::new(config.seed, TRAIN_STREAM_BASE + mi as u64);
        model.train(train, &config.noise_spec(train_d), &mut rng, &config.ridge)?;
        models.push(model);
    }

    let mut open_inputs = Vec::with_capacity(TEST_LEN);
    open_inputs.push(train[TRAIN_LEN - 1]);
    open_inputs.extend_from_slice(&test[..TEST_LEN - 1]);

    let mut cells = Vec::new();
    for (mi, &train_d) in train_ds.iter().enumerate() {
        for &test_d in &config.test_intensities {
            // paired protocol: noise-trained models face their own intensity
            if !config.cross && train_d > 0.0 && train_d != test_d {
                continue;
            }
            cells.push((mi, train_d, test_d));
        }
    }

    let rows: Vec<ResultRow> = cells
        .par_iter()
        .enumerate()
        .map(|(cell, &(mi, train_d, test_d))| {
            let spec = config.noise_spec(test_d);
            let base_rng = RngStream::new(config.seed, cell as u64);
            let mut errors = Vec::with_capacity(config.repeats);
            let mut diverged = 0;
            for repeat in 0..config.repeats {
                let mut model = models[mi].clone();
                let mut rng = base_rng.substream(repeat as u64);
                let run = if config.closed_loop {
                    match model.predict_closed_loop(&train[TRAIN_LEN - 1..], TEST_LEN, &spec, &mut rng)
                    {
                        Ok(run) => {
                            diverged += run.diverged_steps;
                            rmse(&run.outputs, test)
                        }
                        Err(e) => Err(e),
                    }
                } else {
                    model
                        .predict_open_loop(&open_inputs, &spec, &mut rng)
                        .and_then(|outputs| rmse(&outputs, test))
                };
                match run {
                    Ok(e) => errors.push(e),
                    Err(e) => return failed_row(config, train_d, test_d, "rmse", &e),
                }
            }
            ResultRow {
                train_intensity: train_d,
                test_intensity: test_d,
                metric: "rmse".to_string(),
                stats: box_stats(&errors).expect("repeats >= 1"),
                diverged,
                seed: config.seed,
                error: None,
            }
        })
        .collect();
    Ok(rows)
}

const RESULTS_HEADER: &str =
    "train_intensity,test_intensity,metric,min,q1,median,q3,max,mean,count,diverged,seed,status";
const CURVES_HEADER: &str = "train_intensity,epoch,accuracy,mean_loss";

fn config_comment(config: &SweepConfig) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "# version: {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "# config: {}", serde_json::to_string(config)?);
    Ok(out)
}

fn sanitize(message: &str) -> String {
    message.replace(['\n', ','], ";")
}

/// Fixed-column CSV; identical rows produce identical bytes.
pub fn write_results(rows: &[ResultRow], config: &SweepConfig, path: &Path) -> Result<()> {
    let mut out = config_comment(config)?;
    let _ = writeln!(out, "{RESULTS_HEADER}");
    for r in rows {
        let status = match &r.error {
            None => "ok".to_string(),
            Some(e) => format!("failed: {}", sanitize(e)),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.train_intensity,
            r.test_intensity,
            r.metric,
            r.stats.min,
            r.stats.q1,
            r.stats.median,
            r.stats.q3,
            r.stats.max,
            r.stats.mean,
            r.stats.count,
            r.diverged,
            r.seed,
            status
        );
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn write_curves(curves: &[CurveRow], config: &SweepConfig, path: &Path) -> Result<()> {
    let mut out = config_comment(config)?;
    let _ = writeln!(out, "{CURVES_HEADER}");
    for c in curves {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            c.train_intensity, c.epoch, c.accuracy, c.mean_loss
        );
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// The exact configuration a run used, echoed as pretty JSON.
pub fn write_config_echo(config: &SweepConfig, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(config)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path.display().to_string(), e))
}

/// Parses a `write_results` file back into rows, skipping comments.
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.is_empty() || line == RESULTS_HEADER {
            continue;
        }
        let fields: Vec<&str> = line.splitn(13, ',').collect();
        if fields.len() != 13 {
            return Err(Error::InvalidParam {
                name: "results_csv",
                reason: format!("expected 13 fields, got {}: {line}", fields.len()),
            });
        }
        let num = |i: usize| -> Result<f64> {
            fields[i].parse().map_err(|_| Error::InvalidParam {
                name: "results_csv",
                reason: format!("bad number in column {i}: {}", fields[i]),
            })
        };
        let int = |i: usize| -> Result<usize> {
            fields[i].parse().map_err(|_| Error::InvalidParam {
                name: "results_csv",
                reason: format!("bad count in column {i}: {}", fields[i]),
            })
        };
        rows.push(ResultRow {
            train_intensity: num(0)?,
            test_intensity: num(1)?,
            metric: fields[2].to_string(),
            stats: BoxStats {
                min: num(3)?,
                q1: num(4)?,
                median: num(5)?,
                q3: num(6)?,
                max: num(7)?,
                mean: num(8)?,
                count: int(9)?,
            },
            diverged: int(10)?,
            seed: int(11)? as u64,
            error: match fields[12] {
                "ok" => None,
                other => Some(other.trim_start_matches("failed: ").to_string()),
            },
        });
    }
    Ok(rows)
}
