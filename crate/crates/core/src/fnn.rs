//! Feedforward MNIST classifier with noise injected into the hidden layer.
//!
//! The default shape is 784-20-10: sigmoid hidden units, softmax output,
//! cross-entropy loss, plain minibatch gradient descent. Noise hits the
//! hidden activations in the forward pass and the backward pass
//! differentiates through the realized draws: the multiplicative gain scales
//! the gradient path, additive offsets drop out of it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checkpoint::{CheckpointReader, CheckpointWriter};
use crate::error::{Error, Result};
use crate::mnist::LabeledImageSet;
use crate::noise::{NoiseDraw, NoiseSpec};
use crate::numerics::{dot, sigmoid, softmax, Matrix, RngStream};

pub const INPUT_DIM: usize = 784;
pub const HIDDEN_DIM: usize = 20;
pub const OUTPUT_DIM: usize = 10;

const CHECKPOINT_TAG: [u8; 4] = *b"FNNC";
const CHECKPOINT_VERSION: u32 = 1;
/// Weight init draws on this stream id, training consumes the next one.
const INIT_STREAM: u64 = 0;
const TRAIN_STREAM: u64 = 1;

/// Gradient-descent settings; defaults reach the high-80s on clean MNIST.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub noise: NoiseSpec,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            learning_rate: 0.1,
            batch_size: 32,
            noise: NoiseSpec::none(),
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidParam {
                name: "epochs",
                reason: "must be at least 1".into(),
            });
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::InvalidParam {
                name: "learning_rate",
                reason: format!("must be finite and >= 0, got {}", self.learning_rate),
            });
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParam {
                name: "batch_size",
                reason: "must be at least 1".into(),
            });
        }
        self.noise.validate()
    }
}

/// Training-condition accuracy and mean loss for one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub accuracy: f64,
    pub mean_loss: f64,
}

/// All three layer views of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub hidden_clean: Vec<f64>,
    pub hidden_noisy: Vec<f64>,
    pub output: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    w_in: Matrix,
    w_out: Matrix,
}

/// Index of the largest component, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

impl DenseNet {
    /// Glorot-uniform initialization: each layer uniform in
    /// ±sqrt(6 / (fan_in + fan_out)).
    pub fn new(input_dim: usize, hidden_dim: usize, output_dim: usize, seed: u64) -> Result<Self> {
        for (name, dim) in [
            ("input_dim", input_dim),
            ("hidden_dim", hidden_dim),
            ("output_dim", output_dim),
        ] {
            if dim == 0 {
                return Err(Error::InvalidParam {
                    name,
                    reason: "must be at least 1".into(),
                });
            }
        }
        let mut rng = RngStream::new(seed, INIT_STREAM);
        let mut glorot = |rows: usize, cols: usize| {
            let limit = libm::sqrt(6.0 / (rows + cols) as f64);
            Matrix::from_fn(rows, cols, |_, _| rng.uniform_in(-limit, limit))
        };
        let w_in = glorot(input_dim, hidden_dim);
        let w_out = glorot(hidden_dim, output_dim);
        Ok(DenseNet { w_in, w_out })
    }

    /// The reference-scale 784-20-10 classifier.
    pub fn mnist_default(seed: u64) -> Self {
        DenseNet::new(INPUT_DIM, HIDDEN_DIM, OUTPUT_DIM, seed).expect("fixed dims are valid")
    }

    pub fn from_weights(w_in: Matrix, w_out: Matrix) -> Result<Self> {
        if w_in.cols() != w_out.rows() {
            return Err(Error::DimensionMismatch {
                op: "DenseNet::from_weights",
                expected: format!("w_out with {} rows", w_in.cols()),
                got: format!("{} rows", w_out.rows()),
            });
        }
        Ok(DenseNet { w_in, w_out })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.w_in.rows(), self.w_in.cols(), self.w_out.cols())
    }

    pub fn w_in(&self) -> &Matrix {
        &self.w_in
    }

    pub fn w_out(&self) -> &Matrix {
        &self.w_out
    }

    fn hidden_clean(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut h = self.w_in.vecmat(input)?;
        for v in h.iter_mut() {
            *v = sigmoid(*v);
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { op: "hidden layer" });
        }
        Ok(h)
    }

    fn output_from_hidden(&self, hidden_noisy: &[f64]) -> Result<Vec<f64>> {
        let z = self.w_out.vecmat(hidden_noisy)?;
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { op: "output layer" });
        }
        softmax(&z)
    }

    /// Eq.-by-eq forward pass; the noise draw is fresh per call.
    pub fn forward(
        &self,
        input: &[f64],
        noise: &NoiseSpec,
        rng: &mut RngStream,
    ) -> Result<ForwardPass> {
        let hidden_clean = self.hidden_clean(input)?;
        let draw = NoiseDraw::sample(noise, hidden_clean.len(), rng)?;
        let hidden_noisy = draw.apply(&hidden_clean)?;
        let output = self.output_from_hidden(&hidden_noisy)?;
        Ok(ForwardPass {
            hidden_clean,
            hidden_noisy,
            output,
        })
    }

    /// One minibatch update; returns (mean loss, correct predictions).
    fn batch_update(
        &mut self,
        data: &LabeledImageSet,
        indices: &[usize],
        config: &TrainConfig,
        rng: &mut RngStream,
    ) -> Result<(f64, usize)> {
        if indices.is_empty() {
            return Err(Error::InvalidParam {
                name: "batch",
                reason: "must be nonempty".into(),
            });
        }
        let (n_in, n_hid, n_out) = self.dims();
        let mut g_in = vec![0.0; n_in * n_hid];
        let mut g_out = vec![0.0; n_hid * n_out];
        let mut dz = vec![0.0; n_out];
        let mut dh = vec![0.0; n_hid];
        let mut loss_sum = 0.0;
        let mut correct = 0;

        for &idx in indices {
            let x = data.image(idx);
            let label = data.label(idx) as usize;

            let h = self.hidden_clean(x)?;
            let draw = NoiseDraw::sample(&config.noise, n_hid, rng)?;
            let ht = draw.apply(&h)?;
            let p = self.output_from_hidden(&ht)?;

            let loss = -libm::log(p[label]);
            if !loss.is_finite() {
                return Err(Error::NonFinite {
                    op: "cross-entropy loss",
                });
            }
            loss_sum += loss;
            if argmax(&p) == label {
                correct += 1;
            }

            // softmax + cross-entropy: dz = p - onehot(label)
            dz.copy_from_slice(&p);
            dz[label] -= 1.0;

            for (i, &hti) in ht.iter().enumerate() {
                if hti != 0.0 {
                    for (g, &d) in g_out[i * n_out..(i + 1) * n_out].iter_mut().zip(&dz) {
                        *g += hti * d;
                    }
                }
            }

            // gradient flows through the realized gain; offsets drop out
            for i in 0..n_hid {
                let s = dot(self.w_out.row(i), &dz) * draw.gain(i);
                dh[i] = s * h[i] * (1.0 - h[i]);
            }

            for (r, &xr) in x.iter().enumerate() {
                if xr != 0.0 {
                    for (g, &d) in g_in[r * n_hid..(r + 1) * n_hid].iter_mut().zip(&dh) {
                        *g += xr * d;
                    }
                }
            }
        }

        let scale = config.learning_rate / indices.len() as f64;
        for (w, g) in self.w_in.data_mut().iter_mut().zip(&g_in) {
            *w -= scale * g;
        }
        for (w, g) in self.w_out.data_mut().iter_mut().zip(&g_out) {
            *w -= scale * g;
        }
        Ok((loss_sum / indices.len() as f64, correct))
    }

    /// One minibatch gradient-descent step; returns the mean cross-entropy
    /// loss under the realized noise draws.
    pub fn train_step(
        &mut self,
        data: &LabeledImageSet,
        indices: &[usize],
        config: &TrainConfig,
        rng: &mut RngStream,
    ) -> Result<f64> {
        config.validate()?;
        let (loss, _) = self.batch_update(data, indices, config, rng)?;
        Ok(loss)
    }

    /// Full training run with a seeded shuffle per epoch. Accuracy and loss
    /// are accumulated from the training forward passes themselves, so they
    /// reflect the configured noise.
    pub fn train(
        &mut self,
        data: &LabeledImageSet,
        config: &TrainConfig,
    ) -> Result<Vec<EpochStats>> {
        config.validate()?;
        if data.is_empty() {
            return Err(Error::InvalidParam {
                name: "data",
                reason: "training set must be nonempty".into(),
            });
        }
        let mut rng = RngStream::new(config.seed, TRAIN_STREAM);
        let mut indices: Vec<usize> = (0..data.len()).collect();
        let mut history = Vec::with_capacity(config.epochs);
        for _ in 0..config.epochs {
            if config.shuffle {
                rng.shuffle(&mut indices);
            }
            let mut loss_sum = 0.0;
            let mut correct = 0;
            for batch in indices.chunks(config.batch_size) {
                let (mean_loss, c) = self.batch_update(data, batch, config, &mut rng)?;
                loss_sum += mean_loss * batch.len() as f64;
                correct += c;
            }
            history.push(EpochStats {
                accuracy: correct as f64 / data.len() as f64,
                mean_loss: loss_sum / data.len() as f64,
            });
        }
        Ok(history)
    }

    /// Fraction of examples whose argmax matches the label, with noise
    /// redrawn per example on a stream derived from the example index, so
    /// the result does not depend on evaluation order.
    pub fn evaluate(
        &self,
        data: &LabeledImageSet,
        noise: &NoiseSpec,
        rng: &RngStream,
    ) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::InvalidParam {
                name: "data",
                reason: "evaluation set must be nonempty".into(),
            });
        }
        let mut correct = 0;
        for idx in 0..data.len() {
            let mut r = rng.substream(idx as u64);
            let pass = self.forward(data.image(idx), noise, &mut r)?;
            if argmax(&pass.output) == data.label(idx) as usize {
                correct += 1;
            }
        }
        Ok(correct as f64 / data.len() as f64)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = CheckpointWriter::create(path, CHECKPOINT_TAG, CHECKPOINT_VERSION)?;
        w.u64(self.w_in.rows() as u64)?;
        w.u64(self.w_in.cols() as u64)?;
        w.u64(self.w_out.cols() as u64)?;
        w.f64_slice(self.w_in.data())?;
        w.f64_slice(self.w_out.data())?;
        w.finish()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = CheckpointReader::open(path, CHECKPOINT_TAG, CHECKPOINT_VERSION)?;
        let n_in = r.dim("input_dim", 1 << 24)?;
        let n_hid = r.dim("hidden_dim", 1 << 20)?;
        let n_out = r.dim("output_dim", 1 << 20)?;
        let w_in = Matrix::from_vec(n_in, n_hid, r.f64_vec(n_in * n_hid)?)?;
        let w_out = Matrix::from_vec(n_hid, n_out, r.f64_vec(n_hid * n_out)?)?;
        DenseNet::from_weights(w_in, w_out)
    }
}
