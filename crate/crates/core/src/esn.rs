//! Echo state network with a tanh reservoir, all-ones input weights, and a
//! ridge-trained linear readout predicting the next input sample.
//!
//! Noise is injected into the reservoir outputs each step. By default the
//! clean state drives the next step's recurrence and noise only reaches the
//! readout, matching the update equation read literally. With
//! `noisy_feedback` on, the noisy state recurses instead.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checkpoint::{CheckpointReader, CheckpointWriter};
use crate::error::{Error, Result};
use crate::noise::{apply_noise, NoiseSpec};
pub use crate::numerics::rmse;
use crate::numerics::{dot, spectral_radius, Matrix, RngStream, SPECTRAL_MAX_ITER, SPECTRAL_TOL};

pub const DEFAULT_RESERVOIR_SIZE: usize = 1000;
pub const DEFAULT_SPECTRAL_RADIUS: f64 = 1.2;
pub const DEFAULT_DENSITY: f64 = 1.0;
/// Outputs beyond this magnitude count as diverged and are clipped.
pub const OUTPUT_CLIP: f64 = 100.0;

const CHECKPOINT_TAG: [u8; 4] = *b"ESNC";
const CHECKPOINT_VERSION: u32 = 1;
const INIT_RETRIES: usize = 3;

/// Ridge regression settings for the readout fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RidgeConfig {
    pub lambda: f64,
    /// Initial states dropped before fitting.
    pub washout: usize,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        RidgeConfig {
            lambda: 1e-8,
            washout: 200,
        }
    }
}

impl RidgeConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::InvalidParam {
                name: "lambda",
                reason: format!("must be finite and >= 0, got {}", self.lambda),
            });
        }
        Ok(())
    }
}

/// Both views of one reservoir update.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub clean: Vec<f64>,
    pub noisy: Vec<f64>,
}

/// Self-closed prediction run with its divergence tally.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopRun {
    pub outputs: Vec<f64>,
    /// Steps whose raw output exceeded the clip threshold.
    pub diverged_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsnModel {
    n: usize,
    target_spectral_radius: f64,
    noisy_feedback: bool,
    w_in: Vec<f64>,
    w_res: Matrix,
    w_out: Vec<f64>,
    state: Vec<f64>,
}

impl EsnModel {
    /// Draws a uniform [−1, 1] reservoir at the given density, rescales it to
    /// the target spectral radius, and zeroes readout and state.
    pub fn init_reservoir(n: usize, seed: u64, target_radius: f64, density: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParam {
                name: "n",
                reason: "reservoir needs at least one neuron".into(),
            });
        }
        if !target_radius.is_finite() || target_radius <= 0.0 {
            return Err(Error::InvalidParam {
                name: "target_radius",
                reason: format!("must be finite and positive, got {target_radius}"),
            });
        }
        if !(density > 0.0 && density <= 1.0) {
            return Err(Error::InvalidParam {
                name: "density",
                reason: format!("must be in (0, 1], got {density}"),
            });
        }

        let mut rng = RngStream::new(seed, 0);
        let mut w_res = None;
        for _ in 0..=INIT_RETRIES {
            let raw = if density >= 1.0 {
                Matrix::from_fn(n, n, |_, _| rng.uniform_in(-1.0, 1.0))
            } else {
                Matrix::from_fn(n, n, |_, _| {
                    if rng.uniform() < density {
                        rng.uniform_in(-1.0, 1.0)
                    } else {
                        0.0
                    }
                })
            };
            if raw.data().iter().any(|&v| v != 0.0) {
                w_res = Some(raw);
                break;
            }
        }
        let mut w_res = w_res.ok_or(Error::InvalidParam {
            name: "density",
            reason: "reservoir draw came out all zero after retries".into(),
        })?;

        let raw_radius = spectral_radius(&w_res, SPECTRAL_TOL, SPECTRAL_MAX_ITER)?;
        if raw_radius <= 0.0 {
            return Err(Error::InvalidParam {
                name: "w_res",
                reason: "raw reservoir has zero spectral radius; cannot rescale".into(),
            });
        }
        w_res.scale_mut(target_radius / raw_radius);

        Ok(EsnModel {
            n,
            target_spectral_radius: target_radius,
            noisy_feedback: false,
            w_in: vec![1.0; n],
            w_res,
            w_out: vec![0.0; n],
            state: vec![0.0; n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn target_spectral_radius(&self) -> f64 {
        self.target_spectral_radius
    }

    pub fn noisy_feedback(&self) -> bool {
        self.noisy_feedback
    }

    pub fn set_noisy_feedback(&mut self, on: bool) {
        self.noisy_feedback = on;
    }

    pub fn w_in(&self) -> &[f64] {
        &self.w_in
    }

    pub fn w_res(&self) -> &Matrix {
        &self.w_res
    }

    pub fn w_out(&self) -> &[f64] {
        &self.w_out
    }

    pub fn set_w_out(&mut self, w_out: Vec<f64>) -> Result<()> {
        if w_out.len() != self.n {
            return Err(Error::DimensionMismatch {
                op: "set_w_out",
                expected: format!("{} weights", self.n),
                got: format!("{}", w_out.len()),
            });
        }
        self.w_out = w_out;
        Ok(())
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn reset_state(&mut self) {
        self.state.iter_mut().for_each(|s| *s = 0.0);
    }

    /// Readout of the current state.
    pub fn readout(&self) -> f64 {
        dot(&self.state, &self.w_out)
    }

    /// One reservoir update: clean = tanh(input·w_in + state·w_res), noisy =
    /// the clean state under one fresh noise realization. The stored state
    /// follows the `noisy_feedback` flag.
    pub fn step(
        &mut self,
        input: f64,
        noise: &NoiseSpec,
        rng: &mut RngStream,
    ) -> Result<StepOutput> {
        let mut pre = self.w_res.vecmat(&self.state)?;
        for (p, w) in pre.iter_mut().zip(&self.w_in) {
            *p = libm::tanh(*p + input * w);
        }
        let clean = pre;
        let noisy = apply_noise(&clean, noise, rng)?;
        self.state
            .copy_from_slice(if self.noisy_feedback { &noisy } else { &clean });
        Ok(StepOutput { clean, noisy })
    }

    /// Teacher-forces `inputs[..len−1]` and collects the post-washout noisy
    /// states with their one-step-ahead targets.
    pub fn harvest(
        &mut self,
        inputs: &[f64],
        noise: &NoiseSpec,
        rng: &mut RngStream,
        washout: usize,
    ) -> Result<(Matrix, Vec<f64>)> {
        if inputs.len() < washout + 2 {
            return Err(Error::DimensionMismatch {
                op: "harvest",
                expected: format!("more than washout + 1 = {} inputs", washout + 1),
                got: format!("{}", inputs.len()),
            });
        }
        let rows = inputs.len() - 1 - washout;
        let mut states = Matrix::zeros(rows, self.n);
        let mut targets = Vec::with_capacity(rows);
        for t in 0..inputs.len() - 1 {
            let out = self.step(inputs[t], noise, rng)?;
            if t >= washout {
                states.row_mut(t - washout).copy_from_slice(&out.noisy);
                targets.push(inputs[t + 1]);
            }
        }
        Ok((states, targets))
    }

    /// Harvests under the given noise and fits the readout.
    pub fn train(
        &mut self,
        inputs: &[f64],
        noise: &NoiseSpec,
        rng: &mut RngStream,
        ridge: &RidgeConfig,
    ) -> Result<()> {
        ridge.validate()?;
        self.reset_state();
        let (states, targets) = self.harvest(inputs, noise, rng, ridge.washout)?;
        self.w_out = ridge_readout(&states, &targets, ridge.lambda)?;
        Ok(())
    }

    /// Teacher-forced prediction: one output per consumed input.
    pub fn predict_open_loop(
        &mut self,
        inputs: &[f64],
        noise: &NoiseSpec,
        rng: &mut RngStream,
    ) -> Result<Vec<f64>> {
        let mut outputs = Vec::with_capacity(inputs.len());
        for &u in inputs {
            let out = self.step(u, noise, rng)?;
            outputs.push(dot(&out.noisy, &self.w_out));
        }
        Ok(outputs)
    }

    /// Teacher-forces through `warmup`, then closes the loop. The first
    /// output is the readout after the final warmup step; each later output
    /// comes from feeding the previous one back as input. Outputs past the
    /// clip threshold are counted as diverged, then recorded and fed back in
    /// clipped form.
    pub fn predict_closed_loop(
        &mut self,
        warmup: &[f64],
        steps: usize,
        noise: &NoiseSpec,
        rng: &mut RngStream,
    ) -> Result<ClosedLoopRun> {
        if warmup.is_empty() {
            return Err(Error::InvalidParam {
                name: "warmup",
                reason: "closed-loop prediction needs a nonempty warmup".into(),
            });
        }
        let mut fed = 0.0;
        for &u in warmup {
            let out = self.step(u, noise, rng)?;
            fed = dot(&out.noisy, &self.w_out);
        }
        let mut outputs = Vec::with_capacity(steps);
        let mut diverged_steps = 0;
        for k in 0..steps {
            if k > 0 {
                let out = self.step(fed, noise, rng)?;
                fed = dot(&out.noisy, &self.w_out);
            }
            if !(fed.abs() <= OUTPUT_CLIP) {
                diverged_steps += 1;
                fed = if fed.is_nan() {
                    OUTPUT_CLIP
                } else {
                    fed.clamp(-OUTPUT_CLIP, OUTPUT_CLIP)
                };
            }
            outputs.push(fed);
        }
        Ok(ClosedLoopRun {
            outputs,
            diverged_steps,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = CheckpointWriter::create(path, CHECKPOINT_TAG, CHECKPOINT_VERSION)?;
        w.u64(self.n as u64)?;
        w.f64(self.target_spectral_radius)?;
        w.u8(self.noisy_feedback as u8)?;
        w.f64_slice(&self.w_in)?;
        w.f64_slice(self.w_res.data())?;
        w.f64_slice(&self.w_out)?;
        w.finish()
    }

    /// Loads weights and config; the state starts zeroed.
    pub fn load(path: &Path) -> Result<Self> {
        let mut r = CheckpointReader::open(path, CHECKPOINT_TAG, CHECKPOINT_VERSION)?;
        let n = r.dim("n", 1 << 20)?;
        let target_spectral_radius = r.f64()?;
        let noisy_feedback = r.u8()? != 0;
        let w_in = r.f64_vec(n)?;
        let w_res = Matrix::from_vec(n, n, r.f64_vec(n * n)?)?;
        let w_out = r.f64_vec(n)?;
        Ok(EsnModel {
            n,
            target_spectral_radius,
            noisy_feedback,
            w_in,
            w_res,
            w_out,
            state: vec![0.0; n],
        })
    }
}

/// Solves (SᵀS + λI)w = Sᵀy by Cholesky factorization.
pub fn ridge_readout(states: &Matrix, targets: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if states.rows() != targets.len() || targets.is_empty() {
        return Err(Error::DimensionMismatch {
            op: "ridge_readout",
            expected: format!("targets of length {} (nonzero)", states.rows()),
            got: format!("{}", targets.len()),
        });
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidParam {
            name: "lambda",
            reason: format!("must be finite and >= 0, got {lambda}"),
        });
    }
    let n = states.cols();
    let rows = states.rows();

    // Gram accumulation, upper triangle, blocked over samples so the n×n
    // accumulator streams through cache once per block.
    let mut a = vec![0.0; n * n];
    let block = 32;
    let mut start = 0;
    while start < rows {
        let end = (start + block).min(rows);
        for i in 0..n {
            let acc = &mut a[i * n + i..(i + 1) * n];
            for t in start..end {
                let s = states.row(t);
                let si = s[i];
                if si != 0.0 {
                    for (av, sv) in acc.iter_mut().zip(&s[i..]) {
                        *av += si * sv;
                    }
                }
            }
        }
        start = end;
    }
    for i in 0..n {
        a[i * n + i] += lambda;
        for j in 0..i {
            a[i * n + j] = a[j * n + i];
        }
    }

    let mut b = vec![0.0; n];
    for t in 0..rows {
        let y = targets[t];
        if y != 0.0 {
            for (bv, sv) in b.iter_mut().zip(states.row(t)) {
                *bv += y * sv;
            }
        }
    }

    cholesky_solve_in_place(&mut a, n, &mut b)?;
    Ok(b)
}

/// In-place lower Cholesky factorization and two triangular solves.
fn cholesky_solve_in_place(a: &mut [f64], n: usize, b: &mut [f64]) -> Result<()> {
    for j in 0..n {
        for k in 0..j {
            let (head, tail) = a.split_at_mut(j * n);
            let row_k = &head[k * n..k * n + k];
            let row_j = &tail[..k];
            let s = dot(row_j, row_k);
            tail[k] = (tail[k] - s) / head[k * n + k];
        }
        let row_j = &a[j * n..j * n + j];
        let pivot = a[j * n + j] - dot(row_j, row_j);
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::SingularSystem { col: j, pivot });
        }
        a[j * n + j] = pivot.sqrt();
    }
    // forward: L z = b
    for i in 0..n {
        let s = dot(&a[i * n..i * n + i], &b[..i]);
        b[i] = (b[i] - s) / a[i * n + i];
    }
    // backward: Lᵀ w = z
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_model() -> EsnModel {
        EsnModel::init_reservoir(8, 42, 1.2, 1.0).unwrap()
    }

    #[test]
    fn init_sets_ones_input_and_target_radius() {
        let m = small_model();
        assert!(m.w_in().iter().all(|&w| w == 1.0));
        assert!(m.w_out().iter().all(|&w| w == 0.0));
        assert!(m.state().iter().all(|&s| s == 0.0));
        let measured = spectral_radius(m.w_res(), SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
        assert!(
            (measured - 1.2).abs() < 1e-4,
            "rescaled radius {measured}"
        );
    }

    #[test]
    fn init_rejects_bad_params() {
        assert!(EsnModel::init_reservoir(0, 1, 1.2, 1.0).is_err());
        assert!(EsnModel::init_reservoir(4, 1, 0.0, 1.0).is_err());
        assert!(EsnModel::init_reservoir(4, 1, 1.2, 0.0).is_err());
        assert!(EsnModel::init_reservoir(4, 1, 1.2, 1.5).is_err());
    }

    #[test]
    fn zero_input_zero_state_stays_zero() {
        let mut m = small_model();
        let out = m
            .step(0.0, &NoiseSpec::none(), &mut RngStream::new(0, 0))
            .unwrap();
        assert!(out.clean.iter().all(|&v| v == 0.0));
        assert!(out.noisy.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_noise_views_are_identical() {
        let mut m = small_model();
        let mut rng = RngStream::new(1, 1);
        let out = m.step(0.7, &NoiseSpec::none(), &mut rng).unwrap();
        for (c, y) in out.clean.iter().zip(&out.noisy) {
            assert_eq!(c.to_bits(), y.to_bits());
        }
        assert!(out.clean.iter().all(|&v| v.abs() <= 1.0));
    }

    #[test]
    fn clean_feedback_stores_clean_state() {
        let mut m = small_model();
        m.set_noisy_feedback(false);
        let mut rng = RngStream::new(2, 0);
        let spec = NoiseSpec::multiplicative(0.3, true);
        let out = m.step(0.5, &spec, &mut rng).unwrap();
        for (s, c) in m.state().iter().zip(&out.clean) {
            assert_eq!(s.to_bits(), c.to_bits());
        }
        let out2 = m.step(0.5, &spec, &mut rng).unwrap();
        assert_ne!(out2.clean, out2.noisy);
    }

    #[test]
    fn harvest_boundary_and_alignment() {
        let mut m = small_model();
        let inputs: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let mut rng = RngStream::new(3, 0);
        let (states, targets) = m
            .harvest(&inputs, &NoiseSpec::none(), &mut rng, inputs.len() - 2)
            .unwrap();
        assert_eq!(states.rows(), 1);
        assert_eq!(targets, vec![inputs[9]]);

        m.reset_state();
        let mut rng = RngStream::new(3, 0);
        let (_, targets) = m.harvest(&inputs, &NoiseSpec::none(), &mut rng, 4).unwrap();
        assert_eq!(targets.as_slice(), &inputs[5..]);

        assert!(m
            .harvest(&inputs[..3], &NoiseSpec::none(), &mut rng, 2)
            .is_err());
    }

    #[test]
    fn noise_off_harvest_ignores_rng_seed() {
        let inputs: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut m1 = small_model();
        let mut m2 = small_model();
        let (s1, t1) = m1
            .harvest(&inputs, &NoiseSpec::none(), &mut RngStream::new(1, 0), 3)
            .unwrap();
        let (s2, t2) = m2
            .harvest(&inputs, &NoiseSpec::none(), &mut RngStream::new(999, 7), 3)
            .unwrap();
        assert_eq!(s1, s2);
        assert_eq!(t1, t2);
    }

    #[test]
    fn ridge_identity_recovers_targets() {
        let states = Matrix::identity(4);
        let targets = vec![0.5, -1.0, 2.0, 0.0];
        let w = ridge_readout(&states, &targets, 0.0).unwrap();
        for (a, b) in w.iter().zip(&targets) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ridge_huge_lambda_shrinks_to_zero() {
        let mut rng = RngStream::new(4, 0);
        let states = Matrix::from_fn(30, 5, |_, _| rng.uniform_in(-1.0, 1.0));
        let targets: Vec<f64> = (0..30).map(|i| (i as f64 * 0.1).cos()).collect();
        let w = ridge_readout(&states, &targets, 1e12).unwrap();
        let sty = states.transpose().matvec(&targets).unwrap();
        let norm_w = dot(&w, &w).sqrt();
        let norm_sty = dot(&sty, &sty).sqrt();
        assert!(norm_w < 1e-6 * norm_sty, "{norm_w} vs {norm_sty}");
    }

    #[test]
    fn ridge_rank_deficient_at_zero_lambda_advises() {
        // identical columns make SᵀS singular
        let states = Matrix::from_fn(6, 3, |r, _| r as f64);
        let targets = vec![1.0; 6];
        match ridge_readout(&states, &targets, 0.0) {
            Err(e @ Error::SingularSystem { .. }) => {
                assert!(e.to_string().contains("lambda"));
            }
            other => panic!("expected singular system, got {other:?}"),
        }
        assert!(ridge_readout(&states, &targets, 1e-6).is_ok());
    }

    #[test]
    fn closed_loop_zero_steps_is_empty() {
        let mut m = small_model();
        let run = m
            .predict_closed_loop(&[0.1], 0, &NoiseSpec::none(), &mut RngStream::new(0, 0))
            .unwrap();
        assert!(run.outputs.is_empty());
        assert_eq!(run.diverged_steps, 0);
        assert!(m
            .predict_closed_loop(&[], 5, &NoiseSpec::none(), &mut RngStream::new(0, 0))
            .is_err());
    }

    #[test]
    fn zero_readout_gives_zero_outputs() {
        let mut m = small_model();
        let outs = m
            .predict_open_loop(&[0.2, 0.4], &NoiseSpec::none(), &mut RngStream::new(0, 0))
            .unwrap();
        assert_eq!(outs, vec![0.0, 0.0]);
    }

    #[test]
    fn divergent_outputs_are_clipped_and_counted() {
        let mut m = small_model();
        m.set_w_out(vec![1e6; 8]).unwrap();
        let run = m
            .predict_closed_loop(&[1.0], 20, &NoiseSpec::none(), &mut RngStream::new(0, 0))
            .unwrap();
        assert!(run.diverged_steps > 0);
        assert!(run.outputs.iter().all(|o| o.abs() <= OUTPUT_CLIP));
    }
}
