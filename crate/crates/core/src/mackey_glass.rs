//! Mackey-Glass delay differential equation
//!
//! ```text
//! du/dt = beta·u(t−tau) / (1 + u(t−tau)^n) − gamma·u(t)
//! ```
//!
//! integrated with fixed-step RK4. Delayed values at half-steps come from
//! linear interpolation of the stored history, which limits the formal order
//! to two; dt = 0.1 keeps the step error well below the noise intensities
//! under study.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRAIN_LEN: usize = 20_000;
pub const TEST_LEN: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MgParams {
    pub beta: f64,
    pub gamma: f64,
    pub tau: f64,
    pub n: f64,
    pub dt: f64,
    /// Time units discarded before sampling starts.
    pub transient: f64,
    /// Constant value filling the history buffer on (−tau, 0).
    pub history: f64,
    /// Value at t = 0; the default nudges off the constant history so the
    /// trajectory enters the chaotic attractor.
    pub initial: f64,
}

impl Default for MgParams {
    fn default() -> Self {
        MgParams {
            beta: 0.2,
            gamma: 0.1,
            tau: 17.0,
            n: 10.0,
            dt: 0.1,
            transient: 1000.0,
            history: 1.2,
            initial: 1.21,
        }
    }
}

impl MgParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("tau", self.tau),
            ("n", self.n),
            ("dt", self.dt),
            ("transient", self.transient),
            ("history", self.history),
            ("initial", self.initial),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParam {
                    name,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        if self.dt <= 0.0 {
            return Err(Error::InvalidParam {
                name: "dt",
                reason: format!("must be positive, got {}", self.dt),
            });
        }
        if self.transient < 0.0 {
            return Err(Error::InvalidParam {
                name: "transient",
                reason: "must be >= 0".into(),
            });
        }
        let steps = self.tau / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::InvalidParam {
                name: "tau",
                reason: format!("tau/dt = {steps} must be an integer number of steps"),
            });
        }
        if steps.round() < 1.0 {
            return Err(Error::InvalidParam {
                name: "tau",
                reason: "delay must span at least one step".into(),
            });
        }
        Ok(())
    }

    fn delay_steps(&self) -> usize {
        (self.tau / self.dt).round() as usize
    }

    fn transient_steps(&self) -> usize {
        (self.transient / self.dt).round() as usize
    }
}

/// Evenly sampled scalar series with its generating parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub dt: f64,
    pub params: MgParams,
}

/// Integrates the equation and returns `length` post-transient samples,
/// the first one dt after the transient cutoff.
pub fn integrate(params: &MgParams, length: usize) -> Result<TimeSeries> {
    params.validate()?;
    let delay = params.delay_steps();
    let n_transient = params.transient_steps();
    let total = n_transient + length;

    // flat history-plus-trajectory buffer; index `delay` is t = 0
    let mut buf = Vec::with_capacity(delay + 1 + total);
    buf.resize(delay, params.history);
    buf.push(params.initial);

    let f = |u: f64, u_delayed: f64| {
        params.beta * u_delayed / (1.0 + libm::pow(u_delayed, params.n)) - params.gamma * u
    };

    let dt = params.dt;
    for step in 0..total {
        let i = buf.len() - 1;
        let u = buf[i];
        let ud0 = buf[i - delay];
        let ud1 = buf[i - delay + 1];
        let udh = 0.5 * (ud0 + ud1);
        let k1 = f(u, ud0);
        let k2 = f(u + 0.5 * dt * k1, udh);
        let k3 = f(u + 0.5 * dt * k2, udh);
        let k4 = f(u + dt * k3, ud1);
        let next = u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !next.is_finite() {
            return Err(Error::Diverged { step });
        }
        buf.push(next);
    }

    Ok(TimeSeries {
        values: buf.split_off(delay + 1 + n_transient),
        dt,
        params: *params,
    })
}

/// First 20,000 samples for training, the following 100 for testing.
pub fn split_train_test(series: &TimeSeries) -> Result<(&[f64], &[f64])> {
    let need = TRAIN_LEN + TEST_LEN;
    if series.values.len() < need {
        return Err(Error::DimensionMismatch {
            op: "split_train_test",
            expected: format!("at least {need} samples"),
            got: format!("{}", series.values.len()),
        });
    }
    Ok((
        &series.values[..TRAIN_LEN],
        &series.values[TRAIN_LEN..need],
    ))
}
