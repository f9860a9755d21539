use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Logistic sigmoid. Saturates cleanly: returns 0.0 / 1.0 for large |x|.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

/// Softmax with max-shift; invariant to adding a constant to every logit.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::InvalidParam {
            name: "logits",
            reason: "softmax of empty slice".into(),
        });
    }
    if logits.iter().any(|z| z.is_nan()) {
        return Err(Error::NonFinite { op: "softmax" });
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::INFINITY {
        return Err(Error::NonFinite { op: "softmax" });
    }
    let exps: Vec<f64> = logits.iter().map(|&z| libm::exp(z - max)).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Elementwise activation used by network layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply_scalar(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => tanh(x),
        }
    }

    pub fn apply(self, xs: &mut [f64]) {
        for x in xs {
            *x = self.apply_scalar(*x);
        }
    }

    /// Derivative expressed through the activation value y = f(x).
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
        }
    }
}
