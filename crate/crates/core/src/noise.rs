//! Gaussian noise injected into a layer's output vector.
//!
//! A noisy read of a vector x is
//!
//! ```text
//! y_i = x_i · (1 + sqrt(2·d_mul)·ξM_i) + sqrt(2·d_add)·ξA_i
//! ```
//!
//! with ξ ~ N(0, 1), so each component contributes variance 2D. A correlated
//! component shares one draw across every index of the call; an uncorrelated
//! component draws per index. Every call represents one time step or one
//! input presentation and uses fresh draws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// Intensities and correlation flags for one noise configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Additive intensity D_A; contributes offset variance 2·d_add.
    pub d_add: f64,
    /// Multiplicative intensity D_M; contributes gain variance 2·d_mul.
    pub d_mul: f64,
    /// Share one additive draw across the whole layer.
    pub corr_add: bool,
    /// Share one multiplicative draw across the whole layer.
    pub corr_mul: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::none()
    }
}

impl NoiseSpec {
    pub const fn none() -> Self {
        NoiseSpec {
            d_add: 0.0,
            d_mul: 0.0,
            corr_add: false,
            corr_mul: false,
        }
    }

    pub const fn additive(d: f64, correlated: bool) -> Self {
        NoiseSpec {
            d_add: d,
            d_mul: 0.0,
            corr_add: correlated,
            corr_mul: false,
        }
    }

    pub const fn multiplicative(d: f64, correlated: bool) -> Self {
        NoiseSpec {
            d_add: 0.0,
            d_mul: d,
            corr_add: false,
            corr_mul: correlated,
        }
    }

    pub fn is_none(&self) -> bool {
        self.d_add == 0.0 && self.d_mul == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, d) in [("d_add", self.d_add), ("d_mul", self.d_mul)] {
            if !d.is_finite() || d < 0.0 {
                return Err(Error::InvalidParam {
                    name,
                    reason: format!("intensity must be finite and >= 0, got {d}"),
                });
            }
        }
        Ok(())
    }
}

/// Raw draws ξ of one noise component for one call.
#[derive(Debug, Clone, PartialEq)]
enum Draws {
    Off,
    Shared(f64),
    PerIndex(Vec<f64>),
}

impl Draws {
    fn sample(active: bool, correlated: bool, len: usize, rng: &mut RngStream) -> Self {
        if !active {
            Draws::Off
        } else if correlated {
            Draws::Shared(rng.standard_normal())
        } else {
            Draws::PerIndex((0..len).map(|_| rng.standard_normal()).collect())
        }
    }

    #[inline]
    fn get(&self, i: usize) -> f64 {
        match self {
            Draws::Off => 0.0,
            Draws::Shared(x) => *x,
            Draws::PerIndex(xs) => xs[i],
        }
    }
}

/// One realization of the noise operator, fixed across reads.
///
/// Sampling and applying are split so the same realization can be replayed,
/// e.g. when a gradient is taken through the noise the backward pass must see
/// exactly the forward pass's draws.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw {
    len: usize,
    sqrt_2d_add: f64,
    sqrt_2d_mul: f64,
    mul: Draws,
    add: Draws,
}

impl NoiseDraw {
    /// Draws a fresh realization. Multiplicative draws are taken before
    /// additive ones so the rng stream layout is fixed.
    pub fn sample(spec: &NoiseSpec, len: usize, rng: &mut RngStream) -> Result<Self> {
        spec.validate()?;
        let mul = Draws::sample(spec.d_mul > 0.0, spec.corr_mul, len, rng);
        let add = Draws::sample(spec.d_add > 0.0, spec.corr_add, len, rng);
        Ok(NoiseDraw {
            len,
            sqrt_2d_add: (2.0 * spec.d_add).sqrt(),
            sqrt_2d_mul: (2.0 * spec.d_mul).sqrt(),
            mul,
            add,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Gain applied to x_i: 1 + sqrt(2·d_mul)·ξM_i.
    #[inline]
    pub fn gain(&self, i: usize) -> f64 {
        match &self.mul {
            Draws::Off => 1.0,
            d => 1.0 + self.sqrt_2d_mul * d.get(i),
        }
    }

    /// Offset added to x_i: sqrt(2·d_add)·ξA_i.
    #[inline]
    pub fn offset(&self, i: usize) -> f64 {
        match &self.add {
            Draws::Off => 0.0,
            d => self.sqrt_2d_add * d.get(i),
        }
    }

    /// Applies this realization in place. With both components off the
    /// vector is left untouched bit for bit.
    pub fn apply_in_place(&self, x: &mut [f64]) -> Result<()> {
        if x.len() != self.len {
            return Err(Error::DimensionMismatch {
                op: "NoiseDraw::apply",
                expected: format!("vector of length {}", self.len),
                got: format!("{}", x.len()),
            });
        }
        if !matches!(self.mul, Draws::Off) {
            for (i, v) in x.iter_mut().enumerate() {
                *v *= self.gain(i);
            }
        }
        if !matches!(self.add, Draws::Off) {
            for (i, v) in x.iter_mut().enumerate() {
                *v += self.offset(i);
            }
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = x.to_vec();
        self.apply_in_place(&mut y)?;
        Ok(y)
    }
}

/// Samples a fresh realization and applies it to x.
pub fn apply_noise(x: &[f64], spec: &NoiseSpec, rng: &mut RngStream) -> Result<Vec<f64>> {
    NoiseDraw::sample(spec, x.len(), rng)?.apply(x)
}
