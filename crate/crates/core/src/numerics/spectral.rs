use crate::error::{Error, Result};
use crate::numerics::matrix::{dot, Matrix};
use crate::numerics::rng::RngStream;

pub const SPECTRAL_TOL: f64 = 1e-6;
pub const SPECTRAL_MAX_ITER: usize = 10_000;

const RESTART_LIMIT: usize = 8;
const STABLE_PASSES: usize = 2;
/// Passes without residual improvement before giving up on the iteration.
const STALL_PASSES: usize = 50;

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

fn start_vector(n: usize, restart: u64) -> Vec<f64> {
    let mut rng = RngStream::new(0x9D2C_5680, restart);
    let mut v: Vec<f64> = (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
    if normalize(&mut v) == 0.0 {
        v[0] = 1.0;
    }
    v
}

/// Largest eigenvalue modulus of a square matrix by power iteration.
///
/// Each pass takes two matrix-vector products and fits A²v ≈ a·Av + b·v; the
/// roots of λ² − aλ − b cover both a real dominant eigenvalue and a dominant
/// complex-conjugate pair, which is the generic case for random reservoirs.
/// Converges when the fit explains the iterate to within `tol` and the
/// estimate is stable across passes; restarts from a fresh vector when the
/// iterate degenerates. Three or more near-tied edge moduli stall the fit,
/// so after `max_iter` passes the radius comes from a dense eigensolve
/// instead of an error.
pub fn spectral_radius(m: &Matrix, tol: f64, max_iter: usize) -> Result<f64> {
    if !m.is_square() || m.rows() == 0 {
        return Err(Error::DimensionMismatch {
            op: "spectral_radius",
            expected: "non-empty square matrix".into(),
            got: format!("{}x{}", m.rows(), m.cols()),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParam {
            name: "tol",
            reason: format!("must be positive, got {tol}"),
        });
    }

    let mut v = start_vector(m.rows(), 0);
    let mut restarts = 0usize;
    let mut prev_estimate = f64::NAN;
    let mut stable = 0usize;
    let mut best_residual = f64::INFINITY;
    let mut stalled = 0usize;

    for _ in 0..max_iter {
        let mut w1 = m.matvec(&v)?;
        let n1 = normalize(&mut w1);
        if n1 == 0.0 {
            // v sits in the kernel; for a nilpotent matrix every restart
            // collapses and the radius is genuinely zero.
            restarts += 1;
            if restarts > RESTART_LIMIT {
                return Ok(0.0);
            }
            v = start_vector(m.rows(), restarts as u64);
            continue;
        }
        let mut w2 = m.matvec(&w1)?;
        let n2 = normalize(&mut w2);

        // A·v = n1·w1 and A²·v = n1·n2·w2 with w1, w2, v all unit length.
        // Least-squares fit of w2 on span{w1, v} gives the companion
        // coefficients of λ² − aλ − b after undoing the normalizations.
        let c = dot(&w1, &v);
        let q1 = dot(&w2, &w1);
        let q2 = dot(&w2, &v);
        let det = 1.0 - c * c;

        let (estimate, residual) = if det.abs() < 1e-12 {
            // w1 parallel to v: v is an eigenvector with |eigenvalue| = n1.
            (n1, (1.0 - c * c).max(0.0).sqrt())
        } else {
            let a_hat = (q1 - c * q2) / det;
            let b_hat = (q2 - c * q1) / det;
            let a = a_hat * n2;
            let b = b_hat * n1 * n2;
            let disc = a * a + 4.0 * b;
            let radius = if disc >= 0.0 {
                let s = disc.sqrt();
                ((a + s).abs()).max((a - s).abs()) / 2.0
            } else {
                (-b).sqrt() // complex pair, modulus² = −b
            };
            let res_sq = (1.0 - (a_hat * q1 + b_hat * q2)).max(0.0);
            (radius, res_sq.sqrt())
        };

        if estimate.is_finite() {
            let change = (estimate - prev_estimate).abs();
            if residual <= tol && change <= tol * estimate.max(f64::MIN_POSITIVE) {
                stable += 1;
                if stable >= STABLE_PASSES {
                    return Ok(estimate);
                }
            } else {
                stable = 0;
            }
            if residual < best_residual * 0.99 {
                best_residual = residual;
                stalled = 0;
            } else {
                stalled += 1;
                if stalled >= STALL_PASSES {
                    return dense_radius(m, max_iter, estimate);
                }
            }
            prev_estimate = estimate;
        } else {
            // overflow in the iterates; rescale by restarting
            restarts += 1;
            if restarts > RESTART_LIMIT {
                return dense_radius(m, max_iter, prev_estimate);
            }
            v = start_vector(m.rows(), restarts as u64);
            prev_estimate = f64::NAN;
            stable = 0;
            continue;
        }

        v = w2;
    }

    dense_radius(m, max_iter, prev_estimate)
}

/// Full eigendecomposition path for matrices the iteration cannot settle.
fn dense_radius(m: &Matrix, max_iter: usize, estimate: f64) -> Result<f64> {
    let n = m.rows();
    let dm = nalgebra::DMatrix::from_row_slice(n, n, m.data());
    let radius = dm
        .complex_eigenvalues()
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    if radius.is_finite() {
        Ok(radius)
    } else {
        Err(Error::NonConvergence { max_iter, estimate })
    }
}
