//! Shared numerical kernels: dense matrices, seeded random streams,
//! activations, and spectral radius estimation.

mod activation;
mod matrix;
mod rng;
mod spectral;

pub use activation::{sigmoid, softmax, tanh, Activation};
pub use matrix::{dot, rmse, Matrix};
pub use rng::RngStream;
pub use spectral::{spectral_radius, SPECTRAL_MAX_ITER, SPECTRAL_TOL};
