//! Internal-noise experiments for feedforward and echo state networks.
//!
//! The crate trains a small MNIST classifier and a Mackey-Glass echo state
//! network while Gaussian noise (additive or multiplicative, correlated or
//! uncorrelated across neurons) is injected into the hidden layer or
//! reservoir, then measures how training with noise changes robustness when
//! the same noise is present at inference time.

mod checkpoint;
pub mod error;
pub mod esn;
pub mod experiments;
pub mod fnn;
pub mod mackey_glass;
pub mod mnist;
pub mod noise;
pub mod numerics;

pub use error::{Error, Result};
