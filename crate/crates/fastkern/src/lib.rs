//! Kernel regression with truncated Fourier features at `O(n log n)` cost.
//!
//! The estimators in this crate expand the regression function on the
//! trigonometric basis `exp(-i pi <k, x> / (2L))` truncated at cutoff `m`,
//! and solve the regularized normal equations
//!
//! ```text
//! (Phi* Phi / n + lambda M* M [+ mu D* C D]) theta = Phi* Y / n
//! ```
//!
//! without ever forming `Phi`: the right-hand side and the empirical
//! covariance are non-uniform FFTs of the data, the covariance is a d-level
//! Toeplitz operator applied by circulant embedding and FFT, and the system
//! is solved by preconditioned conjugate gradients.
//!
//! Modules:
//! - [`grid`]: multi-index frequency grids, the feature map, diagonal
//!   operator symbols, analytic box Fourier tensors, hyperparameter schedules.
//! - [`nufft`]: self-contained type-1 and type-2 non-uniform FFTs in d = 1..3.
//! - [`toeplitz`]: d-level Toeplitz operators built from data or analytic
//!   generating tensors.
//! - [`operator`]: composable linear-operator expressions.
//! - [`solvers`]: preconditioned conjugate gradients.
//! - [`estimators`]: Sobolev, low-bias, physics-informed, and additive fits,
//!   prediction, the dense small-scale oracle, and lambda grid search.
//! - [`experiments`]: synthetic scenarios, the MSE/rate harness, slope fits.

pub mod alloc_stats;
pub mod error;
mod fft;
pub mod grid;
pub mod nufft;
pub mod operator;
pub mod toeplitz;

pub mod estimators;
pub mod experiments;
pub mod model;
pub mod solvers;

pub use error::{Error, Result};

/// Which penalized least-squares estimator a model was fit with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "sobolev")]
    Sobolev,
    #[serde(rename = "lowbias")]
    LowBias,
    #[serde(rename = "pik_box")]
    PikBox,
    #[serde(rename = "pik_collocation")]
    PikCollocation,
    #[serde(rename = "additive")]
    Additive,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Sobolev => "sobolev",
            EstimatorKind::LowBias => "lowbias",
            EstimatorKind::PikBox => "pik-box",
            EstimatorKind::PikCollocation => "pik-colloc",
            EstimatorKind::Additive => "additive",
        }
    }
}
