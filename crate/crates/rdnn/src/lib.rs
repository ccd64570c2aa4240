//! Robust location estimation for multi-dimensional functional data.
//!
//! Observations are noisy evaluations of random surfaces over an equally
//! spaced grid on `(0,1]^d`. The estimator minimizes an empirical M-type risk
//! (Huber, pinball, or plain least squares) over sparse ReLU feed-forward
//! networks trained with mini-batch Adam and dropout, which keeps the fitted
//! location surface stable in the presence of outlying observations and
//! heavy-tailed measurement errors.
//!
//! The crate is organized around the estimation pipeline:
//!
//! - [`grid`] / [`sim`]: observation lattices and synthetic functional data,
//!   including the Gaussian-process deviations used by the benchmarks.
//! - [`contam`]: stripe, block, and heavy-tail outlier injection.
//! - [`loss`]: Huber, pinball, and square losses with their scores.
//! - [`network`] / [`trainer`]: ReLU networks with exact backpropagation and
//!   the Adam training loop.
//! - [`estimator`]: size-driven architecture selection, fitting, prediction
//!   at arbitrary resolution, and per-quantile fits.
//! - [`eval`]: empirical-norm risk and the Monte Carlo benchmark harness.
//!
//! Everything is deterministic given the user-supplied seeds; see [`rng`].

pub mod contam;
pub mod error;
pub mod estimator;
pub mod eval;
pub mod gradcheck;
pub mod grid;
pub mod loss;
pub mod model_io;
pub mod network;
pub mod rng;
pub mod sim;
pub mod trainer;

pub use error::{Error, Result};
pub use estimator::{fit, fit_quantiles, predict, select_architecture, ArchitectureConfig, FitResult};
pub use eval::{empirical_risk, run_bench, BenchConfig, BenchReport, EstimatorId, Scenario};
pub use grid::{make_grid, GridSpec};
pub use loss::LossSpec;
pub use network::{ClassReport, DropoutMask, Gradients, NetworkParams};
pub use sim::{sample_gp, simulate, FunctionalSample, GenMeta, MeanSpec, NoiseSpec};
pub use trainer::{adam_step, train, AdamState, TrainConfig};
