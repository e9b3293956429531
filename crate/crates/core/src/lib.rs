//! Min-k-loss SGD and the machinery for analysing it.
//!
//! At every step the optimizer draws `k` samples, evaluates their current
//! losses and updates with the gradient of the one with the smallest loss.
//! Besides the training loops this crate exposes the exact rank-selection
//! probabilities, the expected-update ("surrogate") landscape, evaluators for
//! the landscape conditions and distance bounds of the method, synthetic
//! corruption benchmarks and a sweep harness.
//!
//! Module map:
//!
//! - [`losses`]: convex loss components, datasets and problem constants.
//! - [`sampling`]: rank probabilities and the stochastic selection rules.
//! - [`optimizer`]: min-k / vanilla / order-statistic / oracle SGD loops.
//! - [`surrogate`]: expected update, stationary points and line scans.
//! - [`theory`]: landscape conditions and distance bounds on concrete instances.
//! - [`datagen`]: regression, quadratic-ensemble and classification generators.
//! - [`experiments`]: config-driven sweeps, summaries, CSV/JSON output.

// `!(x >= y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datagen;
pub mod error;
pub mod experiments;
pub mod losses;
pub mod optimizer;
pub mod sampling;
pub mod surrogate;
pub mod theory;
pub mod vector;

pub use error::{Error, Result};
pub use losses::{
    dataset_constants, loss_gradient, loss_value, Dataset, LossComponent, LossKind,
    ProblemConstants,
};
pub use optimizer::{ema_readout, error_to_target, run, OptimizerConfig, StepSize, Trajectory};
pub use sampling::{
    rank_probabilities, seeded_rng, select_batch, select_index, RankDistribution, Replacement,
    SeededRng, SelectionScheme,
};
pub use vector::ParameterVector;
