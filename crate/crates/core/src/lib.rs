//! Cost-sensitive multi-output regression for decision-focused learning.
//!
//! A linear model predicts the objective coefficients of an optimization
//! problem. Training uses composable surrogate losses that need at most one
//! solver call per instance:
//!
//! * instance costs `C`, weighting each instance by the regret of a baseline,
//! * one-sided masks `O` and `O_S`, dropping errors that cannot change the
//!   optimal decision,
//! * scale invariance `S`, comparing normalized cost vectors.
//!
//! The crate also ships the exact oracles (knapsack, grid shortest path,
//! TSP, a bounded simplex with cost ranging), a synthetic data generator,
//! the SPO+ and Lawless comparison losses and an experiment harness.

pub mod datagen;
pub mod error;
pub mod harness;
pub mod instance_costs;
pub mod losses;
pub mod model;
pub mod problems;
pub mod regret;
pub mod simplex;
pub mod types;

pub use error::{Error, Result};
pub use losses::{BaseError, Loss, LossContext, LossSpec};
pub use model::{LinearModel, Predictor, TrainConfig};
pub use problems::{ProblemOracle, ProblemSpec};
pub use types::{
    dot, norm, CostRangeVector, CostVector, DataInstance, Dataset, Decision, DecisionKind,
    FeatureVector, Sense, Split,
};
