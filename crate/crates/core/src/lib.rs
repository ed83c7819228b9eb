//! Online adaptive influence maximization on content-dependent networks.
//!
//! - [`diffusion`]: the tensor-parameterized cascade environment.
//! - [`estimator`]: online ridge and generalized-linear regression with
//!   confidence radius and exploration bonus.
//! - [`planner`]: exact truncated value iteration and sampled lookahead.
//! - [`agents`]: the slow-switching optimistic agent and baselines.
//! - [`netgen`]: synthetic network generators.
//! - [`harness`]: multi-run experiments, diagnostics, export and plots.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod diffusion;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod netgen;
pub mod planner;
pub mod rng;

pub use diffusion::{Action, LinkFunction, NetworkModel, RewardWeights, StateMatrix};
pub use error::{Error, Result};
