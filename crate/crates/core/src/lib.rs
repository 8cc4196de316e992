//! Reward-mutation skill diversification on a desk-scale pouring task.
//!
//! The crate is split along the pipeline:
//!
//! - [`sim`]: deterministic 2-D pouring environment (torque-driven planar arm,
//!   particle liquid, container on a force scale).
//! - [`reward`]: cost-benefit reward, Gaussian weight mutation and the 5×5
//!   weight grid.
//! - [`ppo`]: dependency-free PPO (MLP, Gaussian head, GAE, Adam, trainer).
//! - [`behavior`]: trajectory logs, behavior features, rule-based labels and
//!   per-configuration aggregation.
//! - [`harness`]: sweep configuration, manifest, CLI commands and reports.

pub mod behavior;
pub mod error;
pub mod harness;
pub mod ppo;
pub mod reward;
pub mod sim;

pub use error::{Error, Result};
