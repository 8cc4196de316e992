//! Proximal policy optimisation written from scratch: tanh MLPs, a diagonal
//! Gaussian head, GAE, the clipped surrogate and Adam.

pub mod adam;
pub mod artifact;
pub mod buffer;
pub mod config;
pub mod diag;
pub mod mlp;
pub mod policy;
pub mod pour;
pub mod train;
pub mod update;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use artifact::{PolicyArtifact, ARTIFACT_FORMAT, ARTIFACT_VERSION};
pub use buffer::{compute_gae, normalize_advantages, RolloutBuffer};
pub use config::PpoConfig;
pub use diag::DoubleIntegrator;
pub use mlp::{Cache, Mlp};
pub use policy::{gaussian_entropy, gaussian_log_prob, PolicyParams, RunningNorm, LOG_STD_MAX, LOG_STD_MIN};
pub use pour::PourEnv;
pub use train::{evaluate_deterministic, train, train_with_progress, EnvStep, Environment, IterationStats, TrainOutcome};
pub use update::{loss_and_grad, ppo_update, Gradients, LossCoeffs, LossParts, Optimizer, Sample, UpdateStats};
