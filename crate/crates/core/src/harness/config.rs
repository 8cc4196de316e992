//! Sweep configuration: a TOML file layered over a built-in profile.
//!
//! Grammar: TOML key = value pairs, `[section]` headers and `#` comments.
//! Top-level keys set sweep bookkeeping; the sections `env`, `ppo`,
//! `reward`, `mutation`, `classifier` and `features` mirror the library
//! types field by field. Any key left out keeps the profile value.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::behavior::{ClassifierThresholds, FeatureParams};
use crate::error::{Error, Result};
use crate::ppo::PpoConfig;
use crate::reward::{MutationSpec, RewardWeights};
use crate::sim::EnvConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Training seeds are `seed, seed + 1, …`.
    pub seed: u64,
    pub seeds_per_config: usize,
    pub evals_per_policy: usize,
    /// Evaluation episode `e` of every policy uses environment seed
    /// `eval_seed_base + e`.
    pub eval_seed_base: u64,
    /// Simulator steps per policy decision.
    pub control_substeps: usize,
    /// Worker threads; 0 picks the number of available cores.
    pub workers: usize,
    pub output_dir: String,
    /// Write one JSON Lines trajectory log per evaluation episode.
    pub write_trajectories: bool,
    /// Optional manual relabelling file applied by `classify`.
    pub label_overrides: Option<String>,
    pub env: EnvConfig,
    pub ppo: PpoConfig,
    pub reward: RewardWeights,
    pub mutation: MutationSpec,
    pub classifier: ClassifierThresholds,
    pub features: FeatureParams,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl SweepConfig {
    /// Desk-scale profile: the full 25 × 3 sweep in well under an hour per
    /// core.
    pub fn desk() -> Self {
        Self {
            seed: 1,
            seeds_per_config: 3,
            evals_per_policy: 10,
            eval_seed_base: 10_000,
            control_substeps: 10,
            workers: 0,
            output_dir: "results".into(),
            write_trajectories: true,
            label_overrides: None,
            env: EnvConfig::default(),
            ppo: PpoConfig {
                total_steps: 102_400,
                ..PpoConfig::default()
            },
            reward: RewardWeights::default(),
            mutation: MutationSpec::default(),
            classifier: ClassifierThresholds::default(),
            features: FeatureParams::default(),
        }
    }

    /// Tiny profile for smoke tests: one seed, two evaluations, a few
    /// hundred training steps on small networks and short episodes.
    pub fn ci() -> Self {
        let desk = Self::desk();
        Self {
            seeds_per_config: 1,
            evals_per_policy: 2,
            env: EnvConfig {
                horizon: 300,
                ..desk.env.clone()
            },
            ppo: PpoConfig {
                total_steps: 256,
                rollout_len: 128,
                minibatch_size: 64,
                epochs: 2,
                hidden: vec![16, 16],
                ..desk.ppo.clone()
            },
            ..desk
        }
    }

    pub fn profile(ci: bool) -> Self {
        if ci {
            Self::ci()
        } else {
            Self::desk()
        }
    }

    /// Parses `text` as overrides on top of `base`.
    pub fn from_toml_over(base: &SweepConfig, text: &str) -> Result<Self> {
        let overrides: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            Error::config("config file", e.message().to_string())
        })?;
        let mut merged = toml::Table::try_from(base).map_err(|e| Error::Runtime(format!("encoding profile: {e}")))?;
        merge(&mut merged, overrides);
        let cfg: SweepConfig = serde_path_to_error::deserialize(toml::Value::Table(merged)).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, ci: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_over(&Self::profile(ci), &text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("sweep config encodes as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds_per_config < 1 {
            return Err(Error::config("seeds_per_config", "must be >= 1"));
        }
        if self.evals_per_policy < 1 {
            return Err(Error::config("evals_per_policy", "must be >= 1"));
        }
        if self.control_substeps < 1 {
            return Err(Error::config("control_substeps", "must be >= 1"));
        }
        let prefix = |section: &'static str| {
            move |e: Error| match e {
                Error::Config { field, reason } => Error::config(format!("{section}.{field}"), reason),
                other => other,
            }
        };
        self.env.validate().map_err(prefix("env"))?;
        self.ppo.validate().map_err(prefix("ppo"))?;
        self.reward.validate().map_err(prefix("reward"))?;
        self.mutation.validate().map_err(prefix("mutation"))?;
        self.classifier.validate().map_err(prefix("classifier"))?;
        if !(self.features.velocity_deadband.is_finite() && self.features.velocity_deadband >= 0.0) {
            return Err(Error::config("features.velocity_deadband", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.seeds_per_config as u64).map(|k| self.seed + k).collect()
    }

    pub fn worker_count(&self) -> usize {
        if self.workers > 0 {
            self.workers
        } else {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        }
    }
}

/// Recursively overlays `over` on `base`; tables merge, everything else
/// replaces.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
