//! Versioned JSON container for a trained policy.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::policy::PolicyParams;
use crate::error::{Error, Result};
use crate::reward::RewardWeights;
use crate::sim::EnvConfig;

pub const ARTIFACT_FORMAT: &str = "pourlab-policy";
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyArtifact {
    pub format: String,
    pub version: u32,
    pub weights: RewardWeights,
    /// Position of `weights` in the sweep grid, when trained as part of one.
    pub config_index: Option<usize>,
    pub seed: u64,
    /// Simulator steps per policy decision used in training.
    pub control_substeps: usize,
    /// Environment the policy was trained in; evaluation reuses it.
    pub env: EnvConfig,
    pub policy: PolicyParams,
}

impl PolicyArtifact {
    pub fn new(
        policy: PolicyParams,
        weights: RewardWeights,
        env: EnvConfig,
        control_substeps: usize,
        config_index: Option<usize>,
        seed: u64,
    ) -> Self {
        Self {
            format: ARTIFACT_FORMAT.to_string(),
            version: ARTIFACT_VERSION,
            weights,
            config_index,
            seed,
            control_substeps,
            env,
            policy,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Runtime(format!("serialising policy artifact: {e}")))
    }

    /// Parses and validates an artifact; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let artifact: PolicyArtifact = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "artifact".to_string() } else { path };
            Error::format(field, e.into_inner().to_string())
        })?;
        if artifact.format != ARTIFACT_FORMAT {
            return Err(Error::format("format", format!("expected \"{ARTIFACT_FORMAT}\"")));
        }
        if artifact.version != ARTIFACT_VERSION {
            return Err(Error::format("version", format!("unsupported version {}", artifact.version)));
        }
        let prefixed = |section: &'static str| {
            move |e: Error| match e {
                Error::Config { field, reason } | Error::Format { field, reason } => {
                    Error::format(format!("{section}.{field}"), reason)
                }
                other => other,
            }
        };
        artifact.weights.validate().map_err(prefixed("weights"))?;
        artifact.env.validate().map_err(prefixed("env"))?;
        if artifact.control_substeps < 1 {
            return Err(Error::format("control_substeps", "must be >= 1"));
        }
        if artifact.policy.obs_dim() != crate::sim::OBS_DIM || artifact.policy.act_dim() != crate::sim::ACT_DIM {
            return Err(Error::format(
                "policy.policy.sizes",
                format!("network must map {} observations to {} torques", crate::sim::OBS_DIM, crate::sim::ACT_DIM),
            ));
        }
        artifact.policy.validate().map_err(prefixed("policy"))?;
        Ok(artifact)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::harness::io::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
