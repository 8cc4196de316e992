use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub learning_rate: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Environment steps collected per update.
    pub rollout_len: usize,
    pub total_steps: usize,
    /// Global gradient-norm cap; `0` disables clipping.
    pub max_grad_norm: f64,
    pub hidden: Vec<usize>,
    pub init_log_std: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 0.95,
            clip: 0.2,
            epochs: 10,
            minibatch_size: 64,
            learning_rate: 3e-4,
            entropy_coef: 0.0,
            value_coef: 0.5,
            rollout_len: 2048,
            total_steps: 1_000_000,
            max_grad_norm: 0.5,
            hidden: vec![64, 64],
            init_log_std: 0.0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(name, format!("must lie in [0, 1] (got {v})")))
            }
        };
        unit("gamma", self.gamma)?;
        unit("lambda", self.lambda)?;
        if !self.clip.is_finite() || self.clip <= 0.0 {
            return Err(Error::config("clip", "must be finite and > 0"));
        }
        for (name, v) in [
            ("epochs", self.epochs),
            ("minibatch_size", self.minibatch_size),
            ("rollout_len", self.rollout_len),
            ("total_steps", self.total_steps),
        ] {
            if v < 1 {
                return Err(Error::config(name, "must be >= 1"));
            }
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate", "must be finite and > 0"));
        }
        for (name, v) in [
            ("entropy_coef", self.entropy_coef),
            ("value_coef", self.value_coef),
            ("max_grad_norm", self.max_grad_norm),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(name, "must be finite and >= 0"));
            }
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::config("hidden", "need at least one non-zero hidden layer"));
        }
        if !self.init_log_std.is_finite() {
            return Err(Error::config("init_log_std", "must be finite"));
        }
        Ok(())
    }
}
