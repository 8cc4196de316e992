//! One-dimensional double integrator used to check that the learner learns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::train::{EnvStep, Environment};
use crate::error::{Error, Result};

/// Point mass on a line driven by a bounded force; the reward penalises
/// distance from the origin, speed and force.
#[derive(Debug, Clone)]
pub struct DoubleIntegrator {
    pub dt: f64,
    pub horizon: usize,
    pub force_limit: f64,
    /// Distance from the origin that counts as having reached the target.
    pub target_tolerance: f64,
    x: f64,
    v: f64,
    t: usize,
}

impl Default for DoubleIntegrator {
    fn default() -> Self {
        Self {
            dt: 0.1,
            horizon: 50,
            force_limit: 1.0,
            target_tolerance: 0.1,
            x: 0.0,
            v: 0.0,
            t: 0,
        }
    }
}

impl DoubleIntegrator {
    pub fn position(&self) -> f64 {
        self.x
    }

    pub fn at_target(&self) -> bool {
        self.x.abs() < self.target_tolerance
    }
}

impl Environment for DoubleIntegrator {
    fn obs_dim(&self) -> usize {
        2
    }

    fn act_dim(&self) -> usize {
        1
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.x = rng.random_range(-1.0..1.0);
        self.v = 0.0;
        self.t = 0;
        Ok(vec![self.x, self.v])
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep> {
        if self.t >= self.horizon {
            return Err(Error::usage("step called on a finished episode; call reset first"));
        }
        let f = action.first().copied().unwrap_or(0.0);
        let f = if f.is_finite() { f.clamp(-self.force_limit, self.force_limit) } else { 0.0 };
        self.v += f * self.dt;
        self.x += self.v * self.dt;
        self.t += 1;
        let reward = -(self.x * self.x + 0.1 * self.v * self.v + 0.01 * f * f) * self.dt;
        Ok(EnvStep {
            observation: vec![self.x, self.v],
            reward,
            done: self.t >= self.horizon,
            accuracy: None,
            effort: f * f * self.dt,
        })
    }
}
