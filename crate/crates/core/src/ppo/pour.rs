//! The pouring simulator wrapped as a learning environment with the
//! weighted per-step reward.

use super::train::{EnvStep, Environment};
use crate::error::{Error, Result};
use crate::reward::{per_step_reward, RewardInput, RewardWeights};
use crate::sim::{self, Action, EnvConfig, EnvState, ACT_DIM, OBS_DIM};

#[derive(Debug, Clone)]
pub struct PourEnv {
    pub config: EnvConfig,
    pub weights: RewardWeights,
    /// Simulator steps per policy decision; the action is held throughout.
    pub substeps: usize,
    state: Option<EnvState>,
    previous: Option<RewardInput>,
}

impl PourEnv {
    pub fn new(config: EnvConfig, weights: RewardWeights, substeps: usize) -> Result<Self> {
        config.validate()?;
        weights.validate()?;
        if substeps < 1 {
            return Err(Error::config("substeps", "must be >= 1"));
        }
        Ok(Self {
            config,
            weights,
            substeps,
            state: None,
            previous: None,
        })
    }

    pub fn state(&self) -> Option<&EnvState> {
        self.state.as_ref()
    }

    /// Like [`Environment::step`] but also hands every simulator transition
    /// of the decision to `visit`.
    pub fn step_visit(&mut self, action: &[f64], mut visit: impl FnMut(&EnvState, &sim::Transition)) -> Result<EnvStep> {
        let state = self
            .state
            .as_mut()
            .ok_or_else(|| Error::usage("step called before reset"))?;
        let action = Action::from_slice(action);
        let mut reward = 0.0;
        let mut effort = 0.0;
        let mut last = None;
        for _ in 0..self.substeps {
            let tr = sim::step(state, &action, &self.config)?;
            let input = tr.info.reward_input();
            reward += per_step_reward(&self.weights, self.previous.as_ref(), &input);
            effort += input.effort;
            self.previous = Some(input);
            visit(state, &tr);
            let done = tr.done;
            last = Some(tr);
            if done {
                break;
            }
        }
        let tr = last.expect("substeps >= 1");
        Ok(EnvStep {
            observation: tr.observation.to_vec(),
            reward,
            done: tr.done,
            accuracy: Some(tr.info.accuracy),
            effort,
        })
    }
}

impl Environment for PourEnv {
    fn obs_dim(&self) -> usize {
        OBS_DIM
    }

    fn act_dim(&self) -> usize {
        ACT_DIM
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        let (state, obs) = sim::reset(&self.config, seed)?;
        self.state = Some(state);
        self.previous = None;
        Ok(obs.to_vec())
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep> {
        self.step_visit(action, |_, _| {})
    }
}
