//! Rollout collection and the training loop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::buffer::RolloutBuffer;
use super::config::PpoConfig;
use super::policy::PolicyParams;
use super::update::{ppo_update, Optimizer};
use crate::error::{Error, Result};

/// Result of one environment step as seen by the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// Task progress in `[0, 1]` when the environment has such a notion.
    pub accuracy: Option<f64>,
    pub effort: f64,
}

/// Episodic environment with continuous observations and actions.
pub trait Environment {
    fn obs_dim(&self) -> usize;
    fn act_dim(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>>;
    fn step(&mut self, action: &[f64]) -> Result<EnvStep>;
}

/// One row of the training curve, written after every update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub env_steps: usize,
    /// Episodes that finished during this rollout.
    pub episodes: usize,
    pub mean_return: Option<f64>,
    pub mean_length: Option<f64>,
    pub mean_final_accuracy: Option<f64>,
    pub mean_effort: Option<f64>,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
    pub aborted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    pub curve: Vec<IterationStats>,
}

/// Independent generator streams derived from the run seed.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Default)]
struct EpisodeTracker {
    ret: f64,
    len: usize,
    effort: f64,
    accuracy: Option<f64>,
}

#[derive(Default)]
struct Finished {
    returns: Vec<f64>,
    lengths: Vec<f64>,
    accuracies: Vec<f64>,
    efforts: Vec<f64>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Trains a fresh policy on `env` for `config.total_steps / config.rollout_len`
/// updates. Everything random derives from `seed`, so the outcome is a pure
/// function of `(env, config, seed)`.
pub fn train<E: Environment + ?Sized>(env: &mut E, config: &PpoConfig, seed: u64) -> Result<TrainOutcome> {
    train_with_progress(env, config, seed, |_| {})
}

pub fn train_with_progress<E: Environment + ?Sized>(
    env: &mut E,
    config: &PpoConfig,
    seed: u64,
    mut progress: impl FnMut(&IterationStats),
) -> Result<TrainOutcome> {
    config.validate()?;
    let mut init_rng = stream(seed, 0);
    let mut action_rng = stream(seed, 1);
    let mut shuffle_rng = stream(seed, 2);
    let mut episode_rng = stream(seed, 3);

    let mut params = PolicyParams::init(env.obs_dim(), env.act_dim(), &config.hidden, config.init_log_std, &mut init_rng)?;
    let mut optimizer = Optimizer::new(&params, config.learning_rate);
    let iterations = config.total_steps / config.rollout_len;
    let mut curve = Vec::with_capacity(iterations);
    if iterations == 0 {
        return Ok(TrainOutcome { params, curve });
    }

    let mut raw = env.reset(episode_rng.random())?;
    check_obs(&raw, env.obs_dim())?;
    let mut tracker = EpisodeTracker::default();
    for iteration in 0..iterations {
        let mut buffer = RolloutBuffer::with_capacity(config.rollout_len);
        let mut finished = Finished::default();
        for _ in 0..config.rollout_len {
            params.obs_norm.update(&raw);
            let obs = params.obs_norm.normalize(&raw);
            let (action, log_prob) = params.sample_action(&obs, &mut action_rng)?;
            let value = params.value_of(&obs)?;
            let step = env.step(&action)?;
            if !step.reward.is_finite() {
                return Err(Error::Numeric(format!("environment returned reward {}", step.reward)));
            }
            tracker.ret += step.reward;
            tracker.len += 1;
            tracker.effort += step.effort;
            tracker.accuracy = step.accuracy;
            buffer.push(obs, action, log_prob, step.reward, value, step.done);
            if step.done {
                finished.returns.push(tracker.ret);
                finished.lengths.push(tracker.len as f64);
                finished.efforts.push(tracker.effort);
                if let Some(a) = tracker.accuracy {
                    finished.accuracies.push(a);
                }
                tracker = EpisodeTracker::default();
                raw = env.reset(episode_rng.random())?;
            } else {
                raw = step.observation;
            }
            check_obs(&raw, env.obs_dim())?;
        }
        let last_done = *buffer.dones.last().expect("rollout_len >= 1");
        buffer.bootstrap_value = if last_done {
            0.0
        } else {
            params.value_of(&params.obs_norm.normalize(&raw))?
        };
        let stats = ppo_update(&mut params, &mut optimizer, &buffer, config, &mut shuffle_rng)?;
        let row = IterationStats {
            iteration,
            env_steps: (iteration + 1) * config.rollout_len,
            episodes: finished.returns.len(),
            mean_return: mean(&finished.returns),
            mean_length: mean(&finished.lengths),
            mean_final_accuracy: mean(&finished.accuracies),
            mean_effort: mean(&finished.efforts),
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            entropy: stats.entropy,
            mean_ratio: stats.mean_ratio,
            clip_fraction: stats.clip_fraction,
            aborted: stats.aborted.is_some(),
        };
        progress(&row);
        curve.push(row);
    }
    Ok(TrainOutcome { params, curve })
}

fn check_obs(obs: &[f64], dim: usize) -> Result<()> {
    if obs.len() != dim {
        return Err(Error::usage(format!("environment observation has {} entries, expected {dim}", obs.len())));
    }
    if obs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("environment returned a non-finite observation".into()));
    }
    Ok(())
}

/// Runs one episode with mean actions and frozen normalisation; returns the
/// undiscounted return and the number of steps.
pub fn evaluate_deterministic<E: Environment + ?Sized>(env: &mut E, params: &PolicyParams, seed: u64, max_steps: usize) -> Result<(f64, usize)> {
    let mut raw = env.reset(seed)?;
    let mut ret = 0.0;
    for t in 0..max_steps {
        let action = params.mean(&params.obs_norm.normalize(&raw))?;
        let step = env.step(&action)?;
        ret += step.reward;
        if step.done {
            return Ok((ret, t + 1));
        }
        raw = step.observation;
    }
    Ok((ret, max_steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppo::DoubleIntegrator;

    fn small() -> PpoConfig {
        PpoConfig {
            rollout_len: 500,
            total_steps: 3000,
            minibatch_size: 100,
            epochs: 4,
            hidden: vec![16, 16],
            ..PpoConfig::default()
        }
    }

    #[test]
    fn budget_below_one_rollout_returns_initial_params() {
        let cfg = PpoConfig { total_steps: 499, ..small() };
        let out = train(&mut DoubleIntegrator::default(), &cfg, 4).unwrap();
        assert!(out.curve.is_empty());
        let mut rng = stream(4, 0);
        let init = PolicyParams::init(2, 1, &cfg.hidden, cfg.init_log_std, &mut rng).unwrap();
        assert_eq!(out.params, init);
    }

    #[test]
    fn training_is_reproducible() {
        let a = train(&mut DoubleIntegrator::default(), &small(), 9).unwrap();
        let b = train(&mut DoubleIntegrator::default(), &small(), 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.curve.len(), 6);
        let c = train(&mut DoubleIntegrator::default(), &small(), 10).unwrap();
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn curve_rows_are_consistent() {
        let out = train(&mut DoubleIntegrator::default(), &small(), 2).unwrap();
        for (i, row) in out.curve.iter().enumerate() {
            assert_eq!(row.iteration, i);
            assert_eq!(row.env_steps, (i + 1) * 500);
            assert_eq!(row.episodes, 10);
            assert_eq!(row.mean_length, Some(50.0));
            assert!((0.0..=1.0).contains(&row.clip_fraction));
            assert!(!row.aborted);
        }
        assert!(out.params.is_finite());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = PpoConfig { gamma: 1.5, ..small() };
        assert!(matches!(train(&mut DoubleIntegrator::default(), &cfg, 0), Err(Error::Config { .. })));
    }
}
