//! Diagonal Gaussian policy with a state-independent learnable log-std, a
//! separate value network and a running observation normaliser.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::{Cache, Mlp};
use crate::error::{Error, Result};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
const LN_2PI: f64 = 1.837_877_066_409_345_5;
const NORM_CLIP: f64 = 10.0;

/// Welford running mean and variance per observation entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningNorm {
    pub count: f64,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
}

impl RunningNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn update(&mut self, x: &[f64]) {
        self.count += 1.0;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / self.count;
            *s += d * (v - *m);
        }
    }

    pub fn std(&self, i: usize) -> f64 {
        if self.count < 2.0 {
            1.0
        } else {
            (self.m2[i] / self.count).sqrt().max(1e-6)
        }
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                if self.count < 2.0 {
                    v
                } else {
                    ((v - self.mean[i]) / self.std(i)).clamp(-NORM_CLIP, NORM_CLIP)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub policy: Mlp,
    pub value: Mlp,
    pub log_std: Vec<f64>,
    pub obs_norm: RunningNorm,
}

impl PolicyParams {
    /// `hidden` sizes are shared by both networks.
    pub fn init<R: Rng + ?Sized>(obs_dim: usize, act_dim: usize, hidden: &[usize], init_log_std: f64, rng: &mut R) -> Result<Self> {
        let mut p_sizes = vec![obs_dim];
        p_sizes.extend_from_slice(hidden);
        let mut v_sizes = p_sizes.clone();
        p_sizes.push(act_dim);
        v_sizes.push(1);
        Ok(Self {
            policy: Mlp::init(&p_sizes, 0.01, rng)?,
            value: Mlp::init(&v_sizes, 1.0, rng)?,
            log_std: vec![init_log_std.clamp(LOG_STD_MIN, LOG_STD_MAX); act_dim],
            obs_norm: RunningNorm::new(obs_dim),
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.policy.input_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.policy.output_dim()
    }

    pub fn is_finite(&self) -> bool {
        self.policy.params().iter().all(|v| v.is_finite())
            && self.value.params().iter().all(|v| v.is_finite())
            && self.log_std.iter().all(|v| v.is_finite())
    }

    pub fn clamp_log_std(&mut self) {
        for s in &mut self.log_std {
            *s = s.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    /// Structural checks used when loading an artifact.
    pub fn validate(&self) -> Result<()> {
        if self.value.input_dim() != self.policy.input_dim() || self.value.output_dim() != 1 {
            return Err(Error::format("value", "value network must map observations to a scalar"));
        }
        if self.log_std.len() != self.act_dim() {
            return Err(Error::format("log_std", format!("expected {} entries", self.act_dim())));
        }
        if self.log_std.iter().any(|s| !s.is_finite() || *s < LOG_STD_MIN || *s > LOG_STD_MAX) {
            return Err(Error::format("log_std", "entries must be finite and within [-5, 2]"));
        }
        let n = self.obs_dim();
        if self.obs_norm.mean.len() != n || self.obs_norm.m2.len() != n {
            return Err(Error::format("obs_norm", format!("expected {n} entries")));
        }
        if !self.obs_norm.count.is_finite() || self.obs_norm.count < 0.0 {
            return Err(Error::format("obs_norm.count", "must be a finite non-negative number"));
        }
        Ok(())
    }

    pub fn mean(&self, norm_obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.policy.forward(norm_obs)?.output().to_vec())
    }

    pub fn value_of(&self, norm_obs: &[f64]) -> Result<f64> {
        Ok(self.value.forward(norm_obs)?.output()[0])
    }

    /// Draws `mean + std ⊙ z` for a normalised observation and returns the
    /// action with its exact log-density.
    pub fn sample_action<R: Rng + ?Sized>(&self, norm_obs: &[f64], rng: &mut R) -> Result<(Vec<f64>, f64)> {
        let mean = self.mean(norm_obs)?;
        let action: Vec<f64> = mean
            .iter()
            .zip(&self.log_std)
            .map(|(m, s)| {
                let z: f64 = rng.sample(StandardNormal);
                m + s.exp() * z
            })
            .collect();
        let lp = gaussian_log_prob(&mean, &self.log_std, &action);
        Ok((action, lp))
    }

    /// Forward pass of the policy network returning the cache for backprop.
    pub fn policy_forward(&self, norm_obs: &[f64], cache: &mut Cache) -> Result<()> {
        self.policy.forward_into(norm_obs, cache)
    }

    pub fn value_forward(&self, norm_obs: &[f64], cache: &mut Cache) -> Result<()> {
        self.value.forward_into(norm_obs, cache)
    }
}

pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((m, s), a)| {
            let z = (a - m) / s.exp();
            -0.5 * z * z - s - 0.5 * LN_2PI
        })
        .sum()
}

/// Entropy of the diagonal Gaussian.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|s| s + 0.5 * (LN_2PI + 1.0)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn log_prob_at_mean() {
        let mean = [0.3, -1.0];
        let log_std = [0.2f64, -0.7];
        let expected: f64 = log_std.iter().map(|s| -0.5 * (2.0 * std::f64::consts::PI * (2.0 * s).exp()).ln()).sum();
        assert!((gaussian_log_prob(&mean, &log_std, &mean) - expected).abs() < 1e-12);
    }

    #[test]
    fn tiny_std_returns_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = PolicyParams::init(4, 2, &[8], LOG_STD_MIN, &mut rng).unwrap();
        p.log_std = vec![-30.0; 2]; // below the clamp, only for the limit check
        let obs = [0.1, 0.2, 0.3, 0.4];
        let mean = p.mean(&obs).unwrap();
        let (a, _) = p.sample_action(&obs, &mut rng).unwrap();
        for (x, m) in a.iter().zip(&mean) {
            assert!((x - m).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = PolicyParams::init(3, 2, &[5], 0.0, &mut rng).unwrap();
        let a = p.sample_action(&[0.0, 1.0, 2.0], &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = p.sample_action(&[0.0, 1.0, 2.0], &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn density_integrates_to_one_by_monte_carlo() {
        // E_{a~U(box)}[p(a)] · vol ≈ mass inside the box; with a ±6σ box that is ≈ 1.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mean = [0.5, -0.25];
        let log_std = [(-0.3f64), 0.4];
        let half: Vec<f64> = log_std.iter().map(|s| 6.0 * s.exp()).collect();
        let vol: f64 = half.iter().map(|h| 2.0 * h).product();
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let a: Vec<f64> = mean.iter().zip(&half).map(|(m, h)| m + rng.random_range(-h..*h)).collect();
            let v = gaussian_log_prob(&mean, &log_std, &a).exp() * vol;
            sum += v;
            sum2 += v * v;
        }
        let est = sum / n as f64;
        let se = ((sum2 / n as f64 - est * est) / n as f64).sqrt();
        assert!((est - 1.0).abs() < 3.0 * se, "est {est} se {se}");
    }

    #[test]
    fn running_norm_matches_batch_statistics() {
        let data = [[1.0, 10.0], [2.0, 20.0], [4.0, 40.0], [7.0, 70.0]];
        let mut n = RunningNorm::new(2);
        for d in &data {
            n.update(d);
        }
        assert!((n.mean[0] - 3.5).abs() < 1e-12);
        let var0 = data.iter().map(|d| (d[0] - 3.5f64).powi(2)).sum::<f64>() / 4.0;
        assert!((n.std(0) - var0.sqrt()).abs() < 1e-12);
        let z = n.normalize(&[3.5, 35.0]);
        assert!(z.iter().all(|v| v.abs() < 1e-12));
    }
}
