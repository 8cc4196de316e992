use crate::error::{Error, Result};

/// Aligned per-step arrays for one rollout plus the bootstrap value of the
/// state after the last step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBuffer {
    /// Normalised observations, exactly as fed to the networks.
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    pub bootstrap_value: f64,
}

impl RolloutBuffer {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            observations: Vec::with_capacity(n),
            actions: Vec::with_capacity(n),
            log_probs: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
            dones: Vec::with_capacity(n),
            bootstrap_value: 0.0,
        }
    }

    pub fn push(&mut self, obs: Vec<f64>, action: Vec<f64>, log_prob: f64, reward: f64, value: f64, done: bool) {
        self.observations.push(obs);
        self.actions.push(action);
        self.log_probs.push(log_prob);
        self.rewards.push(reward);
        self.values.push(value);
        self.dones.push(done);
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn check(&self) -> Result<()> {
        let n = self.len();
        if n == 0 {
            return Err(Error::usage("rollout buffer is empty"));
        }
        if [self.observations.len(), self.actions.len(), self.log_probs.len(), self.values.len(), self.dones.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(Error::usage("rollout buffer arrays are misaligned"));
        }
        Ok(())
    }
}

/// GAE advantages and value targets (`A + V`), before normalisation.
///
/// `δ_t = r_t + γ V_{t+1} (1 − done_t) − V_t`,
/// `A_t = δ_t + γ λ (1 − done_t) A_{t+1}`, with `V_T` the bootstrap value.
pub fn compute_gae(buffer: &RolloutBuffer, gamma: f64, lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    buffer.check()?;
    let n = buffer.len();
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = buffer.bootstrap_value;
    for t in (0..n).rev() {
        let live = if buffer.dones[t] { 0.0 } else { 1.0 };
        let delta = buffer.rewards[t] + gamma * next_value * live - buffer.values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
        next_value = buffer.values[t];
    }
    let targets = adv.iter().zip(&buffer.values).map(|(a, v)| a + v).collect();
    Ok((adv, targets))
}

/// Shifts to zero mean and scales to unit variance; a single sample (or zero
/// variance) is only centred.
pub fn normalize_advantages(adv: &mut [f64]) {
    let n = adv.len();
    if n == 0 {
        return;
    }
    let mean = adv.iter().sum::<f64>() / n as f64;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    for a in adv.iter_mut() {
        *a -= mean;
        if n > 1 && std > 1e-12 {
            *a /= std + 1e-8;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn buffer(rewards: &[f64], values: &[f64], dones: &[bool], bootstrap: f64) -> RolloutBuffer {
        let mut b = RolloutBuffer::default();
        for i in 0..rewards.len() {
            b.push(vec![0.0], vec![0.0], 0.0, rewards[i], values[i], dones[i]);
        }
        b.bootstrap_value = bootstrap;
        b
    }

    #[test]
    fn empty_buffer_is_usage_error() {
        assert!(matches!(compute_gae(&RolloutBuffer::default(), 0.9, 0.9), Err(Error::Usage(_))));
    }

    #[test]
    fn lambda_zero_gives_td_residual() {
        let b = buffer(&[1.0, -0.5, 2.0], &[0.3, 0.1, -0.2], &[false, false, false], 0.7);
        let (adv, _) = compute_gae(&b, 0.9, 0.0).unwrap();
        let expected = [1.0 + 0.9 * 0.1 - 0.3, -0.5 + 0.9 * -0.2 - 0.1, 2.0 + 0.9 * 0.7 + 0.2];
        for (a, e) in adv.iter().zip(expected) {
            assert!((a - e).abs() < 1e-15);
        }
    }

    #[test]
    fn gamma_zero_gives_reward_minus_value() {
        let b = buffer(&[1.0, -0.5, 2.0], &[0.3, 0.1, -0.2], &[false, true, false], 0.7);
        let (adv, _) = compute_gae(&b, 0.0, 0.95).unwrap();
        for i in 0..3 {
            assert!((adv[i] - (b.rewards[i] - b.values[i])).abs() < 1e-15);
        }
    }

    #[test]
    fn three_step_hand_trace() {
        // γ=0.9, λ=0.8, r=(1,0,2), V=(0.5,0.4,0.3), bootstrap 0.2, no dones.
        // δ2 = 2 + 0.18 - 0.3 = 1.88
        // δ1 = 0 + 0.27 - 0.4 = -0.13 ; A1 = -0.13 + 0.72·1.88 = 1.2236
        // δ0 = 1 + 0.36 - 0.5 = 0.86  ; A0 = 0.86 + 0.72·1.2236 = 1.740992
        let b = buffer(&[1.0, 0.0, 2.0], &[0.5, 0.4, 0.3], &[false; 3], 0.2);
        let (adv, targets) = compute_gae(&b, 0.9, 0.8).unwrap();
        let expected = [1.740992, 1.2236, 1.88];
        for i in 0..3 {
            assert!((adv[i] - expected[i]).abs() < 1e-12, "{i}: {}", adv[i]);
            assert!((targets[i] - (expected[i] + b.values[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn done_cuts_bootstrap() {
        let b = buffer(&[1.0, 1.0], &[0.0, 0.0], &[true, false], 100.0);
        let (adv, _) = compute_gae(&b, 0.99, 0.95).unwrap();
        assert!((adv[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalisation_guards_single_sample() {
        let mut a = vec![3.0];
        normalize_advantages(&mut a);
        assert_eq!(a, vec![0.0]);
        let mut a = vec![1.0, 2.0, 3.0, 6.0];
        normalize_advantages(&mut a);
        let mean: f64 = a.iter().sum::<f64>() / 4.0;
        let var: f64 = a.iter().map(|x| x * x).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn lambda_one_is_discounted_return_minus_baseline(
            rewards in proptest::collection::vec(-2.0f64..2.0, 10),
            values in proptest::collection::vec(-2.0f64..2.0, 10),
            dones in proptest::collection::vec(proptest::bool::weighted(0.2), 10),
            bootstrap in -2.0f64..2.0,
            gamma in 0.5f64..1.0,
        ) {
            let b = buffer(&rewards, &values, &dones, bootstrap);
            let (adv, _) = compute_gae(&b, gamma, 1.0).unwrap();
            for t in 0..10 {
                // direct discounted return to the end of the episode (or bootstrap)
                let mut ret = 0.0;
                let mut disc = 1.0;
                let mut k = t;
                loop {
                    ret += disc * rewards[k];
                    if dones[k] { break; }
                    disc *= gamma;
                    k += 1;
                    if k == 10 { ret += disc * bootstrap; break; }
                }
                prop_assert!((adv[t] - (ret - values[t])).abs() < 1e-10);
            }
        }
    }
}
