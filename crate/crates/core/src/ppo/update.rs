//! Clipped-surrogate loss, its exact gradient and the epoch/minibatch loop.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamHyper, AdamState};
use super::buffer::{compute_gae, normalize_advantages, RolloutBuffer};
use super::config::PpoConfig;
use super::mlp::Cache;
use super::policy::{gaussian_entropy, gaussian_log_prob, PolicyParams};
use crate::error::{Error, Result};

/// Weights of the three loss terms; kept separate from [`PpoConfig`] so each
/// term can be exercised on its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCoeffs {
    pub clip: f64,
    pub value: f64,
    pub entropy: f64,
}

impl LossCoeffs {
    pub fn from_config(c: &PpoConfig) -> Self {
        Self {
            clip: c.clip,
            value: c.value_coef,
            entropy: c.entropy_coef,
        }
    }
}

/// One training sample with its (normalised) advantage and value target.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub observation: &'a [f64],
    pub action: &'a [f64],
    pub old_log_prob: f64,
    pub advantage: f64,
    pub target: f64,
}

/// Gradient buffers laid out like [`PolicyParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub policy: Vec<f64>,
    pub value: Vec<f64>,
    pub log_std: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(p: &PolicyParams) -> Self {
        Self {
            policy: vec![0.0; p.policy.len()],
            value: vec![0.0; p.value.len()],
            log_std: vec![0.0; p.log_std.len()],
        }
    }

    pub fn norm(&self) -> f64 {
        self.policy
            .iter()
            .chain(&self.value)
            .chain(&self.log_std)
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    fn scale(&mut self, k: f64) {
        for g in self.policy.iter_mut().chain(self.value.iter_mut()).chain(self.log_std.iter_mut()) {
            *g *= k;
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossParts {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
    /// Samples whose probability ratio left `[1 − ε, 1 + ε]`.
    pub clipped: usize,
    pub ratio_sum: f64,
}

/// Mean minibatch loss
/// `−min(ρA, clip(ρ)A) + c_v (V − target)² − c_e H` and its gradient.
pub fn loss_and_grad(params: &PolicyParams, batch: &[Sample], coeffs: &LossCoeffs) -> Result<(LossParts, Gradients)> {
    if batch.is_empty() {
        return Err(Error::usage("empty minibatch"));
    }
    let n = batch.len() as f64;
    let mut grads = Gradients::zeros_like(params);
    let mut parts = LossParts::default();
    let mut pc = Cache::default();
    let mut vc = Cache::default();
    let stds: Vec<f64> = params.log_std.iter().map(|s| s.exp()).collect();
    let mut d_mean = vec![0.0; params.act_dim()];

    for s in batch {
        params.policy_forward(s.observation, &mut pc)?;
        let mean = pc.output();
        let lp = gaussian_log_prob(mean, &params.log_std, s.action);
        let ratio = (lp - s.old_log_prob).exp();
        let unclipped = ratio * s.advantage;
        let clipped = ratio.clamp(1.0 - coeffs.clip, 1.0 + coeffs.clip) * s.advantage;
        parts.policy -= unclipped.min(clipped) / n;
        parts.ratio_sum += ratio;
        if (ratio - 1.0).abs() > coeffs.clip {
            parts.clipped += 1;
        }
        // the gradient flows only where the unclipped branch is the minimum
        let active = !((s.advantage > 0.0 && ratio > 1.0 + coeffs.clip) || (s.advantage < 0.0 && ratio < 1.0 - coeffs.clip));
        if active {
            // ∂(−ρA/n)/∂lp = −ρA/n
            let g_lp = -unclipped / n;
            for i in 0..d_mean.len() {
                let z = (s.action[i] - mean[i]) / stds[i];
                d_mean[i] = g_lp * z / stds[i];
                grads.log_std[i] += g_lp * (z * z - 1.0);
            }
            params.policy.backward(&pc, &d_mean, &mut grads.policy)?;
        }

        params.value_forward(s.observation, &mut vc)?;
        let err = vc.output()[0] - s.target;
        parts.value += coeffs.value * err * err / n;
        params.value.backward(&vc, &[2.0 * coeffs.value * err / n], &mut grads.value)?;
    }
    let entropy = gaussian_entropy(&params.log_std);
    parts.entropy = entropy;
    for g in &mut grads.log_std {
        *g -= coeffs.entropy;
    }
    parts.total = parts.policy + parts.value - coeffs.entropy * entropy;
    Ok((parts, grads))
}

/// Adam moments for every parameter group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    pub hyper: AdamHyper,
    pub policy: AdamState,
    pub value: AdamState,
    pub log_std: AdamState,
}

impl Optimizer {
    pub fn new(params: &PolicyParams, lr: f64) -> Self {
        Self {
            hyper: AdamHyper::with_lr(lr),
            policy: AdamState::new(params.policy.len()),
            value: AdamState::new(params.value.len()),
            log_std: AdamState::new(params.log_std.len()),
        }
    }

    pub fn apply(&mut self, params: &mut PolicyParams, grads: &Gradients) {
        adam_step(params.policy.params_mut(), &grads.policy, &mut self.policy, &self.hyper);
        adam_step(params.value.params_mut(), &grads.value, &mut self.value, &self.hyper);
        adam_step(&mut params.log_std, &grads.log_std, &mut self.log_std, &self.hyper);
        params.clamp_log_std();
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
    pub minibatches: usize,
    /// Set when a non-finite loss stopped the update early.
    pub aborted: Option<String>,
}

/// Runs `epochs` passes of shuffled minibatch Adam steps over the buffer.
///
/// On a non-finite loss or parameter the update stops and `params` and the
/// optimizer are restored to their state before the call.
pub fn ppo_update<R: Rng + ?Sized>(
    params: &mut PolicyParams,
    optimizer: &mut Optimizer,
    buffer: &RolloutBuffer,
    config: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats> {
    let (mut adv, targets) = compute_gae(buffer, config.gamma, config.lambda)?;
    normalize_advantages(&mut adv);
    let coeffs = LossCoeffs::from_config(config);
    let samples: Vec<Sample> = (0..buffer.len())
        .map(|i| Sample {
            observation: &buffer.observations[i],
            action: &buffer.actions[i],
            old_log_prob: buffer.log_probs[i],
            advantage: adv[i],
            target: targets[i],
        })
        .collect();

    let saved = (params.clone(), optimizer.clone());
    let mut stats = UpdateStats::default();
    let mut seen = 0usize;
    let mut clipped = 0usize;
    let mut ratio_sum = 0.0;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut batch = Vec::with_capacity(config.minibatch_size);
    'epochs: for _ in 0..config.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(config.minibatch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| samples[i]));
            let (parts, mut grads) = loss_and_grad(params, &batch, &coeffs)?;
            if !parts.total.is_finite() {
                stats.aborted = Some(format!("non-finite loss {} at minibatch {}", parts.total, stats.minibatches));
                break 'epochs;
            }
            if config.max_grad_norm > 0.0 {
                let norm = grads.norm();
                if norm > config.max_grad_norm {
                    grads.scale(config.max_grad_norm / norm);
                }
            }
            optimizer.apply(params, &grads);
            if !params.is_finite() {
                stats.aborted = Some(format!("non-finite parameters after minibatch {}", stats.minibatches));
                break 'epochs;
            }
            stats.minibatches += 1;
            stats.policy_loss += parts.policy;
            stats.value_loss += parts.value;
            stats.entropy = parts.entropy;
            seen += batch.len();
            clipped += parts.clipped;
            ratio_sum += parts.ratio_sum;
        }
    }
    if stats.aborted.is_some() {
        *params = saved.0;
        *optimizer = saved.1;
    }
    if stats.minibatches > 0 {
        stats.policy_loss /= stats.minibatches as f64;
        stats.value_loss /= stats.minibatches as f64;
        stats.mean_ratio = ratio_sum / seen as f64;
        stats.clip_fraction = clipped as f64 / seen as f64;
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Batch {
        obs: Vec<Vec<f64>>,
        act: Vec<Vec<f64>>,
        old: Vec<f64>,
        adv: Vec<f64>,
        tgt: Vec<f64>,
    }

    impl Batch {
        fn random(p: &PolicyParams, n: usize, rng: &mut ChaCha8Rng, perturb_old: f64) -> Self {
            let mut b = Batch { obs: vec![], act: vec![], old: vec![], adv: vec![], tgt: vec![] };
            for _ in 0..n {
                let o: Vec<f64> = (0..p.obs_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let (a, lp) = p.sample_action(&o, rng).unwrap();
                b.obs.push(o);
                b.act.push(a);
                b.old.push(lp + rng.random_range(-perturb_old..=perturb_old));
                b.adv.push(rng.random_range(-1.5..1.5));
                b.tgt.push(rng.random_range(-1.0..1.0));
            }
            b
        }

        fn samples(&self) -> Vec<Sample<'_>> {
            (0..self.obs.len())
                .map(|i| Sample {
                    observation: &self.obs[i],
                    action: &self.act[i],
                    old_log_prob: self.old[i],
                    advantage: self.adv[i],
                    target: self.tgt[i],
                })
                .collect()
        }
    }

    fn setup(seed: u64) -> (PolicyParams, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = PolicyParams::init(3, 2, &[5, 4], -0.3, &mut rng).unwrap();
        // make the policy head non-trivial so mean gradients are well scaled
        let n = p.policy.len();
        let head = 4 * 2 + 2;
        for w in &mut p.policy.params_mut()[n - head..] {
            *w += rng.random_range(-0.5..0.5);
        }
        (p, rng)
    }

    fn fd_check(coeffs: LossCoeffs, perturb_old: f64) {
        let (mut p, mut rng) = setup(21);
        let b = Batch::random(&p, 6, &mut rng, perturb_old);
        let (_, g) = loss_and_grad(&p, &b.samples(), &coeffs).unwrap();
        let h = 1e-5;
        let loss = |p: &PolicyParams| loss_and_grad(p, &b.samples(), &coeffs).unwrap().0.total;
        let check = |fd: f64, an: f64, what: &str| {
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
            assert!(rel < 1e-4 || (fd - an).abs() < 1e-9, "{what}: fd {fd} analytic {an}");
        };
        for i in 0..p.policy.len() {
            let o = p.policy.params()[i];
            p.policy.params_mut()[i] = o + h;
            let up = loss(&p);
            p.policy.params_mut()[i] = o - h;
            let down = loss(&p);
            p.policy.params_mut()[i] = o;
            check((up - down) / (2.0 * h), g.policy[i], &format!("policy[{i}]"));
        }
        for i in 0..p.value.len() {
            let o = p.value.params()[i];
            p.value.params_mut()[i] = o + h;
            let up = loss(&p);
            p.value.params_mut()[i] = o - h;
            let down = loss(&p);
            p.value.params_mut()[i] = o;
            check((up - down) / (2.0 * h), g.value[i], &format!("value[{i}]"));
        }
        for i in 0..p.log_std.len() {
            let o = p.log_std[i];
            p.log_std[i] = o + h;
            let up = loss(&p);
            p.log_std[i] = o - h;
            let down = loss(&p);
            p.log_std[i] = o;
            check((up - down) / (2.0 * h), g.log_std[i], &format!("log_std[{i}]"));
        }
    }

    #[test]
    fn gradient_matches_finite_differences_each_term() {
        fd_check(LossCoeffs { clip: 0.2, value: 0.0, entropy: 0.0 }, 0.0);
        fd_check(LossCoeffs { clip: 0.2, value: 0.5, entropy: 0.0 }, 0.0);
        fd_check(LossCoeffs { clip: 0.2, value: 0.0, entropy: 0.01 }, 0.0);
        // off-policy ratios so some samples sit in the clipped region
        fd_check(LossCoeffs { clip: 0.2, value: 0.5, entropy: 0.01 }, 0.1);
    }

    #[test]
    fn fresh_policy_gradient_is_vanilla_policy_gradient() {
        let (p, mut rng) = setup(5);
        let b = Batch::random(&p, 8, &mut rng, 0.0);
        let coeffs = LossCoeffs { clip: 0.2, value: 0.0, entropy: 0.0 };
        let (parts, g) = loss_and_grad(&p, &b.samples(), &coeffs).unwrap();
        assert!((parts.ratio_sum / 8.0 - 1.0).abs() < 1e-12);
        assert_eq!(parts.clipped, 0);
        // −(1/n) Σ A ∇log π, assembled directly
        let mut expected = vec![0.0; p.policy.len()];
        for i in 0..8 {
            let c = p.policy.forward(&b.obs[i]).unwrap();
            let dir: Vec<f64> = (0..2)
                .map(|k| {
                    let s = p.log_std[k].exp();
                    -b.adv[i] / 8.0 * (b.act[i][k] - c.output()[k]) / (s * s)
                })
                .collect();
            p.policy.backward(&c, &dir, &mut expected).unwrap();
        }
        for (a, e) in g.policy.iter().zip(&expected) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_advantages_leave_only_value_and_entropy() {
        let (p, mut rng) = setup(6);
        let mut b = Batch::random(&p, 5, &mut rng, 0.05);
        b.adv.iter_mut().for_each(|a| *a = 0.0);
        let coeffs = LossCoeffs { clip: 0.2, value: 0.5, entropy: 0.01 };
        let (parts, g) = loss_and_grad(&p, &b.samples(), &coeffs).unwrap();
        assert_eq!(parts.policy, 0.0);
        assert!(g.policy.iter().all(|&v| v == 0.0));
        assert!(g.log_std.iter().all(|&v| (v + 0.01).abs() < 1e-15));
        assert!(g.value.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn huge_clip_equals_unclipped_surrogate() {
        let (p, mut rng) = setup(8);
        let b = Batch::random(&p, 6, &mut rng, 0.5);
        let (loose, g) = loss_and_grad(&p, &b.samples(), &LossCoeffs { clip: 1e12, value: 0.0, entropy: 0.0 }).unwrap();
        assert_eq!(loose.clipped, 0);
        // unclipped surrogate −(1/n) Σ ρ A
        let mut expected = 0.0;
        for i in 0..6 {
            let m = p.mean(&b.obs[i]).unwrap();
            expected -= (gaussian_log_prob(&m, &p.log_std, &b.act[i]) - b.old[i]).exp() * b.adv[i] / 6.0;
        }
        assert!((loose.policy - expected).abs() < 1e-12);
        let (tight, g2) = loss_and_grad(&p, &b.samples(), &LossCoeffs { clip: 0.01, value: 0.0, entropy: 0.0 }).unwrap();
        assert!(tight.clipped > 0);
        assert_ne!(g, g2);
    }

    fn tiny_buffer(p: &PolicyParams, rng: &mut ChaCha8Rng) -> RolloutBuffer {
        let mut buf = RolloutBuffer::default();
        for t in 0..40 {
            let o: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (a, lp) = p.sample_action(&o, rng).unwrap();
            let r = -a.iter().map(|x| x * x).sum::<f64>();
            let v = p.value_of(&o).unwrap();
            buf.push(o, a, lp, r, v, t % 10 == 9);
        }
        buf
    }

    #[test]
    fn update_reports_bounded_statistics_and_is_deterministic() {
        let run = || {
            let (mut p, mut rng) = setup(9);
            let buf = tiny_buffer(&p, &mut rng);
            let cfg = PpoConfig { minibatch_size: 16, epochs: 4, learning_rate: 1e-2, ..PpoConfig::default() };
            let mut opt = Optimizer::new(&p, cfg.learning_rate);
            let stats = ppo_update(&mut p, &mut opt, &buf, &cfg, &mut rng).unwrap();
            (p, stats)
        };
        let (p1, s1) = run();
        let (p2, s2) = run();
        assert_eq!(p1, p2);
        assert_eq!(s1, s2);
        assert_eq!(s1.minibatches, 12);
        assert!((0.0..=1.0).contains(&s1.clip_fraction));
        assert!(s1.aborted.is_none());
        assert!(p1.is_finite());
    }

    #[test]
    fn non_finite_loss_aborts_and_restores() {
        let (mut p, mut rng) = setup(10);
        let mut buf = tiny_buffer(&p, &mut rng);
        buf.rewards[3] = f64::NAN;
        let before = p.clone();
        let cfg = PpoConfig { minibatch_size: 8, epochs: 2, ..PpoConfig::default() };
        let mut opt = Optimizer::new(&p, cfg.learning_rate);
        let opt_before = opt.clone();
        let stats = ppo_update(&mut p, &mut opt, &buf, &cfg, &mut rng).unwrap();
        assert!(stats.aborted.is_some());
        assert_eq!(p, before);
        assert_eq!(opt, opt_before);
    }
}
