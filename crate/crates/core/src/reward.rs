//! Cost-benefit reward and Gaussian mutation of its weights.
//!
//! `R = exp(-t / w_t) · w_a · A − w_e · E` with accuracy `A`, elapsed time `t`
//! and effort `E`. Only `w_t` and `w_e` are ever mutated; `w_a` is carried
//! through every configuration unchanged.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardWeights {
    pub w_a: f64,
    pub w_t: f64,
    pub w_e: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w_a: 1.0,
            w_t: 4.0,
            w_e: 0.2,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.w_a.is_finite() && self.w_a > 0.0) {
            return Err(Error::config("w_a", format!("must be finite and > 0 (got {})", self.w_a)));
        }
        if !(self.w_t.is_finite() && self.w_t > 0.0) {
            return Err(Error::config("w_t", format!("must be finite and > 0 (got {})", self.w_t)));
        }
        if !(self.w_e.is_finite() && self.w_e >= 0.0) {
            return Err(Error::config("w_e", format!("must be finite and >= 0 (got {})", self.w_e)));
        }
        Ok(())
    }

    /// Time discount `exp(-t / w_t)`.
    pub fn discount(&self, elapsed: f64) -> f64 {
        (-elapsed / self.w_t).exp()
    }
}

/// The three reward inputs of one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardInput {
    /// Settled fraction in `[0, 1]`.
    pub accuracy: f64,
    /// Seconds since the start of the episode.
    pub elapsed: f64,
    /// Effort for the step (N²·m²·s).
    pub effort: f64,
}

impl RewardInput {
    fn check(&self) -> Result<()> {
        let RewardInput { accuracy, elapsed, effort } = *self;
        if !(accuracy.is_finite() && elapsed.is_finite() && effort.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite reward input (A={accuracy}, t={elapsed}, E={effort})"
            )));
        }
        Ok(())
    }
}

pub fn compute_reward(weights: &RewardWeights, input: &RewardInput) -> Result<f64> {
    input.check()?;
    if !(weights.w_a.is_finite() && weights.w_t.is_finite() && weights.w_e.is_finite()) {
        return Err(Error::Numeric("non-finite reward weight".into()));
    }
    Ok(weights.discount(input.elapsed) * weights.w_a * input.accuracy - weights.w_e * input.effort)
}

/// Dense per-step form of the reward.
///
/// The accuracy term is differenced against the previous step,
/// `w_a (exp(-t_k/w_t) A_k − exp(-t_{k-1}/w_t) A_{k-1})`, so an episode's
/// return telescopes to the terminal discounted accuracy, while effort is
/// charged every step. `previous` is `None` on the first step of an episode
/// (equivalent to `A = 0`).
pub fn per_step_reward(weights: &RewardWeights, previous: Option<&RewardInput>, current: &RewardInput) -> f64 {
    let term = |i: &RewardInput| weights.w_a * weights.discount(i.elapsed) * i.accuracy;
    let before = previous.map(term).unwrap_or(0.0);
    term(current) - before - weights.w_e * current.effort
}

/// Which invariant a mutated weight has to respect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// Strictly positive (`w_t`).
    Time,
    /// Non-negative (`w_e`).
    Effort,
}

impl WeightKind {
    fn admits(self, w: f64) -> bool {
        match self {
            WeightKind::Time => w > 0.0,
            WeightKind::Effort => w >= 0.0,
        }
    }
}

/// Draws `base + ε`, `ε ~ N(0, σ²)`, resampling until the result is valid for `kind`.
pub fn mutate_weight<R: Rng + ?Sized>(base: f64, sigma: f64, kind: WeightKind, rng: &mut R) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::config("sigma", format!("must be finite and > 0 (got {sigma})")));
    }
    if !base.is_finite() {
        return Err(Error::Numeric(format!("non-finite base weight {base}")));
    }
    // A base far outside the valid region could loop for a very long time.
    for _ in 0..1_000_000 {
        let eps: f64 = rng.sample(StandardNormal);
        let w = base + sigma * eps;
        if kind.admits(w) {
            return Ok(w);
        }
    }
    Err(Error::Numeric(format!(
        "could not draw a valid weight from N({base}, {sigma}²)"
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MutationSpec {
    pub sigma_t: f64,
    pub sigma_e: f64,
    /// Multipliers of σ, ascending, containing 0.
    pub grid_offsets: Vec<f64>,
}

impl Default for MutationSpec {
    fn default() -> Self {
        Self {
            sigma_t: 1.0,
            sigma_e: 0.05,
            grid_offsets: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
        }
    }
}

impl MutationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_t.is_finite() && self.sigma_t > 0.0) {
            return Err(Error::config("sigma_t", "must be finite and > 0"));
        }
        if !(self.sigma_e.is_finite() && self.sigma_e > 0.0) {
            return Err(Error::config("sigma_e", "must be finite and > 0"));
        }
        if self.grid_offsets.is_empty() || self.grid_offsets.iter().any(|k| !k.is_finite()) {
            return Err(Error::config("grid_offsets", "must be a non-empty list of finite numbers"));
        }
        if !self.grid_offsets.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::config("grid_offsets", "must be strictly ascending"));
        }
        if !self.grid_offsets.contains(&0.0) {
            return Err(Error::config("grid_offsets", "must contain 0 (the baseline)"));
        }
        Ok(())
    }

    /// Number of grid cells (`offsets²`).
    pub fn grid_len(&self) -> usize {
        self.grid_offsets.len() * self.grid_offsets.len()
    }

    /// Row-major index of the baseline cell.
    pub fn baseline_index(&self) -> usize {
        let k = self.grid_offsets.iter().position(|&o| o == 0.0).unwrap_or(0);
        k * self.grid_offsets.len() + k
    }
}

/// Cartesian grid of mutated weights, time outer and effort inner.
///
/// Time weights are floored at `0.1 × base.w_t`, effort weights at 0.
pub fn build_weight_grid(base: &RewardWeights, spec: &MutationSpec) -> Result<Vec<RewardWeights>> {
    base.validate()?;
    spec.validate()?;
    let t_floor = 0.1 * base.w_t;
    let mut grid = Vec::with_capacity(spec.grid_len());
    for &kt in &spec.grid_offsets {
        let w_t = (base.w_t + kt * spec.sigma_t).max(t_floor);
        for &ke in &spec.grid_offsets {
            let w_e = (base.w_e + ke * spec.sigma_e).max(0.0);
            grid.push(RewardWeights { w_a: base.w_a, w_t, w_e });
        }
    }
    Ok(grid)
}

/// Random-mode mutation of `w_t` and `w_e`.
pub fn mutate_weights<R: Rng + ?Sized>(base: &RewardWeights, spec: &MutationSpec, rng: &mut R) -> Result<RewardWeights> {
    base.validate()?;
    Ok(RewardWeights {
        w_a: base.w_a,
        w_t: mutate_weight(base.w_t, spec.sigma_t, WeightKind::Time, rng)?,
        w_e: mutate_weight(base.w_e, spec.sigma_e, WeightKind::Effort, rng)?,
    })
}
