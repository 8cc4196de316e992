use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::arm::{arm_dynamics, Action, ArmState, CupPose};
use super::config::EnvConfig;
use super::liquid::{emission_update, particle_update, Landing, Particle, Phase};
use crate::error::{Error, Result};
use crate::reward::RewardInput;

pub const OBS_DIM: usize = 12;
pub const ACT_DIM: usize = 3;

/// Fixed-length observation. Layout:
/// `[q1, q2, q3, w1, w2, w3, lip_x, lip_z, tilt, fill_remaining, settled_fraction, t/horizon]`.
pub type Observation = [f64; OBS_DIM];

/// Particle counts per bucket. Masses are derived as `count × particle_mass`,
/// so conservation is exact in integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MassCounts {
    pub in_cup: usize,
    pub in_flight: usize,
    pub settled: usize,
    pub spilled: usize,
    pub rim: usize,
}

impl MassCounts {
    pub fn total(&self) -> usize {
        self.in_cup + self.in_flight + self.settled + self.spilled + self.rim
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleReading {
    pub force_z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    /// Settled fraction of the total liquid mass.
    pub accuracy: f64,
    /// Squared applied torques integrated over the step (N²·m²·s).
    pub effort: f64,
    /// Time since reset after this step (s).
    pub elapsed: f64,
    pub scale: ScaleReading,
    /// Torques after clamping.
    pub applied_torques: [f64; 3],
    pub emitted: usize,
    pub emission_active: bool,
    pub landings: Vec<Landing>,
}

impl StepInfo {
    pub fn reward_input(&self) -> RewardInput {
        RewardInput {
            accuracy: self.accuracy,
            elapsed: self.elapsed,
            effort: self.effort,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Observation,
    pub info: StepInfo,
    pub done: bool,
}

/// Complete simulator state. Cloning yields an independent instance,
/// including the emission jitter generator.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub arm: ArmState,
    pub particles: Vec<Particle>,
    pub step_index: usize,
    pub counts: MassCounts,
    pub particle_mass: f64,
    pub last_impact_impulse: f64,
    pub landings: Vec<Landing>,
    pub emission_carry: f64,
    pub next_emit: usize,
    pub done: bool,
    pub rng: ChaCha8Rng,
}

impl EnvState {
    pub fn settled_mass(&self) -> f64 {
        self.counts.settled as f64 * self.particle_mass
    }

    pub fn spilled_mass(&self) -> f64 {
        self.counts.spilled as f64 * self.particle_mass
    }

    pub fn rim_mass(&self) -> f64 {
        self.counts.rim as f64 * self.particle_mass
    }

    pub fn in_cup_mass(&self) -> f64 {
        self.counts.in_cup as f64 * self.particle_mass
    }

    pub fn in_flight_mass(&self) -> f64 {
        self.counts.in_flight as f64 * self.particle_mass
    }

    pub fn fill_remaining(&self) -> f64 {
        self.counts.in_cup as f64 / self.particles.len() as f64
    }

    pub fn settled_fraction(&self) -> f64 {
        self.counts.settled as f64 / self.particles.len() as f64
    }

    fn sync_cup_particles(&mut self, pose: &CupPose) {
        for p in self.particles[self.next_emit..].iter_mut() {
            p.position = pose.mouth;
            p.velocity = [0.0, 0.0];
        }
    }
}

/// Fresh episode: home pose at rest, every particle in the cup.
pub fn reset(config: &EnvConfig, seed: u64) -> Result<(EnvState, Observation)> {
    config.validate()?;
    let arm = ArmState::at_rest(config.home_angles);
    let pose = arm.cup_pose(config);
    let particle = Particle {
        position: pose.mouth,
        velocity: [0.0, 0.0],
        phase: Phase::InCup,
    };
    let state = EnvState {
        arm,
        particles: vec![particle; config.particle_count],
        step_index: 0,
        counts: MassCounts {
            in_cup: config.particle_count,
            ..MassCounts::default()
        },
        particle_mass: config.particle_mass,
        last_impact_impulse: 0.0,
        landings: Vec::new(),
        emission_carry: 0.0,
        next_emit: 0,
        done: false,
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let obs = observe(&state, config);
    Ok((state, obs))
}

/// Advances the simulation by one `dt`.
pub fn step(state: &mut EnvState, action: &Action, config: &EnvConfig) -> Result<Transition> {
    if state.done || state.step_index >= config.horizon {
        return Err(Error::usage("step called on a finished episode; call reset first"));
    }
    let applied = action.clamped(config.torque_limit);
    let payload = config.cup_mass + state.in_cup_mass();
    let before = state.arm.cup_pose(config);
    state.arm = arm_dynamics(&state.arm, &applied, config, payload);
    let after = state.arm.cup_pose(config);
    let lip_velocity = [
        (after.lip[0] - before.lip[0]) / config.dt,
        (after.lip[1] - before.lip[1]) / config.dt,
    ];

    particle_update(state, config);
    let emitted = emission_update(state, &after, lip_velocity, config);
    state.sync_cup_particles(&after);
    state.step_index += 1;

    let target = config.target_fill_fraction * config.particle_count as f64;
    let filled = state.counts.settled as f64 >= target && state.counts.in_flight == 0;
    state.done = filled || state.step_index >= config.horizon;

    let info = StepInfo {
        accuracy: state.settled_fraction(),
        effort: applied.squared_norm() * config.dt,
        elapsed: state.step_index as f64 * config.dt,
        scale: scale_read(state, config),
        applied_torques: applied.torques,
        emitted,
        emission_active: super::liquid::emission_rate(after.tilt, state.fill_remaining(), config) > 0.0
            || emitted > 0,
        landings: state.landings.clone(),
    };
    Ok(Transition {
        observation: observe(state, config),
        info,
        done: state.done,
    })
}

/// Scale force: weight of the settled liquid plus the impact impulse of this
/// step's landings spread over one step.
pub fn scale_read(state: &EnvState, config: &EnvConfig) -> ScaleReading {
    ScaleReading {
        force_z: config.gravity * state.settled_mass() + state.last_impact_impulse / config.dt,
    }
}

pub fn observe(state: &EnvState, config: &EnvConfig) -> Observation {
    let pose = state.arm.cup_pose(config);
    let q = state.arm.joint_angles;
    let w = state.arm.joint_velocities;
    [
        q[0],
        q[1],
        q[2],
        w[0],
        w[1],
        w[2],
        pose.lip[0],
        pose.lip[1],
        pose.tilt,
        state.fill_remaining(),
        state.settled_fraction(),
        state.step_index as f64 / config.horizon as f64,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_initial_condition() {
        let cfg = EnvConfig::default();
        let (st, obs) = reset(&cfg, 42).unwrap();
        assert_eq!(st.settled_mass(), 0.0);
        assert!(st.particles.iter().all(|p| p.phase == Phase::InCup));
        assert_eq!(st.counts.in_cup, cfg.particle_count);
        assert_eq!(obs[9], 1.0);
        assert_eq!(obs[10], 0.0);
        assert_eq!(obs[11], 0.0);
    }

    #[test]
    fn reset_is_deterministic() {
        let cfg = EnvConfig::default();
        let (a, oa) = reset(&cfg, 42).unwrap();
        let (b, ob) = reset(&cfg, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(oa.map(f64::to_bits), ob.map(f64::to_bits));
    }

    #[test]
    fn reset_rejects_invalid_config() {
        let cfg = EnvConfig {
            particle_count: 0,
            ..EnvConfig::default()
        };
        assert!(matches!(reset(&cfg, 1), Err(Error::Config { .. })));
    }

    #[test]
    fn zero_torque_step_is_quiet() {
        let cfg = EnvConfig::default();
        let (mut st, _) = reset(&cfg, 42).unwrap();
        let tr = step(&mut st, &Action::default(), &cfg).unwrap();
        assert_eq!(tr.info.emitted, 0);
        assert_eq!(tr.info.accuracy, 0.0);
        assert_eq!(tr.info.effort, 0.0);
        assert!(!tr.done);
        assert_eq!(st.step_index, 1);
    }

    #[test]
    fn step_after_done_is_usage_error() {
        let cfg = EnvConfig {
            horizon: 2,
            ..EnvConfig::default()
        };
        let (mut st, _) = reset(&cfg, 0).unwrap();
        step(&mut st, &Action::default(), &cfg).unwrap();
        let tr = step(&mut st, &Action::default(), &cfg).unwrap();
        assert!(tr.done);
        assert!(matches!(step(&mut st, &Action::default(), &cfg), Err(Error::Usage(_))));
    }

    #[test]
    fn observation_purity() {
        let cfg = EnvConfig::default();
        let (mut st, _) = reset(&cfg, 3).unwrap();
        for _ in 0..20 {
            step(&mut st, &Action::new([0.1, -0.2, -1.0]), &cfg).unwrap();
        }
        let copy = st.clone();
        assert_eq!(observe(&st, &cfg).map(f64::to_bits), observe(&copy, &cfg).map(f64::to_bits));
    }

    #[test]
    fn all_settled_observation() {
        let cfg = EnvConfig::default();
        let (mut st, _) = reset(&cfg, 3).unwrap();
        for p in &mut st.particles {
            p.phase = Phase::SettledIn;
        }
        st.counts = MassCounts {
            settled: cfg.particle_count,
            ..MassCounts::default()
        };
        st.next_emit = cfg.particle_count;
        let obs = observe(&st, &cfg);
        assert_eq!(obs[10], 1.0);
        assert_eq!(obs[9], 0.0);
    }

    #[test]
    fn scale_static_weight() {
        let cfg = EnvConfig::default();
        let (mut st, _) = reset(&cfg, 3).unwrap();
        assert_eq!(scale_read(&st, &cfg).force_z, 0.0);
        // 100 particles of 1 g = 0.1 kg
        st.counts.settled = 100;
        st.counts.in_cup -= 100;
        assert!((scale_read(&st, &cfg).force_z - 0.981).abs() < 1e-12);
    }
}
