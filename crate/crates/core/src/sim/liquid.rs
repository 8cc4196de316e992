//! Particle liquid: threshold emission from the cup lip, ballistic flight and
//! landing classification against the container opening and rim.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::arm::CupPose;
use super::config::EnvConfig;
use super::env::EnvState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    InCup,
    InFlight,
    SettledIn,
    SpilledOut,
}

impl Phase {
    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::SettledIn | Phase::SpilledOut)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
    pub phase: Phase,
}

/// Where a particle ended up when it crossed the rim plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LandingZone {
    Inside,
    Rim,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landing {
    pub x: f64,
    pub zone: LandingZone,
    /// Vertical impact speed at the rim plane (m/s).
    pub speed: f64,
}

/// Tilt at which the free surface reaches the lip, for a given remaining fill
/// fraction. Decreases monotonically as the cup fills.
pub fn spill_angle(fill_remaining: f64, config: &EnvConfig) -> f64 {
    let cup = &config.cup;
    let headroom = cup.depth - fill_remaining.clamp(0.0, 1.0) * cup.liquid_height;
    (headroom / cup.half_width).atan()
}

/// Emission rate in particles per second for the given tilt and fill.
pub fn emission_rate(tilt: f64, fill_remaining: f64, config: &EnvConfig) -> f64 {
    if fill_remaining <= 0.0 {
        return 0.0;
    }
    let margin = tilt.abs() - spill_angle(fill_remaining, config);
    if margin <= 0.0 {
        0.0
    } else {
        (config.emission_gain * margin).min(config.emission_rate_max)
    }
}

pub fn classify_landing(x: f64, config: &EnvConfig) -> LandingZone {
    let c = &config.container;
    let d = (x - c.center_x).abs();
    if d < c.half_width {
        LandingZone::Inside
    } else if d <= c.half_width + c.rim_half_thickness {
        LandingZone::Rim
    } else {
        LandingZone::Outside
    }
}

/// Converts in-cup particles to in-flight ones when the cup is tipped past the
/// spill angle. Returns the number emitted this step.
///
/// The fractional part of `rate × dt` carries over between steps, so the
/// long-run count matches the rate exactly. The carry resets whenever the
/// rate drops to zero.
pub fn emission_update(state: &mut EnvState, pose: &CupPose, lip_velocity: [f64; 2], config: &EnvConfig) -> usize {
    let fill = state.fill_remaining();
    let rate = emission_rate(pose.tilt, fill, config);
    if rate <= 0.0 {
        state.emission_carry = 0.0;
        return 0;
    }
    state.emission_carry += rate * config.dt;
    let whole = state.emission_carry.floor();
    state.emission_carry -= whole;
    let n = (whole as usize).min(state.counts.in_cup);
    for _ in 0..n {
        let i = state.next_emit;
        let jx: f64 = state.rng.sample(StandardNormal);
        let jz: f64 = state.rng.sample(StandardNormal);
        let p = &mut state.particles[i];
        p.phase = Phase::InFlight;
        p.position = pose.lip;
        p.velocity = [
            lip_velocity[0] + config.jet_speed * pose.normal[0] + config.jet_jitter * jx,
            lip_velocity[1] + config.jet_speed * pose.normal[1] + config.jet_jitter * jz,
        ];
        state.next_emit += 1;
    }
    state.counts.in_cup -= n;
    state.counts.in_flight += n;
    if state.counts.in_cup == 0 {
        state.emission_carry = 0.0;
    }
    n
}

/// Integrates in-flight particles one step (gravity only) and resolves landings.
///
/// A descending particle that reaches the rim plane lands: inside the opening
/// it settles, on the rim annulus it is booked as rim mass, anywhere else it is
/// spilled. Landings inside add `m |v_z|` to the step's impact impulse.
pub fn particle_update(state: &mut EnvState, config: &EnvConfig) {
    let g = config.gravity;
    let dt = config.dt;
    let rim = config.container.rim_height;
    state.last_impact_impulse = 0.0;
    state.landings.clear();
    if state.counts.in_flight == 0 {
        return;
    }
    for p in state.particles.iter_mut().filter(|p| p.phase == Phase::InFlight) {
        let [x0, z0] = p.position;
        let vz0 = p.velocity[1];
        let vz1 = vz0 - g * dt;
        let x1 = x0 + p.velocity[0] * dt;
        // exact for constant gravity; plain semi-implicit Euler overstates
        // the impact speed of short drops by several percent
        let z1 = z0 + 0.5 * (vz0 + vz1) * dt;
        p.velocity[1] = vz1;
        p.position = [x1, z1];
        if !(z1 < rim && vz1 < 0.0) {
            continue;
        }
        let (x, speed) = if z0 >= rim {
            let frac = (z0 - rim) / (z0 - z1);
            let x = x0 + frac * (x1 - x0);
            // exact ballistic speed at the rim plane
            let speed = (vz0 * vz0 + 2.0 * g * (z0 - rim)).sqrt();
            (x, speed)
        } else {
            (x1, vz1.abs())
        };
        let mut zone = classify_landing(x, config);
        // liquid released below the rim plane cannot reach the rim top
        if z0 < rim && zone == LandingZone::Rim {
            zone = LandingZone::Outside;
        }
        p.position = [x, rim];
        p.velocity = [0.0, 0.0];
        state.counts.in_flight -= 1;
        match zone {
            LandingZone::Inside => {
                p.phase = Phase::SettledIn;
                state.counts.settled += 1;
                state.last_impact_impulse += state.particle_mass * speed;
            }
            LandingZone::Rim => {
                p.phase = Phase::SpilledOut;
                state.counts.rim += 1;
            }
            LandingZone::Outside => {
                p.phase = Phase::SpilledOut;
                state.counts.spilled += 1;
            }
        }
        state.landings.push(Landing { x, zone, speed });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::env::reset;

    fn state_with_one_in_flight(x: f64, z: f64) -> (EnvState, EnvConfig) {
        let cfg = EnvConfig {
            particle_count: 1,
            ..EnvConfig::default()
        };
        let (mut st, _) = reset(&cfg, 7).unwrap();
        st.particles[0] = Particle {
            position: [x, z],
            velocity: [0.0, 0.0],
            phase: Phase::InFlight,
        };
        st.counts.in_cup = 0;
        st.counts.in_flight = 1;
        st.next_emit = 1;
        (st, cfg)
    }

    fn drop_until_landed(st: &mut EnvState, cfg: &EnvConfig) -> Landing {
        for _ in 0..10_000 {
            particle_update(st, cfg);
            if let Some(l) = st.landings.first() {
                return *l;
            }
        }
        panic!("particle never landed");
    }

    #[test]
    fn spill_angle_decreases_with_fill() {
        let cfg = EnvConfig::default();
        let mut prev = f64::INFINITY;
        for i in 0..=10 {
            let a = spill_angle(i as f64 / 10.0, &cfg);
            assert!(a < prev);
            prev = a;
        }
        assert!((spill_angle(1.0, &cfg) - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn no_emission_below_threshold() {
        let cfg = EnvConfig::default();
        assert_eq!(emission_rate(0.5, 1.0, &cfg), 0.0);
        assert_eq!(emission_rate(-0.7, 1.0, &cfg), 0.0);
        assert!(emission_rate(1.0, 1.0, &cfg) > 0.0);
        assert_eq!(emission_rate(3.0, 1.0, &cfg), cfg.emission_rate_max);
        assert_eq!(emission_rate(3.0, 0.0, &cfg), 0.0);
    }

    #[test]
    fn straight_drop_inside_settles() {
        let cfg0 = EnvConfig::default();
        let (mut st, cfg) = state_with_one_in_flight(cfg0.container.center_x, 0.5);
        let l = drop_until_landed(&mut st, &cfg);
        assert_eq!(l.zone, LandingZone::Inside);
        assert_eq!(st.particles[0].phase, Phase::SettledIn);
        assert_eq!(st.counts.settled, 1);
    }

    #[test]
    fn drop_beyond_rim_spills_without_rim_mass() {
        let cfg0 = EnvConfig::default();
        let (mut st, cfg) = state_with_one_in_flight(cfg0.container.center_x + 0.3, 0.5);
        let l = drop_until_landed(&mut st, &cfg);
        assert_eq!(l.zone, LandingZone::Outside);
        assert_eq!(st.counts.rim, 0);
        assert_eq!(st.counts.spilled, 1);
        assert_eq!(st.particles[0].phase, Phase::SpilledOut);
    }

    #[test]
    fn drop_on_rim_books_rim_mass() {
        let cfg0 = EnvConfig::default();
        let x = cfg0.container.center_x - cfg0.container.half_width - 0.5 * cfg0.container.rim_half_thickness;
        let (mut st, cfg) = state_with_one_in_flight(x, 0.5);
        drop_until_landed(&mut st, &cfg);
        assert_eq!(st.counts.rim, 1);
        assert_eq!(st.counts.spilled, 0);
    }

    #[test]
    fn impact_impulse_matches_free_fall() {
        let cfg0 = EnvConfig::default();
        for h in [0.05, 0.1, 0.2, 0.37, 1.0] {
            let (mut st, cfg) = state_with_one_in_flight(cfg0.container.center_x, cfg0.container.rim_height + h);
            drop_until_landed(&mut st, &cfg);
            let expected = cfg.particle_mass * (2.0 * cfg.gravity * h).sqrt();
            let rel = (st.last_impact_impulse - expected).abs() / expected;
            assert!(rel < 0.02, "h={h} rel={rel}");
        }
    }
}
