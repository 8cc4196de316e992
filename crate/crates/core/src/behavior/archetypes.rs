//! Scripted reference trajectories, one per behaviour label. They pin the
//! classifier rubric to concrete, reproducible motions in the simulator.

use super::classify::BehaviorLabel;
use super::log::EnvTrace;
use crate::error::Result;
use crate::sim::{reset, step, ramp, EnvConfig, Script, ScriptTarget};

/// Runs a joint-space script from reset to the end of the episode.
pub fn trace_script<F: Fn(f64) -> ScriptTarget>(script: &Script<F>, config: &EnvConfig, seed: u64) -> Result<EnvTrace> {
    let (mut state, _) = reset(config, seed)?;
    let mut trace = EnvTrace::new(config);
    loop {
        let before = state.arm.cup_pose(config);
        let time = state.step_index as f64 * config.dt;
        let action = script.action(&state.arm, time, config);
        let tr = step(&mut state, &action, config)?;
        trace.push(&before, &state, &tr);
        if tr.done {
            return Ok(trace);
        }
    }
}

/// Shoulder offset that swings out to `amplitude` over the first second and
/// then sweeps back and forth with the given period.
fn sweep(t: f64, amplitude: f64, period: f64) -> f64 {
    if t < 1.0 {
        amplitude * t
    } else {
        amplitude * (2.0 * std::f64::consts::PI * (t - 1.0) / period).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Archetype {
    BasePour,
    FastPour,
    SlowPour,
    RimPour,
    OscillatingPour,
    SweepingSpread,
    Idle,
    LatePour,
}

impl Archetype {
    pub const ALL: [Archetype; 8] = [
        Archetype::BasePour,
        Archetype::FastPour,
        Archetype::SlowPour,
        Archetype::RimPour,
        Archetype::OscillatingPour,
        Archetype::SweepingSpread,
        Archetype::Idle,
        Archetype::LatePour,
    ];

    pub fn intended_label(self) -> BehaviorLabel {
        match self {
            Archetype::BasePour => BehaviorLabel::PourBase,
            Archetype::FastPour => BehaviorLabel::PourFast,
            Archetype::SlowPour => BehaviorLabel::PourSlow,
            Archetype::RimPour => BehaviorLabel::RimCleaner,
            Archetype::OscillatingPour => BehaviorLabel::Mixing,
            Archetype::SweepingSpread => BehaviorLabel::Watering,
            Archetype::Idle => BehaviorLabel::NoPolicy,
            Archetype::LatePour => BehaviorLabel::Excluded,
        }
    }

    pub fn trace(self, config: &EnvConfig, seed: u64) -> Result<EnvTrace> {
        let end = config.duration();
        match self {
            Archetype::BasePour => trace_script(&Script::new(|t| ScriptTarget::tilt(ramp(t, 0.2, 1.5, 1.45))), config, seed),
            Archetype::FastPour => trace_script(&Script::new(|t| ScriptTarget::tilt(ramp(t, 0.0, 0.4, 1.6))), config, seed),
            Archetype::SlowPour => trace_script(&Script::new(|t| ScriptTarget::tilt(ramp(t, 0.5, 3.0, 1.35))), config, seed),
            Archetype::RimPour => trace_script(&Script::new(|t| ScriptTarget::tilt(ramp(t, 0.2, 1.0, 1.9))), config, seed),
            Archetype::OscillatingPour => trace_script(
                &Script::new(|t| ScriptTarget {
                    shoulder: 0.08 * (2.0 * std::f64::consts::PI * t / 0.6).sin(),
                    elbow: 0.0,
                    tilt: ramp(t, 0.2, 1.0, 1.45),
                }),
                config,
                seed,
            ),
            Archetype::SweepingSpread => trace_script(
                &Script::new(|t| ScriptTarget {
                    shoulder: sweep(t, 0.8, 3.0),
                    elbow: 0.0,
                    tilt: ramp(t, 0.2, 0.8, 0.85) + ramp(t, 1.0, 3.0, 0.6),
                }),
                config,
                seed,
            ),
            Archetype::Idle => trace_script(&Script::new(|_| ScriptTarget::tilt(0.0)), config, seed),
            Archetype::LatePour => trace_script(&Script::new(move |t| ScriptTarget::tilt(ramp(t, end - 1.5, 0.3, 0.9))), config, seed),
        }
    }
}
