//! Scripted joint-space controllers. They drive the simulator in tests and
//! produce the hand-built archetype trajectories for the classifier.

use super::arm::{Action, ArmState};
use super::config::EnvConfig;
use super::env::{reset, step, EnvState, StepInfo};
use crate::error::Result;

/// PD tracking of a time-varying joint target. The wrist target is expressed
/// as a cup tilt so scripts stay readable.
pub struct Script<F: Fn(f64) -> ScriptTarget> {
    pub target: F,
    pub kp: f64,
    pub kd: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ScriptTarget {
    /// Offsets of joints 1 and 2 from the home pose (rad).
    pub shoulder: f64,
    pub elbow: f64,
    /// Desired cup tilt (rad, positive toward +x).
    pub tilt: f64,
}

impl ScriptTarget {
    pub fn tilt(tilt: f64) -> Self {
        Self { shoulder: 0.0, elbow: 0.0, tilt }
    }
}

impl<F: Fn(f64) -> ScriptTarget> Script<F> {
    pub fn new(target: F) -> Self {
        Self { target, kp: 40.0, kd: 8.0 }
    }

    pub fn action(&self, arm: &ArmState, time: f64, config: &EnvConfig) -> Action {
        let t = (self.target)(time);
        let home = config.home_angles;
        let q1 = home[0] + t.shoulder;
        let q2 = home[1] + t.elbow;
        let q3 = home.iter().sum::<f64>() - t.tilt - q1 - q2;
        let target = [q1, q2, q3];
        let mut torques = [0.0; 3];
        for j in 0..3 {
            torques[j] = self.kp * (target[j] - arm.joint_angles[j]) - self.kd * arm.joint_velocities[j];
        }
        Action::new(torques)
    }
}

/// Everything a scripted rollout produced, one entry per step.
pub struct ScriptedRun {
    pub states: Vec<EnvState>,
    pub infos: Vec<StepInfo>,
    pub done: bool,
}

/// Runs a script from reset until the episode ends.
pub fn run_script<F: Fn(f64) -> ScriptTarget>(script: &Script<F>, config: &EnvConfig, seed: u64) -> Result<ScriptedRun> {
    let (mut state, _) = reset(config, seed)?;
    let mut states = vec![state.clone()];
    let mut infos = Vec::new();
    let mut done = false;
    while !done {
        let time = state.step_index as f64 * config.dt;
        let action = script.action(&state.arm, time, config);
        let tr = step(&mut state, &action, config)?;
        done = tr.done;
        states.push(state.clone());
        infos.push(tr.info);
    }
    Ok(ScriptedRun { states, infos, done })
}

/// Linear ramp from 0 to `peak` over `[start, start + duration]`, then hold.
pub fn ramp(time: f64, start: f64, duration: f64, peak: f64) -> f64 {
    if time <= start {
        0.0
    } else if time >= start + duration {
        peak
    } else {
        peak * (time - start) / duration
    }
}
