//! Per-step trajectory logs, normalised to the initial end-effector pose.

use serde::{Deserialize, Serialize};

use crate::sim::{CupPose, EnvConfig, EnvState, Transition};

/// Raw simulator signals for one step: the pose the action was applied
/// from, and everything measured after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    /// End-effector x, z and wrist angle before the step.
    pub pose: [f64; 3],
    pub force_z: f64,
    pub torques: [f64; 3],
    pub effort: f64,
    pub settled_mass: f64,
    pub spilled_mass: f64,
    pub rim_mass: f64,
    pub in_cup_mass: f64,
    pub in_flight_mass: f64,
    pub emission_active: bool,
    pub landing_x: Vec<f64>,
}

/// A simulator episode as a sequence of [`TraceStep`]s plus the constants
/// needed to interpret it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvTrace {
    pub dt: f64,
    pub horizon: usize,
    pub total_mass: f64,
    pub target_mass: f64,
    /// Container opening half-width (m).
    pub opening_half_width: f64,
    pub steps: Vec<TraceStep>,
}

impl EnvTrace {
    pub fn new(config: &EnvConfig) -> Self {
        Self {
            dt: config.dt,
            horizon: config.horizon,
            total_mass: config.total_mass(),
            target_mass: config.target_fill_fraction * config.total_mass(),
            opening_half_width: config.container.half_width,
            steps: Vec::new(),
        }
    }

    /// Appends one step given the cup pose before it and the state after it.
    pub fn push(&mut self, before: &CupPose, after: &EnvState, tr: &Transition) {
        self.steps.push(TraceStep {
            pose: [before.end_effector[0], before.end_effector[1], before.wrist_angle],
            force_z: tr.info.scale.force_z,
            torques: tr.info.applied_torques,
            effort: tr.info.effort,
            settled_mass: after.settled_mass(),
            spilled_mass: after.spilled_mass(),
            rim_mass: after.rim_mass(),
            in_cup_mass: after.in_cup_mass(),
            in_flight_mass: after.in_flight_mass(),
            emission_active: tr.info.emission_active,
            landing_x: tr.info.landings.iter().map(|l| l.x).collect(),
        });
    }
}

/// One line of a trajectory log. Pose entries are relative to the initial
/// pose; `t` is the time at the start of the step, masses are cumulative
/// after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSample {
    pub t: f64,
    pub x: f64,
    pub z: f64,
    pub angle: f64,
    pub force_z: f64,
    pub torques: [f64; 3],
    pub effort: f64,
    pub settled_mass: f64,
    pub spilled_mass: f64,
    pub rim_mass: f64,
    pub in_cup_mass: f64,
    pub in_flight_mass: f64,
    pub emission_active: bool,
    pub landing_x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub dt: f64,
    pub horizon: usize,
    pub total_mass: f64,
    pub target_mass: f64,
    pub opening_half_width: f64,
    pub samples: Vec<LogSample>,
}

/// Normalises a trace against its first pose.
pub fn record(trace: &EnvTrace) -> TrajectoryLog {
    let origin = trace.steps.first().map(|s| s.pose).unwrap_or([0.0; 3]);
    let samples = trace
        .steps
        .iter()
        .enumerate()
        .map(|(k, s)| LogSample {
            t: k as f64 * trace.dt,
            x: s.pose[0] - origin[0],
            z: s.pose[1] - origin[1],
            angle: s.pose[2] - origin[2],
            force_z: s.force_z,
            torques: s.torques,
            effort: s.effort,
            settled_mass: s.settled_mass,
            spilled_mass: s.spilled_mass,
            rim_mass: s.rim_mass,
            in_cup_mass: s.in_cup_mass,
            in_flight_mass: s.in_flight_mass,
            emission_active: s.emission_active,
            landing_x: s.landing_x.clone(),
        })
        .collect();
    TrajectoryLog {
        dt: trace.dt,
        horizon: trace.horizon,
        total_mass: trace.total_mass,
        target_mass: trace.target_mass,
        opening_half_width: trace.opening_half_width,
        samples,
    }
}

impl TrajectoryLog {
    /// JSON Lines: one object per sample.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            out.push_str(&serde_json::to_string(s).expect("log samples serialise"));
            out.push('\n');
        }
        out
    }
}
