//! Planar 3-link arm: decoupled unit-inertia joints with viscous damping.
//!
//! Angles are relative joint angles; the absolute angle of link `i` is the sum
//! of the first `i + 1` joint angles, measured counter-clockwise from +x in the
//! x-z plane. The first two joints are gravity-compensated, so only the cup
//! payload loads the wrist.

use serde::{Deserialize, Serialize};

use super::config::EnvConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    pub joint_angles: [f64; 3],
    pub joint_velocities: [f64; 3],
}

/// Commanded joint torques (N·m).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub torques: [f64; 3],
}

impl Action {
    pub fn new(torques: [f64; 3]) -> Self {
        Self { torques }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut torques = [0.0; 3];
        for (t, v) in torques.iter_mut().zip(values) {
            *t = *v;
        }
        Self { torques }
    }

    /// Torques clamped to the configured limit. Non-finite entries map to zero.
    pub fn clamped(&self, limit: f64) -> Self {
        let mut torques = self.torques;
        for t in &mut torques {
            *t = if t.is_finite() { t.clamp(-limit, limit) } else { 0.0 };
        }
        Self { torques }
    }

    /// Sum of squared torques.
    pub fn squared_norm(&self) -> f64 {
        self.torques.iter().map(|t| t * t).sum()
    }
}

/// Cup pose derived from the arm configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CupPose {
    pub end_effector: [f64; 2],
    /// Absolute angle of the wrist link.
    pub wrist_angle: f64,
    /// Tilt of the cup axis away from upright; positive tips the opening toward +x.
    pub tilt: f64,
    /// Unit vector out of the cup opening.
    pub normal: [f64; 2],
    /// Pouring edge (the lip on the side the cup is tipped toward).
    pub lip: [f64; 2],
    /// Centre of the cup opening.
    pub mouth: [f64; 2],
}

impl ArmState {
    pub fn at_rest(angles: [f64; 3]) -> Self {
        Self {
            joint_angles: angles,
            joint_velocities: [0.0; 3],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.joint_angles
            .iter()
            .chain(self.joint_velocities.iter())
            .all(|v| v.is_finite())
    }

    pub fn absolute_angles(&self) -> [f64; 3] {
        let q = self.joint_angles;
        [q[0], q[0] + q[1], q[0] + q[1] + q[2]]
    }

    pub fn end_effector(&self, config: &EnvConfig) -> [f64; 2] {
        let phi = self.absolute_angles();
        let mut p = config.base;
        for (len, a) in config.link_lengths.iter().zip(phi) {
            p[0] += len * a.cos();
            p[1] += len * a.sin();
        }
        p
    }

    pub fn cup_pose(&self, config: &EnvConfig) -> CupPose {
        let ee = self.end_effector(config);
        let wrist_angle = self.absolute_angles()[2];
        let home = config.home_angles.iter().sum::<f64>();
        let tilt = home - wrist_angle;
        let (s, c) = tilt.sin_cos();
        let normal = [s, c];
        let lateral = [c, -s];
        let side = if tilt >= 0.0 { 1.0 } else { -1.0 };
        let mouth = [
            ee[0] + config.cup.lip_offset * normal[0],
            ee[1] + config.cup.lip_offset * normal[1],
        ];
        let lip = [
            mouth[0] + side * config.cup.half_width * lateral[0],
            mouth[1] + side * config.cup.half_width * lateral[1],
        ];
        CupPose {
            end_effector: ee,
            wrist_angle,
            tilt,
            normal,
            lip,
            mouth,
        }
    }

    /// Payload torque seen by each joint (N·m); enters the dynamics with a minus sign.
    pub fn gravity_torque(&self, config: &EnvConfig, payload_mass: f64) -> [f64; 3] {
        let home = config.home_angles.iter().sum::<f64>();
        let tilt = home - self.absolute_angles()[2];
        [
            0.0,
            0.0,
            -payload_mass * config.gravity * config.payload_com_offset * tilt.sin(),
        ]
    }
}

/// One semi-implicit Euler step of the joint dynamics.
///
/// `ω' = ω + dt (τ − d ω − g(θ))`, `θ' = θ + dt ω'`, then joint limits clamp
/// the angle and zero the velocity at the stop. The action is clamped to the
/// torque limit before use.
pub fn arm_dynamics(arm: &ArmState, action: &Action, config: &EnvConfig, payload_mass: f64) -> ArmState {
    let tau = action.clamped(config.torque_limit).torques;
    let g = arm.gravity_torque(config, payload_mass);
    let mut next = *arm;
    for j in 0..3 {
        let w = arm.joint_velocities[j];
        let w_next = w + config.dt * (tau[j] - config.joint_damping[j] * w - g[j]);
        let mut q_next = arm.joint_angles[j] + config.dt * w_next;
        let mut w_out = w_next;
        if q_next < config.joint_lower[j] {
            q_next = config.joint_lower[j];
            w_out = 0.0;
        } else if q_next > config.joint_upper[j] {
            q_next = config.joint_upper[j];
            w_out = 0.0;
        }
        next.joint_angles[j] = q_next;
        next.joint_velocities[j] = w_out;
    }
    next
}
