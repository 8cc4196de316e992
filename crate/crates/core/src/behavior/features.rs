//! Scalar behaviour features extracted from a trajectory log.

use serde::{Deserialize, Serialize};

use super::log::TrajectoryLog;
use crate::error::{Error, Result};

/// Moving-average window applied to the end-effector x-velocity.
pub const VELOCITY_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureParams {
    /// Smoothed |ẋ| below this (m/s) counts as standing still, so sensor-level
    /// jitter does not register as a reversal.
    pub velocity_deadband: f64,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self { velocity_deadband: 0.005 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorFeatures {
    pub fill_ratio: f64,
    pub spill_ratio: f64,
    pub rim_ratio: f64,
    /// Liquid still in the cup or in the air at the end.
    pub unreleased_ratio: f64,
    pub time_to_target: Option<f64>,
    pub effort_total: f64,
    pub oscillation_count: u32,
    pub landing_spread: f64,
    pub emission_ongoing_at_horizon: bool,
    pub length: usize,
}

pub fn extract_features(log: &TrajectoryLog, params: &FeatureParams) -> Result<BehaviorFeatures> {
    let last = log.samples.last().ok_or_else(|| Error::usage("cannot extract features from an empty log"))?;
    let total = log.total_mass;
    let fill_ratio = last.settled_mass / total;
    let spill_ratio = last.spilled_mass / total;
    let rim_ratio = last.rim_mass / total;
    let unreleased_ratio = 1.0 - fill_ratio - spill_ratio - rim_ratio;

    let time_to_target = log
        .samples
        .iter()
        .position(|s| s.settled_mass >= log.target_mass - 1e-12 * total)
        .map(|k| (k + 1) as f64 * log.dt);

    let effort_total = log.samples.iter().map(|s| s.effort).sum();

    let landings: Vec<f64> = log.samples.iter().flat_map(|s| s.landing_x.iter().copied()).collect();
    let landing_spread = if landings.len() < 2 {
        0.0
    } else {
        let n = landings.len() as f64;
        let mean = landings.iter().sum::<f64>() / n;
        (landings.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
    };

    let reached_horizon = log.samples.len() >= log.horizon;
    let finished = last.settled_mass >= log.target_mass - 1e-12 * total && last.in_flight_mass == 0.0;
    let emission_ongoing_at_horizon = reached_horizon && !finished && (last.emission_active || last.in_flight_mass > 0.0);

    Ok(BehaviorFeatures {
        fill_ratio,
        spill_ratio,
        rim_ratio,
        unreleased_ratio,
        time_to_target,
        effort_total,
        oscillation_count: oscillation_count(log, params.velocity_deadband),
        landing_spread,
        emission_ongoing_at_horizon,
        length: log.samples.len(),
    })
}

/// Sign changes of the trailing-window-averaged x-velocity between
/// consecutive emission-active samples outside the deadband.
pub fn oscillation_count(log: &TrajectoryLog, deadband: f64) -> u32 {
    let s = &log.samples;
    if s.len() < 2 {
        return 0;
    }
    let raw: Vec<f64> = s.windows(2).map(|w| (w[1].x - w[0].x) / log.dt).collect();
    let mut count = 0;
    let mut last_sign = 0.0f64;
    let mut sum = 0.0;
    for k in 0..raw.len() {
        sum += raw[k];
        if k >= VELOCITY_WINDOW {
            sum -= raw[k - VELOCITY_WINDOW];
        }
        let n = (k + 1).min(VELOCITY_WINDOW) as f64;
        let v = sum / n;
        if !s[k].emission_active {
            last_sign = 0.0;
            continue;
        }
        if v.abs() <= deadband {
            continue;
        }
        let sign = v.signum();
        if last_sign != 0.0 && sign != last_sign {
            count += 1;
        }
        last_sign = sign;
    }
    count
}
