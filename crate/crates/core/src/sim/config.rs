use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cup rigidly attached to the end-effector. Lengths in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CupGeometry {
    /// Distance from the end-effector to the cup opening along the cup axis.
    pub lip_offset: f64,
    pub half_width: f64,
    pub depth: f64,
    /// Liquid column height when the cup is full (must not exceed `depth`).
    pub liquid_height: f64,
}

/// Target container sitting on the scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContainerGeometry {
    pub center_x: f64,
    pub half_width: f64,
    pub rim_half_thickness: f64,
    pub rim_height: f64,
}

/// Everything the simulator needs. Defaults are desk-scale values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub dt: f64,
    pub horizon: usize,
    pub gravity: f64,
    pub particle_count: usize,
    pub particle_mass: f64,
    pub cup: CupGeometry,
    pub container: ContainerGeometry,
    pub target_fill_fraction: f64,
    pub torque_limit: f64,
    pub link_lengths: [f64; 3],
    pub joint_damping: [f64; 3],
    /// Particles per second at full tilt.
    pub emission_rate_max: f64,
    /// Particles per second per radian of tilt beyond the spill angle.
    pub emission_gain: f64,
    /// Exit speed of emitted liquid along the cup opening normal (m/s).
    pub jet_speed: f64,
    /// Std-dev of the per-particle exit velocity jitter (m/s).
    pub jet_jitter: f64,
    /// Arm base position (x, z).
    pub base: [f64; 2],
    pub home_angles: [f64; 3],
    pub joint_lower: [f64; 3],
    pub joint_upper: [f64; 3],
    /// Empty cup plus gripper mass (kg).
    pub cup_mass: f64,
    /// Distance of the payload centre of mass below the wrist axis; positive
    /// values make the cup self-righting.
    pub payload_com_offset: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        // Home pose: vertical upper arm, forearm at atan2(0.2, 0.15), level wrist.
        let forearm = (0.2f64).atan2(0.15);
        Self {
            dt: 0.01,
            horizon: 1000,
            gravity: 9.81,
            particle_count: 200,
            particle_mass: 0.001,
            cup: CupGeometry {
                lip_offset: 0.1,
                half_width: 0.04,
                depth: 0.1,
                liquid_height: 0.06,
            },
            container: ContainerGeometry {
                center_x: 0.68,
                half_width: 0.08,
                rim_half_thickness: 0.03,
                rim_height: 0.2,
            },
            target_fill_fraction: 0.8,
            torque_limit: 5.0,
            link_lengths: [0.3, 0.25, 0.1],
            joint_damping: [1.0, 1.0, 1.0],
            emission_rate_max: 200.0,
            emission_gain: 400.0,
            jet_speed: 0.3,
            jet_jitter: 0.02,
            base: [0.35, 0.0],
            home_angles: [std::f64::consts::FRAC_PI_2, forearm - std::f64::consts::FRAC_PI_2, -forearm],
            joint_lower: [0.5, -2.0, -4.2],
            joint_upper: [2.6, 1.0, 1.5],
            cup_mass: 0.05,
            payload_com_offset: 0.05,
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite and > 0 (got {v})")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite and >= 0 (got {v})")))
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite (got {v})")))
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        positive("dt", self.dt)?;
        if self.horizon < 1 {
            return Err(Error::config("horizon", "must be >= 1"));
        }
        positive("gravity", self.gravity)?;
        if self.particle_count < 1 {
            return Err(Error::config("particle_count", "must be >= 1"));
        }
        positive("particle_mass", self.particle_mass)?;
        positive("cup.lip_offset", self.cup.lip_offset)?;
        positive("cup.half_width", self.cup.half_width)?;
        positive("cup.depth", self.cup.depth)?;
        positive("cup.liquid_height", self.cup.liquid_height)?;
        if self.cup.liquid_height > self.cup.depth {
            return Err(Error::config("cup.liquid_height", "must not exceed cup.depth"));
        }
        finite("container.center_x", self.container.center_x)?;
        positive("container.half_width", self.container.half_width)?;
        positive("container.rim_half_thickness", self.container.rim_half_thickness)?;
        positive("container.rim_height", self.container.rim_height)?;
        let f = self.target_fill_fraction;
        if !(f.is_finite() && f > 0.0 && f <= 1.0) {
            return Err(Error::config(
                "target_fill_fraction",
                format!("must lie in (0, 1] (got {f})"),
            ));
        }
        positive("torque_limit", self.torque_limit)?;
        for (i, &l) in self.link_lengths.iter().enumerate() {
            positive(&format!("link_lengths[{i}]"), l)?;
        }
        for (i, &d) in self.joint_damping.iter().enumerate() {
            non_negative(&format!("joint_damping[{i}]"), d)?;
        }
        positive("emission_rate_max", self.emission_rate_max)?;
        positive("emission_gain", self.emission_gain)?;
        non_negative("jet_speed", self.jet_speed)?;
        non_negative("jet_jitter", self.jet_jitter)?;
        finite("base[0]", self.base[0])?;
        finite("base[1]", self.base[1])?;
        for i in 0..3 {
            let (lo, hi, home) = (self.joint_lower[i], self.joint_upper[i], self.home_angles[i]);
            finite(&format!("joint_lower[{i}]"), lo)?;
            finite(&format!("joint_upper[{i}]"), hi)?;
            finite(&format!("home_angles[{i}]"), home)?;
            if lo >= hi {
                return Err(Error::config(format!("joint_lower[{i}]"), "must be below joint_upper"));
            }
            if home < lo || home > hi {
                return Err(Error::config(format!("home_angles[{i}]"), "must lie within joint limits"));
            }
        }
        non_negative("cup_mass", self.cup_mass)?;
        finite("payload_com_offset", self.payload_com_offset)?;
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.particle_count as f64 * self.particle_mass
    }

    /// Episode length in seconds.
    pub fn duration(&self) -> f64 {
        self.horizon as f64 * self.dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        EnvConfig::default().validate().unwrap();
    }

    #[test]
    fn zero_particles_names_field() {
        let cfg = EnvConfig {
            particle_count: 0,
            ..EnvConfig::default()
        };
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("particle_count"), "{err}");
    }

    #[test]
    fn rejects_bad_fill_fraction() {
        for f in [0.0, -0.1, 1.5, f64::NAN] {
            let cfg = EnvConfig {
                target_fill_fraction: f,
                ..EnvConfig::default()
            };
            assert!(matches!(cfg.validate(), Err(Error::Config { ref field, .. }) if field == "target_fill_fraction"));
        }
    }

    #[test]
    fn rejects_non_positive_lengths() {
        let mut cfg = EnvConfig::default();
        cfg.link_lengths[1] = 0.0;
        assert!(cfg.validate().unwrap_err().to_string().contains("link_lengths[1]"));
        let mut cfg = EnvConfig::default();
        cfg.container.half_width = -1.0;
        assert!(cfg.validate().unwrap_err().to_string().contains("container.half_width"));
        let cfg = EnvConfig {
            torque_limit: 0.0,
            ..EnvConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
