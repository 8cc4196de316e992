//! Deterministic 2-D pouring environment.
//!
//! A torque-driven planar arm holds a cup of particle liquid above a container
//! that stands on a force scale. Liquid leaves the cup once it is tipped past
//! the fill-dependent spill angle, flies ballistically and is booked as
//! settled, rim or spilled mass when it reaches the rim plane.

pub mod arm;
pub mod config;
pub mod env;
pub mod liquid;
pub mod scripted;

pub use arm::{arm_dynamics, Action, ArmState, CupPose};
pub use config::{ContainerGeometry, CupGeometry, EnvConfig};
pub use env::{observe, reset, scale_read, step, EnvState, MassCounts, Observation, ScaleReading, StepInfo, Transition, ACT_DIM, OBS_DIM};
pub use liquid::{classify_landing, emission_rate, emission_update, particle_update, spill_angle, Landing, LandingZone, Particle, Phase};
pub use scripted::{ramp, run_script, Script, ScriptTarget, ScriptedRun};
