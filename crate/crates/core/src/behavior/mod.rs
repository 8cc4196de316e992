//! Trajectory logging, feature extraction and the rule-based behaviour
//! classifier.

pub mod archetypes;
pub mod classify;
pub mod features;
pub mod log;

pub use classify::{
    aggregate, baseline_time_median, classify, is_successful_pour, median, Aggregate, BehaviorLabel, ClassifierThresholds,
    LabelOverrides, OutcomeClass,
};
pub use features::{extract_features, oscillation_count, BehaviorFeatures, FeatureParams, VELOCITY_WINDOW};
pub use log::{record, EnvTrace, LogSample, TraceStep, TrajectoryLog};
