//! Threshold rubric mapping features to a behaviour label, plus aggregation
//! over repeated evaluations.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::features::BehaviorFeatures;
use crate::error::{Error, Result};

/// Labels in rubric priority order; ties in aggregation go to the earlier one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BehaviorLabel {
    Excluded,
    Watering,
    RimCleaner,
    Mixing,
    PourFast,
    PourBase,
    PourSlow,
    NoPolicy,
}

/// The three outcome classes used for colouring the summary grid, plus a
/// fourth for cells where every trial was excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeClass {
    OriginalTask,
    NovelSkill,
    NoPolicy,
    Undetermined,
}

impl BehaviorLabel {
    pub const ALL: [BehaviorLabel; 8] = [
        BehaviorLabel::Excluded,
        BehaviorLabel::Watering,
        BehaviorLabel::RimCleaner,
        BehaviorLabel::Mixing,
        BehaviorLabel::PourFast,
        BehaviorLabel::PourBase,
        BehaviorLabel::PourSlow,
        BehaviorLabel::NoPolicy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BehaviorLabel::Excluded => "Excluded",
            BehaviorLabel::Watering => "Watering",
            BehaviorLabel::RimCleaner => "RimCleaner",
            BehaviorLabel::Mixing => "Mixing",
            BehaviorLabel::PourFast => "PourFast",
            BehaviorLabel::PourBase => "PourBase",
            BehaviorLabel::PourSlow => "PourSlow",
            BehaviorLabel::NoPolicy => "NoPolicy",
        }
    }

    pub fn is_pour(self) -> bool {
        matches!(self, BehaviorLabel::PourFast | BehaviorLabel::PourBase | BehaviorLabel::PourSlow)
    }

    pub fn class(self) -> OutcomeClass {
        match self {
            BehaviorLabel::PourFast | BehaviorLabel::PourBase | BehaviorLabel::PourSlow => OutcomeClass::OriginalTask,
            BehaviorLabel::Watering | BehaviorLabel::RimCleaner | BehaviorLabel::Mixing => OutcomeClass::NovelSkill,
            BehaviorLabel::NoPolicy => OutcomeClass::NoPolicy,
            BehaviorLabel::Excluded => OutcomeClass::Undetermined,
        }
    }
}

impl fmt::Display for BehaviorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BehaviorLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BehaviorLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::format("label", format!("unknown behaviour label {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierThresholds {
    pub fill_success: f64,
    pub spill_max: f64,
    /// Pours faster than this multiple of the baseline median are fast.
    pub fast_factor: f64,
    /// Pours slower than this multiple of the baseline median are slow.
    pub slow_factor: f64,
    pub rim_min: f64,
    pub mixing_oscillations_min: u32,
    /// Landing spread (m) that marks watering; the default is twice the
    /// container opening half-width.
    pub watering_spread_min: f64,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        Self {
            fill_success: 0.8,
            spill_max: 0.2,
            fast_factor: 0.8,
            slow_factor: 1.25,
            rim_min: 0.3,
            mixing_oscillations_min: 4,
            watering_spread_min: 0.16,
        }
    }
}

impl ClassifierThresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("fill_success", self.fill_success),
            ("spill_max", self.spill_max),
            ("fast_factor", self.fast_factor),
            ("slow_factor", self.slow_factor),
            ("rim_min", self.rim_min),
            ("watering_spread_min", self.watering_spread_min),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, format!("must be finite and > 0 (got {v})")));
            }
        }
        if self.mixing_oscillations_min == 0 {
            return Err(Error::config("mixing_oscillations_min", "must be > 0"));
        }
        if self.fast_factor >= self.slow_factor {
            return Err(Error::config("fast_factor", "must be below slow_factor"));
        }
        Ok(())
    }
}

/// First matching rule wins; `NoPolicy` is the fallback.
pub fn classify(f: &BehaviorFeatures, th: &ClassifierThresholds, baseline_time_median: f64) -> Result<BehaviorLabel> {
    th.validate()?;
    if !(baseline_time_median.is_finite() && baseline_time_median > 0.0) {
        return Err(Error::config("baseline_time_median", "must be finite and > 0"));
    }
    if f.emission_ongoing_at_horizon {
        return Ok(BehaviorLabel::Excluded);
    }
    if f.landing_spread >= th.watering_spread_min && f.fill_ratio < th.fill_success {
        return Ok(BehaviorLabel::Watering);
    }
    if f.rim_ratio >= th.rim_min {
        return Ok(BehaviorLabel::RimCleaner);
    }
    if f.oscillation_count >= th.mixing_oscillations_min && f.fill_ratio >= 0.5 * th.fill_success {
        return Ok(BehaviorLabel::Mixing);
    }
    if f.fill_ratio >= th.fill_success && f.spill_ratio <= th.spill_max {
        // a successful pour always has a target time; treat a missing one as slow
        let t = f.time_to_target.unwrap_or(f64::INFINITY);
        return Ok(if t < th.fast_factor * baseline_time_median {
            BehaviorLabel::PourFast
        } else if t > th.slow_factor * baseline_time_median {
            BehaviorLabel::PourSlow
        } else {
            BehaviorLabel::PourBase
        });
    }
    Ok(BehaviorLabel::NoPolicy)
}

/// Whether the features describe a pour that meets the fill and spill bounds.
pub fn is_successful_pour(f: &BehaviorFeatures, th: &ClassifierThresholds) -> bool {
    f.fill_ratio >= th.fill_success && f.spill_ratio <= th.spill_max && f.time_to_target.is_some()
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Reference pour time: median target time of successful baseline pours,
/// else of all successful pours, else the episode duration.
pub fn baseline_time_median<'a>(
    baseline: impl IntoIterator<Item = &'a BehaviorFeatures>,
    all: impl IntoIterator<Item = &'a BehaviorFeatures>,
    th: &ClassifierThresholds,
    episode_duration: f64,
) -> f64 {
    let times = |it: &mut dyn Iterator<Item = &'a BehaviorFeatures>| -> Vec<f64> {
        it.filter(|f| is_successful_pour(f, th)).filter_map(|f| f.time_to_target).collect()
    };
    median(&times(&mut baseline.into_iter()))
        .or_else(|| median(&times(&mut all.into_iter())))
        .unwrap_or(episode_duration)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Majority over non-excluded trials; `Excluded` only when every trial was.
    pub majority: BehaviorLabel,
    pub counts: BTreeMap<BehaviorLabel, usize>,
    pub counted: usize,
}

pub fn aggregate(labels: &[BehaviorLabel]) -> Aggregate {
    let mut counts: BTreeMap<BehaviorLabel, usize> = BehaviorLabel::ALL.iter().map(|&l| (l, 0)).collect();
    for &l in labels {
        *counts.get_mut(&l).expect("all labels present") += 1;
    }
    let mut majority = BehaviorLabel::Excluded;
    let mut best = 0;
    // BTreeMap iterates in priority order, so the strict `>` keeps the
    // earliest label on ties
    for (&l, &c) in counts.iter().filter(|(l, _)| **l != BehaviorLabel::Excluded) {
        if c > best {
            best = c;
            majority = l;
        }
    }
    Aggregate {
        majority,
        counted: labels.len() - counts[&BehaviorLabel::Excluded],
        counts,
    }
}

/// Manual relabelling keyed by `(config index, seed, episode)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelOverrides {
    pub entries: BTreeMap<(usize, u64, usize), BehaviorLabel>,
}

impl LabelOverrides {
    /// Parses lines of `config seed episode Label`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let field = |what: &str| format!("line {}: {what}", n + 1);
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(Error::format(field("entry"), "expected `config seed episode label`"));
            }
            let config = parts[0].parse().map_err(|_| Error::format(field("config"), "not an integer"))?;
            let seed = parts[1].parse().map_err(|_| Error::format(field("seed"), "not an integer"))?;
            let episode = parts[2].parse().map_err(|_| Error::format(field("episode"), "not an integer"))?;
            let label = parts[3].parse().map_err(|_| Error::format(field("label"), format!("unknown label {:?}", parts[3])))?;
            entries.insert((config, seed, episode), label);
        }
        Ok(Self { entries })
    }

    pub fn get(&self, config: usize, seed: u64, episode: usize) -> Option<BehaviorLabel> {
        self.entries.get(&(config, seed, episode)).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features() -> BehaviorFeatures {
        BehaviorFeatures {
            fill_ratio: 0.0,
            spill_ratio: 0.0,
            rim_ratio: 0.0,
            unreleased_ratio: 1.0,
            time_to_target: None,
            effort_total: 0.0,
            oscillation_count: 0,
            landing_spread: 0.0,
            emission_ongoing_at_horizon: false,
            length: 1000,
        }
    }

    fn pour(time: f64) -> BehaviorFeatures {
        BehaviorFeatures {
            fill_ratio: 0.95,
            spill_ratio: 0.02,
            unreleased_ratio: 0.03,
            time_to_target: Some(time),
            ..features()
        }
    }

    fn label(f: &BehaviorFeatures) -> BehaviorLabel {
        classify(f, &ClassifierThresholds::default(), 3.0).unwrap()
    }

    #[test]
    fn pour_speed_split() {
        assert_eq!(label(&pour(0.7 * 3.0)), BehaviorLabel::PourFast);
        assert_eq!(label(&pour(3.0)), BehaviorLabel::PourBase);
        assert_eq!(label(&pour(1.25 * 3.0)), BehaviorLabel::PourBase);
        assert_eq!(label(&pour(1.3 * 3.0)), BehaviorLabel::PourSlow);
    }

    #[test]
    fn rim_and_default() {
        let f = BehaviorFeatures { rim_ratio: 0.5, fill_ratio: 0.4, unreleased_ratio: 0.1, ..features() };
        assert_eq!(label(&f), BehaviorLabel::RimCleaner);
        assert_eq!(label(&features()), BehaviorLabel::NoPolicy);
    }

    #[test]
    fn exclusion_takes_precedence() {
        let f = BehaviorFeatures { emission_ongoing_at_horizon: true, rim_ratio: 0.9, ..pour(3.0) };
        assert_eq!(label(&f), BehaviorLabel::Excluded);
    }

    #[test]
    fn watering_needs_low_fill_and_mixing_needs_some_fill() {
        let f = BehaviorFeatures { landing_spread: 0.2, fill_ratio: 0.3, spill_ratio: 0.7, unreleased_ratio: 0.0, ..features() };
        assert_eq!(label(&f), BehaviorLabel::Watering);
        let f = BehaviorFeatures { landing_spread: 0.2, ..pour(3.0) };
        assert_eq!(label(&f), BehaviorLabel::PourBase);
        let f = BehaviorFeatures { oscillation_count: 6, ..pour(3.0) };
        assert_eq!(label(&f), BehaviorLabel::Mixing);
        let f = BehaviorFeatures { oscillation_count: 6, fill_ratio: 0.3, ..features() };
        assert_eq!(label(&f), BehaviorLabel::NoPolicy);
    }

    #[test]
    fn invalid_inputs() {
        let th = ClassifierThresholds { fast_factor: 2.0, ..ClassifierThresholds::default() };
        assert!(matches!(classify(&features(), &th, 3.0), Err(Error::Config { .. })));
        assert!(classify(&features(), &ClassifierThresholds::default(), 0.0).is_err());
    }

    #[test]
    fn aggregation_rules() {
        use BehaviorLabel::*;
        let a = aggregate(&[PourBase; 30]);
        assert_eq!(a.majority, PourBase);
        assert_eq!(a.counts[&PourBase], 30);
        assert_eq!(a.counted, 30);

        let mut tie = vec![PourBase; 15];
        tie.extend([PourFast; 15]);
        assert_eq!(aggregate(&tie).majority, PourFast);

        let mut ex = vec![Excluded; 10];
        ex.extend([PourBase; 20]);
        let a = aggregate(&ex);
        assert_eq!(a.majority, PourBase);
        assert_eq!(a.counted, 20);

        // exclusion happens before the majority vote
        let mut ex = vec![Excluded; 20];
        ex.extend([NoPolicy; 10]);
        assert_eq!(aggregate(&ex).majority, NoPolicy);
        assert_eq!(aggregate(&[Excluded; 3]).majority, Excluded);
    }

    #[test]
    fn baseline_median_fallbacks() {
        let th = ClassifierThresholds::default();
        let base = [pour(2.0), pour(4.0), features()];
        let other = [pour(6.0)];
        assert_eq!(baseline_time_median(&base, base.iter().chain(&other), &th, 10.0), 3.0);
        let none: [BehaviorFeatures; 0] = [];
        assert_eq!(baseline_time_median(&none, &other, &th, 10.0), 6.0);
        assert_eq!(baseline_time_median(&none, &none, &th, 10.0), 10.0);
    }

    #[test]
    fn label_round_trip_and_overrides() {
        for l in BehaviorLabel::ALL {
            assert_eq!(l.as_str().parse::<BehaviorLabel>().unwrap(), l);
        }
        let o = LabelOverrides::parse("# header\n3 1 7 RimCleaner  # looked like rim\n\n12 2 0 PourSlow\n").unwrap();
        assert_eq!(o.get(3, 1, 7), Some(BehaviorLabel::RimCleaner));
        assert_eq!(o.get(12, 2, 0), Some(BehaviorLabel::PourSlow));
        assert_eq!(o.get(0, 0, 0), None);
        let err = LabelOverrides::parse("1 2 3 Dancing").unwrap_err();
        assert!(err.to_string().contains("line 1: label"), "{err}");
        assert!(LabelOverrides::parse("1 2 Mixing").is_err());
    }
}
