//! CSV tables written by the commands. Every table has a header row; floats
//! use the shortest representation that round-trips.

use std::collections::BTreeMap;
use std::path::Path;

use crate::behavior::{Aggregate, BehaviorFeatures, BehaviorLabel};
use crate::error::{Error, Result};
use crate::ppo::IterationStats;
use crate::reward::RewardWeights;

pub const FEATURE_COLUMNS: [&str; 17] = [
    "config_index",
    "seed",
    "episode",
    "eval_seed",
    "w_a",
    "w_t",
    "w_e",
    "fill_ratio",
    "spill_ratio",
    "rim_ratio",
    "unreleased_ratio",
    "time_to_target",
    "effort_total",
    "oscillation_count",
    "landing_spread",
    "emission_ongoing_at_horizon",
    "length",
];

pub const LABEL_COLUMNS: [&str; 6] = ["config_index", "seed", "episode", "label", "rule_label", "overridden"];

pub const CURVE_COLUMNS: [&str; 13] = [
    "iteration",
    "env_steps",
    "episodes",
    "mean_return",
    "mean_length",
    "mean_final_accuracy",
    "mean_effort",
    "policy_loss",
    "value_loss",
    "entropy",
    "mean_ratio",
    "clip_fraction",
    "aborted",
];

/// One evaluation episode of one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub config_index: usize,
    pub seed: u64,
    pub episode: usize,
    pub eval_seed: u64,
    pub weights: RewardWeights,
    pub features: BehaviorFeatures,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelRow {
    pub config_index: usize,
    pub seed: u64,
    pub episode: usize,
    pub label: BehaviorLabel,
    pub rule_label: BehaviorLabel,
    pub overridden: bool,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn to_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| Error::Runtime(format!("writing csv: {e}"));
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(&r).map_err(wrap)?;
    }
    w.into_inner().map_err(|e| Error::Runtime(format!("writing csv: {e}")))
}

pub fn curve_csv(curve: &[IterationStats]) -> Result<Vec<u8>> {
    to_bytes(
        &CURVE_COLUMNS,
        curve.iter().map(|r| {
            vec![
                r.iteration.to_string(),
                r.env_steps.to_string(),
                r.episodes.to_string(),
                opt(r.mean_return),
                opt(r.mean_length),
                opt(r.mean_final_accuracy),
                opt(r.mean_effort),
                r.policy_loss.to_string(),
                r.value_loss.to_string(),
                r.entropy.to_string(),
                r.mean_ratio.to_string(),
                r.clip_fraction.to_string(),
                r.aborted.to_string(),
            ]
        }),
    )
}

fn feature_record(r: &FeatureRow) -> Vec<String> {
    let f = &r.features;
    vec![
        r.config_index.to_string(),
        r.seed.to_string(),
        r.episode.to_string(),
        r.eval_seed.to_string(),
        r.weights.w_a.to_string(),
        r.weights.w_t.to_string(),
        r.weights.w_e.to_string(),
        f.fill_ratio.to_string(),
        f.spill_ratio.to_string(),
        f.rim_ratio.to_string(),
        f.unreleased_ratio.to_string(),
        opt(f.time_to_target),
        f.effort_total.to_string(),
        f.oscillation_count.to_string(),
        f.landing_spread.to_string(),
        f.emission_ongoing_at_horizon.to_string(),
        f.length.to_string(),
    ]
}

pub fn features_csv(rows: &[FeatureRow]) -> Result<Vec<u8>> {
    to_bytes(&FEATURE_COLUMNS, rows.iter().map(feature_record))
}

/// Appends rows to a features table, creating it with a header if needed.
pub fn append_features(path: &Path, rows: &[FeatureRow]) -> Result<()> {
    use std::io::Write;
    let fresh = !path.exists();
    let bytes = features_csv(rows)?;
    let body = if fresh {
        &bytes[..]
    } else {
        let header_end = bytes.iter().position(|&b| b == b'\n').map(|p| p + 1).unwrap_or(bytes.len());
        &bytes[header_end..]
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    f.write_all(body).map_err(|e| Error::io(path, e))
}

struct Table {
    index: BTreeMap<String, usize>,
    rows: Vec<csv::StringRecord>,
    name: String,
}

impl Table {
    fn read(bytes: &[u8], name: &str, required: &[&str]) -> Result<Self> {
        let mut r = csv::Reader::from_reader(bytes);
        let headers = r.headers().map_err(|e| Error::format(name, e.to_string()))?.clone();
        let index: BTreeMap<String, usize> = headers.iter().enumerate().map(|(i, h)| (h.to_string(), i)).collect();
        for col in required {
            if !index.contains_key(*col) {
                return Err(Error::format(format!("{name}.{col}"), "missing column"));
            }
        }
        let rows = r
            .records()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::format(name, e.to_string()))?;
        Ok(Self {
            index,
            rows,
            name: name.to_string(),
        })
    }

    fn get<T: std::str::FromStr>(&self, row: usize, col: &str) -> Result<T> {
        let raw = self.rows[row].get(self.index[col]).unwrap_or("");
        raw.parse()
            .map_err(|_| Error::format(format!("{}.{col}", self.name), format!("row {}: cannot parse {raw:?}", row + 1)))
    }

    fn get_opt(&self, row: usize, col: &str) -> Result<Option<f64>> {
        let raw = self.rows[row].get(self.index[col]).unwrap_or("");
        if raw.is_empty() {
            Ok(None)
        } else {
            self.get(row, col).map(Some)
        }
    }
}

pub fn read_features(bytes: &[u8]) -> Result<Vec<FeatureRow>> {
    let t = Table::read(bytes, "features", &FEATURE_COLUMNS)?;
    (0..t.rows.len())
        .map(|i| {
            Ok(FeatureRow {
                config_index: t.get(i, "config_index")?,
                seed: t.get(i, "seed")?,
                episode: t.get(i, "episode")?,
                eval_seed: t.get(i, "eval_seed")?,
                weights: RewardWeights {
                    w_a: t.get(i, "w_a")?,
                    w_t: t.get(i, "w_t")?,
                    w_e: t.get(i, "w_e")?,
                },
                features: BehaviorFeatures {
                    fill_ratio: t.get(i, "fill_ratio")?,
                    spill_ratio: t.get(i, "spill_ratio")?,
                    rim_ratio: t.get(i, "rim_ratio")?,
                    unreleased_ratio: t.get(i, "unreleased_ratio")?,
                    time_to_target: t.get_opt(i, "time_to_target")?,
                    effort_total: t.get(i, "effort_total")?,
                    oscillation_count: t.get(i, "oscillation_count")?,
                    landing_spread: t.get(i, "landing_spread")?,
                    emission_ongoing_at_horizon: t.get(i, "emission_ongoing_at_horizon")?,
                    length: t.get(i, "length")?,
                },
            })
        })
        .collect()
}

pub fn labels_csv(rows: &[LabelRow]) -> Result<Vec<u8>> {
    to_bytes(
        &LABEL_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.config_index.to_string(),
                r.seed.to_string(),
                r.episode.to_string(),
                r.label.to_string(),
                r.rule_label.to_string(),
                r.overridden.to_string(),
            ]
        }),
    )
}

pub fn read_labels(bytes: &[u8]) -> Result<Vec<LabelRow>> {
    let t = Table::read(bytes, "labels", &["config_index", "seed", "episode", "label"])?;
    (0..t.rows.len())
        .map(|i| {
            let label: BehaviorLabel = t.get(i, "label")?;
            let has = |c: &str| t.index.contains_key(c);
            Ok(LabelRow {
                config_index: t.get(i, "config_index")?,
                seed: t.get(i, "seed")?,
                episode: t.get(i, "episode")?,
                label,
                rule_label: if has("rule_label") { t.get(i, "rule_label")? } else { label },
                overridden: if has("overridden") { t.get(i, "overridden")? } else { false },
            })
        })
        .collect()
}

/// Per-cell majority table.
pub fn summary_csv(grid: &[RewardWeights], cells: &[Aggregate]) -> Result<Vec<u8>> {
    let mut header = vec!["config_index", "w_t", "w_e", "majority", "class", "counted"];
    header.extend(BehaviorLabel::ALL.iter().map(|l| l.as_str()));
    to_bytes(
        &header,
        grid.iter().zip(cells).enumerate().map(|(i, (w, a))| {
            let mut rec = vec![
                i.to_string(),
                w.w_t.to_string(),
                w.w_e.to_string(),
                a.majority.to_string(),
                format!("{:?}", a.majority.class()),
                a.counted.to_string(),
            ];
            rec.extend(BehaviorLabel::ALL.iter().map(|l| a.counts[l].to_string()));
            rec
        }),
    )
}
