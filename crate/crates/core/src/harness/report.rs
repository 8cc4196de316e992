//! Labelling of feature rows, per-cell aggregation and the grid figure.

use std::fmt::Write as _;

use crate::behavior::{aggregate, baseline_time_median, classify, Aggregate, BehaviorLabel, ClassifierThresholds, LabelOverrides, OutcomeClass};
use crate::error::{Error, Result};
use crate::reward::RewardWeights;

use super::tables::{FeatureRow, LabelRow};

/// Labels every row. Pour speed is judged against the median time-to-target
/// of the successful pours in cell `baseline_index`.
pub fn label_rows(
    rows: &[FeatureRow],
    th: &ClassifierThresholds,
    baseline_index: usize,
    episode_duration: f64,
    overrides: &LabelOverrides,
) -> Result<Vec<LabelRow>> {
    let median = baseline_time_median(
        rows.iter().filter(|r| r.config_index == baseline_index).map(|r| &r.features),
        rows.iter().map(|r| &r.features),
        th,
        episode_duration,
    );
    rows.iter()
        .map(|r| {
            let rule_label = classify(&r.features, th, median)?;
            let manual = overrides.get(r.config_index, r.seed, r.episode);
            Ok(LabelRow {
                config_index: r.config_index,
                seed: r.seed,
                episode: r.episode,
                label: manual.unwrap_or(rule_label),
                rule_label,
                overridden: manual.is_some(),
            })
        })
        .collect()
}

/// Aggregate per grid cell; cells without rows aggregate to `Excluded`.
pub fn cell_aggregates(labels: &[LabelRow], cells: usize) -> Result<Vec<Aggregate>> {
    let mut per_cell: Vec<Vec<BehaviorLabel>> = vec![Vec::new(); cells];
    for r in labels {
        per_cell
            .get_mut(r.config_index)
            .ok_or_else(|| Error::format("labels.config_index", format!("{} is outside the {cells}-cell grid", r.config_index)))?
            .push(r.label);
    }
    Ok(per_cell.iter().map(|l| aggregate(l)).collect())
}

pub fn class_color(class: OutcomeClass) -> &'static str {
    match class {
        OutcomeClass::OriginalTask => "#2f6fb5",
        OutcomeClass::NovelSkill => "#3a9a48",
        OutcomeClass::NoPolicy => "#c83a32",
        OutcomeClass::Undetermined => "#9a9a9a",
    }
}

fn distinct_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn fmt_weight(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Static SVG 1.1 grid: effort weight on x, time weight on y (largest at
/// the top), one cell per configuration coloured by outcome class.
pub fn grid_svg(grid: &[RewardWeights], cells: &[Aggregate]) -> String {
    const CELL: f64 = 96.0;
    const LEFT: f64 = 80.0;
    const TOP: f64 = 40.0;
    let xs = distinct_sorted(grid.iter().map(|w| w.w_e));
    let ys = distinct_sorted(grid.iter().map(|w| w.w_t));
    let width = LEFT + CELL * xs.len() as f64 + 20.0;
    let height = TOP + CELL * ys.len() as f64 + 150.0;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-size="15" text-anchor="middle">Majority behavior per reward weight configuration</text>"#, width / 2.0);
    for (i, (w, a)) in grid.iter().zip(cells).enumerate() {
        let col = xs.iter().position(|&x| x == w.w_e).unwrap_or(0);
        let row = ys.len() - 1 - ys.iter().position(|&y| y == w.w_t).unwrap_or(0);
        let x = LEFT + CELL * col as f64;
        let y = TOP + CELL * row as f64;
        let _ = writeln!(
            s,
            r#"<g id="cell-{i}"><rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}" stroke="white" stroke-width="2"/>"#,
            class_color(a.majority.class())
        );
        let cx = x + CELL / 2.0;
        let _ = writeln!(
            s,
            r#"<text x="{cx}" y="{}" font-size="12" fill="white" text-anchor="middle">{}</text>"#,
            y + CELL / 2.0 - 4.0,
            a.majority
        );
        let share = a.counts.get(&a.majority).copied().unwrap_or(0);
        let _ = writeln!(
            s,
            r#"<text x="{cx}" y="{}" font-size="10" fill="white" text-anchor="middle">{share}/{}</text></g>"#,
            y + CELL / 2.0 + 12.0,
            a.counted
        );
    }
    let bottom = TOP + CELL * ys.len() as f64;
    for (c, v) in xs.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">{}</text>"#,
            LEFT + CELL * (c as f64 + 0.5),
            bottom + 16.0,
            fmt_weight(*v)
        );
    }
    for (r, v) in ys.iter().rev().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            TOP + CELL * (r as f64 + 0.5) + 4.0,
            fmt_weight(*v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">effort weight w_e</text>"#,
        LEFT + CELL * xs.len() as f64 / 2.0,
        bottom + 38.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {})">time weight w_t</text>"#,
        TOP + CELL * ys.len() as f64 / 2.0,
        TOP + CELL * ys.len() as f64 / 2.0
    );
    let legend = [
        (OutcomeClass::OriginalTask, "original task achieved"),
        (OutcomeClass::NovelSkill, "novel skill, original task missed"),
        (OutcomeClass::NoPolicy, "no viable policy"),
        (OutcomeClass::Undetermined, "undetermined (all trials excluded)"),
    ];
    for (k, (class, text)) in legend.iter().enumerate() {
        let y = bottom + 58.0 + 20.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{y}" width="14" height="14" fill="{}"/><text x="{}" y="{}" font-size="12">{text}</text>"#,
            class_color(*class),
            LEFT + 22.0,
            y + 11.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::{build_weight_grid, MutationSpec};

    fn labels(cells: &[(usize, BehaviorLabel, usize)]) -> Vec<LabelRow> {
        let mut out = Vec::new();
        for &(i, l, n) in cells {
            for e in 0..n {
                out.push(LabelRow {
                    config_index: i,
                    seed: 1,
                    episode: out.len() + e,
                    label: l,
                    rule_label: l,
                    overridden: false,
                });
            }
        }
        out
    }

    #[test]
    fn aggregates_follow_labels() {
        let rows = labels(&[
            (0, BehaviorLabel::PourFast, 6),
            (0, BehaviorLabel::NoPolicy, 4),
            (3, BehaviorLabel::Watering, 2),
            (3, BehaviorLabel::Excluded, 5),
        ]);
        let cells = cell_aggregates(&rows, 25).unwrap();
        assert_eq!(cells[0].majority, BehaviorLabel::PourFast);
        assert_eq!(cells[3].majority, BehaviorLabel::Watering);
        assert_eq!(cells[3].counted, 2);
        assert_eq!(cells[7].majority, BehaviorLabel::Excluded);
        assert!(cell_aggregates(&labels(&[(25, BehaviorLabel::PourBase, 1)]), 25).is_err());
    }

    #[test]
    fn svg_places_baseline_in_centre_and_is_stable() {
        let grid = build_weight_grid(&RewardWeights::default(), &MutationSpec::default()).unwrap();
        let cells = cell_aggregates(&labels(&[(12, BehaviorLabel::PourBase, 3), (0, BehaviorLabel::NoPolicy, 3)]), 25).unwrap();
        let a = grid_svg(&grid, &cells);
        assert_eq!(a, grid_svg(&grid, &cells));
        assert!(a.contains(r##"<g id="cell-12"><rect x="272" y="232""##), "{a}");
        // smallest time weight and smallest effort weight sit bottom-left
        assert!(a.contains(r##"<g id="cell-0"><rect x="80" y="424""##));
        assert_eq!(a.matches("<g id=\"cell-").count(), 25);
        assert!(a.contains(class_color(OutcomeClass::NoPolicy)));
    }
}
