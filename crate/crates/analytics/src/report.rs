//! Group summaries, per-metric hypothesis tests, and report rendering.

use crate::records::{Condition, Group, Metric, TrialRecord};
use crate::shapiro::shapiro_wilk;
use crate::ttest::paired_t;
use crate::wilcoxon::wilcoxon_signed_rank;
use crate::{DataError, StatsError};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub metric: Metric,
    pub label: &'static str,
    pub experiment_smartphone: f64,
    pub experiment_spice: f64,
    pub validation: f64,
    /// `100 * (validation - experiment_smartphone) / experiment_smartphone`, unrounded.
    pub percent_difference: f64,
}

impl SummaryRow {
    pub fn percent_display(&self) -> String {
        format_percent(self.percent_difference)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn row(&self, metric: Metric) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }
}

pub fn percent_difference(a: f64, b: f64) -> f64 {
    100.0 * (b - a) / a
}

/// Two decimals, explicit sign, trailing zeros dropped (`-40%`, `+1.69%`).
pub fn format_percent(p: f64) -> String {
    let rounded = (p * 100.0).round() / 100.0;
    let mut s = format!("{:.2}", rounded.abs());
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    let sign = if rounded > 0.0 {
        "+"
    } else if rounded < 0.0 {
        "-"
    } else {
        ""
    };
    format!("{sign}{s}%")
}

fn cell_mean(
    records: &[TrialRecord],
    metric: Metric,
    group: Group,
    condition: Condition,
) -> Result<f64, DataError> {
    let vals: Vec<f64> = records
        .iter()
        .filter(|r| r.group == group && r.condition == condition)
        .map(|r| r.value(metric))
        .collect();
    if vals.is_empty() {
        return Err(DataError::MissingCell {
            metric: metric.label().to_string(),
            cell: format!("{group:?}/{condition:?}").to_lowercase(),
        });
    }
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

pub fn summarize(records: &[TrialRecord]) -> Result<SummaryTable, DataError> {
    let rows = Metric::ALL
        .iter()
        .map(|&metric| {
            let a = cell_mean(records, metric, Group::Experiment, Condition::Smartphone)?;
            let s = cell_mean(records, metric, Group::Experiment, Condition::Spice)?;
            let b = cell_mean(records, metric, Group::Validation, Condition::Spice)?;
            Ok(SummaryRow {
                metric,
                label: metric.label(),
                experiment_smartphone: a,
                experiment_spice: s,
                validation: b,
                percent_difference: percent_difference(a, b),
            })
        })
        .collect::<Result<Vec<_>, DataError>>()?;
    Ok(SummaryTable { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    PairedT,
    Wilcoxon,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub metric: Metric,
    pub test: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    /// Shapiro-Wilk p on the paired differences.
    pub normality_p: f64,
    pub alpha: f64,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricTest {
    pub metric: Metric,
    #[serde(flatten)]
    pub outcome: TestOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TestOutcome {
    Report(TestReport),
    Failed { error: String },
}

/// Paired `spice - smartphone` differences for experiment participants, by participant id.
pub fn paired_differences(records: &[TrialRecord], metric: Metric) -> Vec<f64> {
    let mut pairs: BTreeMap<&str, [Option<f64>; 2]> = BTreeMap::new();
    for r in records.iter().filter(|r| r.group == Group::Experiment) {
        let slot = match r.condition {
            Condition::Smartphone => 0,
            Condition::Spice => 1,
        };
        pairs.entry(&r.participant_id).or_default()[slot] = Some(r.value(metric));
    }
    pairs
        .values()
        .filter_map(|p| match p {
            [Some(a), Some(b)] => Some(b - a),
            _ => None,
        })
        .collect()
}

/// Shapiro-Wilk on the differences; Wilcoxon when normality is rejected at
/// [`ALPHA`], paired t otherwise.
pub fn test_metric(differences: &[f64], metric: Metric) -> Result<TestReport, StatsError> {
    let normality = shapiro_wilk(differences)?;
    let (test, statistic, p_value) = if normality.p_value < ALPHA {
        let w = wilcoxon_signed_rank(differences)?;
        (TestKind::Wilcoxon, w.statistic, w.p_value)
    } else {
        let t = paired_t(differences)?;
        (TestKind::PairedT, t.statistic, t.p_value)
    };
    Ok(TestReport {
        metric,
        test,
        statistic,
        p_value,
        normality_p: normality.p_value,
        alpha: ALPHA,
        n_pairs: differences.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub summary: SummaryTable,
    pub tests: Vec<MetricTest>,
}

pub fn analyze(records: &[TrialRecord]) -> Result<AnalysisReport, DataError> {
    let summary = summarize(records)?;
    let tests = Metric::ALL
        .iter()
        .map(|&metric| {
            let diffs = paired_differences(records, metric);
            let outcome = match test_metric(&diffs, metric) {
                Ok(r) => TestOutcome::Report(r),
                Err(e) => TestOutcome::Failed {
                    error: e.to_string(),
                },
            };
            MetricTest { metric, outcome }
        })
        .collect();
    Ok(AnalysisReport { summary, tests })
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let header = [
            "Metric",
            "Experiment (smartphone) - (A)",
            "Experiment (SPICE)",
            "Validation - (B)",
            "Percentage Difference (A-B)",
        ];
        let mut rows: Vec<[String; 5]> = vec![header.map(String::from)];
        for r in &self.summary.rows {
            let decimals = if r.metric == Metric::Duration { 2 } else { 3 };
            rows.push([
                r.label.to_string(),
                format!("{:.*}", decimals, r.experiment_smartphone),
                format!("{:.*}", decimals, r.experiment_spice),
                format!("{:.*}", decimals, r.validation),
                r.percent_display(),
            ]);
        }
        let mut widths = [0usize; 5];
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        for (i, row) in rows.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .zip(widths)
                .enumerate()
                .map(|(c, (cell, w))| {
                    if c == 0 {
                        format!("{cell:<w$}")
                    } else {
                        format!("{cell:>w$}")
                    }
                })
                .collect();
            writeln!(out, "{}", line.join("  ").trim_end()).unwrap();
            if i == 0 {
                let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                writeln!(out, "{}", "-".repeat(total)).unwrap();
            }
        }

        writeln!(out).unwrap();
        writeln!(
            out,
            "Paired tests on experiment group (spice - smartphone), alpha = {ALPHA}"
        )
        .unwrap();
        for t in &self.tests {
            match &t.outcome {
                TestOutcome::Report(r) => writeln!(
                    out,
                    "{:<22} n={:<3} shapiro p={:.4}  {:<9} stat={:.4}  p={:.4}",
                    t.metric.label(),
                    r.n_pairs,
                    r.normality_p,
                    match r.test {
                        TestKind::PairedT => "paired-t",
                        TestKind::Wilcoxon => "wilcoxon",
                    },
                    r.statistic,
                    r.p_value
                )
                .unwrap(),
                TestOutcome::Failed { error } => {
                    writeln!(out, "{:<22} not tested: {error}", t.metric.label()).unwrap()
                }
            }
        }
        out
    }
}
