//! Trial records and their CSV form.
//!
//! Columns: `participant_id,group,condition,efficiency,confidence,taste,difficulty,duration_secs,stops`.
//! Lines starting with `#` are comments.

use crate::DataError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Experiment,
    Validation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Smartphone,
    Spice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Efficiency,
    Confidence,
    Taste,
    Difficulty,
    Duration,
    Stops,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Efficiency,
        Metric::Confidence,
        Metric::Taste,
        Metric::Difficulty,
        Metric::Duration,
        Metric::Stops,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Efficiency => "Efficiency (1-10)",
            Metric::Confidence => "Confidence (1-10)",
            Metric::Taste => "Taste (1-10)",
            Metric::Difficulty => "Difficulty (1-10)",
            Metric::Duration => "Total duration (secs)",
            Metric::Stops => "Number of stops",
        }
    }
}

/// One participant under one condition.
///
/// Ratings are stored as reals in `[1, 10]`; questionnaire answers are
/// integers, but reconstructed datasets may carry fractional values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub participant_id: String,
    pub group: Group,
    pub condition: Condition,
    pub efficiency: f64,
    pub confidence: f64,
    pub taste: f64,
    pub difficulty: f64,
    #[serde(rename = "duration_secs")]
    pub duration: f64,
    pub stops: u32,
}

impl TrialRecord {
    pub fn value(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Efficiency => self.efficiency,
            Metric::Confidence => self.confidence,
            Metric::Taste => self.taste,
            Metric::Difficulty => self.difficulty,
            Metric::Duration => self.duration,
            Metric::Stops => f64::from(self.stops),
        }
    }

    fn check(&self) -> Result<(), String> {
        if self.participant_id.trim().is_empty() {
            return Err("empty participant_id".into());
        }
        for (name, v) in [
            ("efficiency", self.efficiency),
            ("confidence", self.confidence),
            ("taste", self.taste),
            ("difficulty", self.difficulty),
        ] {
            if !(1.0..=10.0).contains(&v) {
                return Err(format!("{name} = {v} outside 1-10"));
            }
        }
        if !self.duration.is_finite() || self.duration < 0.0 {
            return Err(format!("duration_secs = {} invalid", self.duration));
        }
        if self.group == Group::Validation && self.condition == Condition::Smartphone {
            return Err("validation participants only use spice".into());
        }
        Ok(())
    }
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<TrialRecord>, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<TrialRecord>() {
        let rec = row?;
        out.push(rec);
    }
    validate_records(&out)?;
    Ok(out)
}

pub fn load_records(path: &Path) -> Result<Vec<TrialRecord>, DataError> {
    let file = std::fs::File::open(path)?;
    read_records(file)
}

/// Checks per-record ranges and the study design: experiment participants
/// appear exactly once per condition, validation participants once under spice.
pub fn validate_records(records: &[TrialRecord]) -> Result<(), DataError> {
    let mut seen: BTreeMap<&str, (Group, Vec<Condition>)> = BTreeMap::new();
    for (i, rec) in records.iter().enumerate() {
        rec.check().map_err(|reason| DataError::InvalidRecord {
            line: i as u64 + 1,
            reason,
        })?;
        let entry = seen
            .entry(rec.participant_id.as_str())
            .or_insert((rec.group, Vec::new()));
        if entry.0 != rec.group {
            return Err(DataError::InconsistentParticipant {
                participant: rec.participant_id.clone(),
                reason: "appears in both groups".into(),
            });
        }
        if entry.1.contains(&rec.condition) {
            return Err(DataError::InconsistentParticipant {
                participant: rec.participant_id.clone(),
                reason: format!("duplicate {:?} record", rec.condition),
            });
        }
        entry.1.push(rec.condition);
    }
    for (id, (group, conds)) in &seen {
        if *group == Group::Experiment && conds.len() != 2 {
            return Err(DataError::InconsistentParticipant {
                participant: id.to_string(),
                reason: "experiment participants need both conditions".into(),
            });
        }
    }
    Ok(())
}
