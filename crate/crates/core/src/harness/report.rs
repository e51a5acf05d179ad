//! Run reports: JSON with an optional flat CSV table.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, ProtocolPoint};
use crate::harness::metrics::{ConfusionCounts, Scores, Summary};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub counts: ConfusionCounts,
    pub scores: Scores,
    pub baseline_counts: ConfusionCounts,
    pub baseline_scores: Scores,
    /// Best classifier fitness, averaged over folds.
    pub train_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub protocol: ProtocolPoint,
    pub seeds: Vec<SeedResult>,
    pub precision: Summary,
    pub recall: Summary,
    pub f_measure: Summary,
    pub baseline_f_measure: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_sha256: String,
    pub config_hash: String,
    pub profile_hash: String,
    pub rows: usize,
    pub features: usize,
    pub class_counts: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub provenance: Provenance,
    pub points: Vec<PointReport>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| Error::Schema(format!("report: {e}")))?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "report schema version {} (expected {SCHEMA_VERSION})",
                r.schema_version
            )));
        }
        Ok(r)
    }

    /// One row per (protocol point, seed).
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "protocol", "seed", "tp", "fp", "fn", "tn", "precision", "recall", "f_measure", "baseline_f_measure",
        ])
        .expect("in-memory write");
        for p in &self.points {
            for s in &p.seeds {
                let c = &s.counts;
                w.write_record([
                    p.protocol.to_string(),
                    s.seed.to_string(),
                    c.true_positive.to_string(),
                    c.false_positive.to_string(),
                    c.false_negative.to_string(),
                    c.true_negative.to_string(),
                    s.scores.precision.to_string(),
                    s.scores.recall.to_string(),
                    s.scores.f_measure.to_string(),
                    s.baseline_scores.f_measure.to_string(),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    /// Plain-text table of the aggregates.
    pub fn summary_table(&self) -> String {
        let mut s = format!(
            "{:<18} {:>9} {:>9} {:>9} {:>9} {:>11}\n",
            "protocol", "P(med)", "R(med)", "F(med)", "F(mean)", "baseline F"
        );
        for p in &self.points {
            s.push_str(&format!(
                "{:<18} {:>9} {:>9} {:>9} {:>9} {:>11}\n",
                p.protocol.to_string(),
                p.precision.median.to_string(),
                p.recall.median.to_string(),
                p.f_measure.median.to_string(),
                p.f_measure.mean.to_string(),
                p.baseline_f_measure.median.to_string(),
            ));
        }
        s
    }
}

/// Writes the JSON report to `path`, and the CSV table to `csv_path` if given.
pub fn emit_report(report: &RunReport, path: impl AsRef<Path>, csv_path: Option<&Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, report.to_json()).map_err(|e| Error::io(path, e))?;
    if let Some(c) = csv_path {
        std::fs::write(c, report.to_csv()).map_err(|e| Error::io(c, e))?;
    }
    Ok(())
}
