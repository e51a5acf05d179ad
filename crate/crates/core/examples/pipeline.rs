//! Runs the whole pipeline on the synthetic cohort under a learning-set split
//! and a k-fold protocol, then writes the JSON and CSV reports.
//!
//! ```text
//! cargo run --release --example pipeline -- [out_dir]
//! ```
//!
//! Set `PTSO_DATASET` to a CSV file to use real data instead.

use std::path::PathBuf;

use ptso::harness::config::{ExperimentConfig, SyntheticSource};
use ptso::harness::{self};

fn main() -> ptso::Result<()> {
    let mut config = ExperimentConfig {
        seeds: vec![1, 2, 3],
        ..ExperimentConfig::default()
    };
    match std::env::var_os("PTSO_DATASET") {
        Some(path) => config.dataset = Some(path.into()),
        None => config.synthetic = Some(SyntheticSource::default()),
    }
    config.protocol.learning_sets = vec![0.9];
    config.protocol.k_values = vec![3];

    let report = harness::run_pipeline(&config)?;
    print!("{}", report.summary_table());
    println!(
        "dataset sha256 {}, config {}",
        &report.provenance.dataset_sha256[..16],
        report.provenance.config_hash
    );

    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().display().to_string()));
    let json = dir.join("ptso_report.json");
    let csv = dir.join("ptso_report.csv");
    harness::emit_report(&report, &json, Some(&csv))?;
    println!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}
