//! Metrics, experiment configuration, pipeline orchestration and reports.

pub mod config;
pub mod metrics;
pub mod pipeline;
pub mod report;

pub use config::{ExperimentConfig, ProtocolPoint};
pub use metrics::{confusion, f_measure, precision, recall, ConfusionCounts, Metric, Scores};
pub use pipeline::{run_pipeline, run_pipeline_on, run_split, LeakageAudit, SplitOutcome};
pub use report::{emit_report, RunReport};
