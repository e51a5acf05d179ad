//! Hybrid political-tangent search optimization (PTSO) and the tabular
//! classification pipeline built around it.
//!
//! The pipeline runs in this order:
//!
//! 1. [`tabular`] loads a CSV cohort and produces stratified splits.
//! 2. [`qnorm`] quantile-normalizes records under one of four grouping strategies.
//! 3. [`fusion`] ranks features by weighted Euclidean distance, regresses a
//!    per-record weight with a deep maxout network, and fuses `c` features into `e < c`.
//! 4. [`augment`] balances the training fold by synthetic minority interpolation.
//! 5. [`model`] builds a classifier from a transfer profile and trains its
//!    dense head with [`optim::run_ptso`].
//! 6. [`harness`] computes precision / recall / F-measure and writes reports.
//!
//! Each stage is usable on its own; see the crate's `examples/` directory.

pub mod augment;
pub mod error;
pub mod fusion;
pub mod harness;
pub mod model;
pub mod optim;
pub mod qnorm;
pub mod rng;
pub mod tabular;

pub use error::{Error, Result};
pub use tabular::{DatasetSplit, FeatureMatrix, LabelVector, Schema};
