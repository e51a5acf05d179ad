//! Ranks features by weighted distance, trains the maxout alpha generator and
//! fuses the synthetic cohort down to `e` features.
//!
//! ```text
//! cargo run --release --example feature_fusion -- [e]
//! ```

use ptso::fusion::{self, AlphaConfig, AlphaGenerator};
use ptso::qnorm::{self, QuantileStrategy};
use ptso::tabular::{read_csv, synthetic::cohort_csv, LoadOptions};

fn main() -> ptso::Result<()> {
    let e: usize = std::env::args().nth(1).map_or(8, |a| a.parse().expect("e is an integer"));
    let ds = read_csv(cohort_csv(288, 0.55, 2024).as_bytes(), &LoadOptions::default())?;
    let normalized = qnorm::quantile_normalize(&ds.matrix, &QuantileStrategy::all())?;

    let plan = fusion::rank_features(&normalized, &ds.labels, e)?;
    println!("feature ranking:");
    for &j in &plan.ranked_order {
        println!("  {:<6} {:.4}", ds.schema.feature_names[j], plan.scores[j].score);
    }
    for (xi, group) in plan.groups().iter().enumerate() {
        let names: Vec<&str> = group.iter().map(|&j| ds.schema.feature_names[j].as_str()).collect();
        println!("group {}: {}", xi + 1, names.join(", "));
    }

    let generator = AlphaGenerator::fit(&normalized, &ds.labels, &AlphaConfig::default())?;
    println!(
        "alpha network: {} parameters, mse {:.4} -> {:.4} (standardized targets)",
        generator.network.param_count(),
        generator.log.initial_mse,
        generator.log.final_mse
    );
    let alphas = generator.predict(&normalized)?;
    let fused = fusion::fuse(&normalized, &alphas, &plan)?;
    println!("fused matrix: {} x {}", fused.rows(), fused.cols());
    for (i, row) in fused.iter_rows().take(3).enumerate() {
        println!("  row {i} (alpha {:.3}): {row:.3?}", alphas.0[i]);
    }
    Ok(())
}
