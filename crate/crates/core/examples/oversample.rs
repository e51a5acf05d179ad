//! Balances an imbalanced two-class set with synthetic minority records and
//! prints where each new record came from.
//!
//! ```text
//! cargo run --example oversample
//! ```

use ptso::augment::{self, OversampleConfig};
use ptso::{FeatureMatrix, LabelVector};

fn main() -> ptso::Result<()> {
    let rows = [
        [1.0, 1.0],
        [1.2, 0.8],
        [0.9, 1.1],
        [1.1, 1.3],
        [0.8, 0.9],
        [1.3, 1.0],
        [4.0, 4.0],
        [4.5, 3.5],
        [3.8, 4.4],
    ];
    let m = FeatureMatrix::from_rows(&rows)?;
    let y = LabelVector::new(vec![0, 0, 0, 0, 0, 0, 1, 1, 1])?;
    println!("before: {:?}", y.counts());

    let out = augment::balance(&m, &y, &OversampleConfig { neighbors: 2, seed: 42 })?;
    println!("after:  {:?}", out.labels.counts());
    for (i, p) in out.provenance.iter().enumerate() {
        let row = out.matrix.row(m.rows() + i);
        println!(
            "  new row {:?} = row {} + {:.3} * (row {} - row {})",
            row, p.origin, p.u, p.neighbor, p.origin
        );
    }
    Ok(())
}
