//! Scores predictions against ground truth, including the undefined cases.
//!
//! ```text
//! cargo run --example metrics
//! ```

use ptso::harness::metrics::{self, Scores, CARRIER};
use ptso::LabelVector;

fn main() -> ptso::Result<()> {
    let truth = LabelVector::new(vec![1, 1, 1, 0, 0, 1, 0, 1, 1, 0])?;
    let cases = [
        ("model", vec![1, 1, 0, 0, 1, 1, 0, 1, 1, 0]),
        ("all carrier", vec![1; 10]),
        ("all normal", vec![0; 10]),
    ];
    for (name, pred) in cases {
        let counts = metrics::confusion(&LabelVector::new(pred)?, &truth, CARRIER)?;
        let s = Scores::from_counts(&counts);
        println!(
            "{name:<12} tp {} fp {} fn {} tn {}  precision {}  recall {}  f {}",
            counts.true_positive,
            counts.false_positive,
            counts.false_negative,
            counts.true_negative,
            s.precision,
            s.recall,
            s.f_measure
        );
    }
    Ok(())
}
