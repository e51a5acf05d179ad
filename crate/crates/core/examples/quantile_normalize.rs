//! Quantile-normalizes a small matrix under each strategy and shows how an
//! unseen record is mapped onto the fitted reference.
//!
//! ```text
//! cargo run --example quantile_normalize
//! ```

use ptso::qnorm::{self, QuantileStrategy};
use ptso::{FeatureMatrix, LabelVector};

fn show(title: &str, m: &FeatureMatrix) {
    println!("{title}");
    for row in m.iter_rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:7.3}")).collect();
        println!("  {}", cells.join(" "));
    }
}

fn main() -> ptso::Result<()> {
    let m = FeatureMatrix::from_rows(&[
        [5.0, 2.0, 3.0, 4.0],
        [4.0, 1.0, 4.0, 2.0],
        [3.0, 4.0, 6.0, 8.0],
        [9.0, 7.0, 1.0, 3.0],
    ])?;
    let labels = LabelVector::new(vec![0, 0, 1, 1])?;
    let batches = [0, 1, 0, 1];
    show("input", &m);

    let (all, fitted) = qnorm::fit_transform(&m, &QuantileStrategy::all())?;
    show("all", &all);
    show("class", &qnorm::quantile_normalize(&m, &QuantileStrategy::class_specific(&labels))?);
    show(
        "ratio (class 0 rows rewritten)",
        &qnorm::quantile_normalize(&m, &QuantileStrategy::ratio(&labels, 7))?,
    );
    match qnorm::quantile_normalize(&m, &QuantileStrategy::discrete(&labels, &batches)) {
        Ok(d) => show("discrete", &d),
        Err(e) => println!("discrete: {e}"),
    }

    println!("reference {:?}", fitted.reference);
    let unseen = FeatureMatrix::from_rows(&[[0.5, 10.0, 2.0, 2.0]])?;
    show("unseen record mapped by rank", &fitted.transform(&unseen)?);
    Ok(())
}
