//! Writes the synthetic blood-count cohort as CSV.
//!
//! ```text
//! cargo run --example synth_dataset -- [rows] [carrier_share] [seed] > cohort.csv
//! ```

use ptso::tabular::{read_csv, synthetic::cohort_csv, LoadOptions};

fn main() -> ptso::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_owned());
    let rows: usize = arg(0, "288").parse().expect("rows is an integer");
    let share: f64 = arg(1, "0.55").parse().expect("carrier share is a number");
    let seed: u64 = arg(2, "2024").parse().expect("seed is an integer");

    let text = cohort_csv(rows, share, seed);
    let ds = read_csv(text.as_bytes(), &LoadOptions::default())?;
    let [normal, carrier] = ds.labels.counts();
    eprintln!("{rows} rows, {} features, {normal} normal / {carrier} carrier", ds.matrix.cols());
    print!("{text}");
    Ok(())
}
