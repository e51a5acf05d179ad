//! Synthetic complete-blood-count cohort.
//!
//! Produces CSV text with the same column layout as the public alpha
//! thalassemia carrier/normal table (sex, 14 continuous haematology
//! variables, `phenotype`). Values are drawn from class-conditional normal
//! distributions with carriers showing microcytosis (low MCV/MCH), a raised
//! red-cell count and slightly lower HbA2. Useful for demos and tests when
//! the real file is not at hand; it carries no clinical meaning.

use rand::Rng as _;

use crate::rng;

/// Column names in file order.
pub const COLUMNS: [&str; 16] = [
    "sex", "hb", "pcv", "rbc", "mcv", "mch", "mchc", "rdw", "wbc", "neut", "lymph", "plt", "hba",
    "hba2", "hbf", "phenotype",
];

// (mean normal, mean carrier, sd, decimals) per continuous column.
const PROFILE: [(f64, f64, f64, usize); 14] = [
    (12.9, 12.1, 1.3, 1),   // hb
    (39.0, 37.2, 3.8, 1),   // pcv
    (4.75, 5.35, 0.55, 2),  // rbc
    (82.0, 71.5, 6.5, 1),   // mcv
    (27.3, 22.9, 2.6, 1),   // mch
    (33.1, 32.0, 1.3, 1),   // mchc
    (13.4, 14.6, 1.4, 1),   // rdw
    (8.1, 8.3, 2.2, 2),     // wbc
    (48.0, 47.0, 11.0, 1),  // neut
    (40.0, 41.0, 10.0, 1),  // lymph
    (300.0, 310.0, 80.0, 0), // plt
    (96.9, 97.2, 1.1, 1),   // hba
    (2.75, 2.45, 0.32, 2),  // hba2
    (0.45, 0.4, 0.25, 2),   // hbf
];

fn normal(rng: &mut rng::Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// CSV text for `rows` synthetic records, about `carrier_share` of them carriers.
pub fn cohort_csv(rows: usize, carrier_share: f64, seed: u64) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    let carriers = (carrier_share * rows as f64).round() as usize;
    for i in 0..rows {
        let mut r = rng::stream(seed, &[0xC0_4E, i as u64]);
        // Spread carriers evenly through the file.
        let carrier = (i * carriers) / rows != ((i + 1) * carriers) / rows;
        let sex = if r.gen_bool(0.5) { "male" } else { "female" };
        let mut cells = vec![sex.to_owned()];
        for &(m0, m1, sd, dec) in &PROFILE {
            let mean = if carrier { m1 } else { m0 };
            let v = (mean + sd * normal(&mut r)).max(0.01);
            cells.push(format!("{v:.dec$}"));
        }
        cells.push(if carrier { "alpha carrier" } else { "normal" }.to_owned());
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{read_csv, LoadOptions};

    #[test]
    fn parses_with_default_options() {
        let ds = read_csv(cohort_csv(288, 0.55, 1).as_bytes(), &LoadOptions::default()).unwrap();
        assert_eq!(ds.matrix.rows(), 288);
        assert_eq!(ds.matrix.cols(), 15);
        assert_eq!(ds.labels.counts(), [130, 158]);
    }

    #[test]
    fn deterministic() {
        assert_eq!(cohort_csv(10, 0.5, 4), cohort_csv(10, 0.5, 4));
        assert_ne!(cohort_csv(10, 0.5, 4), cohort_csv(10, 0.5, 5));
    }
}
