//! Synthetic minority oversampling.
//!
//! New minority records are placed at a uniform random point on the segment
//! between a minority record and one of its nearest minority neighbours.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::rng;
use crate::tabular::{FeatureMatrix, LabelVector};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OversampleConfig {
    /// Neighbourhood size; capped at minority count − 1.
    pub neighbors: usize,
    pub seed: u64,
}

impl Default for OversampleConfig {
    fn default() -> Self {
        Self {
            neighbors: 5,
            seed: 0,
        }
    }
}

/// Where a synthetic row came from: `origin + u * (neighbor − origin)`.
/// Indices refer to rows of the input matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub origin: usize,
    pub neighbor: usize,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Balanced {
    pub matrix: FeatureMatrix,
    pub labels: LabelVector,
    /// One entry per appended row, in order.
    pub provenance: Vec<Provenance>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// For each row, the positions of its `k` nearest other rows (Euclidean,
/// ties by lower position).
pub fn knn_minority<R: AsRef<[f64]>>(rows: &[R], k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k >= rows.len() {
        return Err(Error::invalid(format!(
            "neighbour count {k} must be in 1..{}",
            rows.len()
        )));
    }
    Ok(rows
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let mut others: Vec<(f64, usize)> = rows
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, b)| (sq_dist(a.as_ref(), b.as_ref()), j))
                .collect();
            others.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            others.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect())
}

/// `x + u (neighbor − x)`.
pub fn smote_interpolate(x: &[f64], neighbor: &[f64], u: f64) -> Result<Vec<f64>> {
    check_len(x.len(), neighbor.len())?;
    Ok(x.iter().zip(neighbor).map(|(a, b)| a + u * (b - a)).collect())
}

/// Appends synthetic minority rows until both classes have the same count.
///
/// Minority rows act as origins in round-robin order; each synthetic row
/// draws its neighbour and `u` from its own seeded stream. Original rows come
/// first, unchanged.
pub fn balance(matrix: &FeatureMatrix, labels: &LabelVector, config: &OversampleConfig) -> Result<Balanced> {
    check_len(matrix.rows(), labels.len())?;
    let counts = labels.counts();
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::invalid("oversampling needs records of both classes"));
    }
    let minority_class: u8 = if counts[1] < counts[0] { 1 } else { 0 };
    let deficit = counts[0].abs_diff(counts[1]);
    let mut out = matrix.clone();
    let mut out_labels = labels.clone();
    let mut provenance = Vec::with_capacity(deficit);
    if deficit == 0 {
        return Ok(Balanced {
            matrix: out,
            labels: out_labels,
            provenance,
        });
    }
    let minority = labels.indices_of(minority_class);
    if minority.len() < 2 {
        return Err(Error::invalid("oversampling needs at least two minority records"));
    }
    let k = config.neighbors.clamp(1, minority.len() - 1);
    let rows: Vec<&[f64]> = minority.iter().map(|&i| matrix.row(i)).collect();
    let neighbors = knn_minority(&rows, k)?;
    for s in 0..deficit {
        let o = s % minority.len();
        let mut r = rng::stream(config.seed, &[0x5A07, s as u64]);
        let nb = neighbors[o][r.gen_range(0..k)];
        let u: f64 = r.gen_range(0.0..=1.0);
        let synthetic = smote_interpolate(rows[o], rows[nb], u)?;
        out.push_row(&synthetic)?;
        out_labels.push(minority_class);
        provenance.push(Provenance {
            origin: minority[o],
            neighbor: minority[nb],
            u,
        });
    }
    Ok(Balanced {
        matrix: out,
        labels: out_labels,
        provenance,
    })
}
