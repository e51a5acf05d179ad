//! Quantile normalization with record-wise ranking.
//!
//! Records play the role of samples and features the role of genes: every
//! record in a normalization group is sorted, the sorted vectors are averaged
//! position by position into a reference distribution, and each value is then
//! replaced by the reference value at its rank.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::rng;
use crate::tabular::{FeatureMatrix, LabelVector};

/// Which records are normalized together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// Whole matrix as one group.
    All,
    /// One group per class.
    #[serde(alias = "class")]
    ClassSpecific,
    /// One group per (class, batch) pair.
    Discrete,
    /// Class-0 records are divided by a random class-1 partner, the ratio
    /// matrix is normalized as one group and mapped back by multiplication.
    Ratio,
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "class" | "class_specific" => Ok(Self::ClassSpecific),
            "discrete" => Ok(Self::Discrete),
            "ratio" => Ok(Self::Ratio),
            other => Err(Error::Config(format!("unknown quantile strategy `{other}`"))),
        }
    }
}

/// A strategy together with the per-row side information it needs.
#[derive(Debug, Clone, Copy)]
pub struct QuantileStrategy<'a> {
    pub kind: StrategyKind,
    pub class_labels: Option<&'a LabelVector>,
    pub batch_labels: Option<&'a [u32]>,
    /// Seed for the ratio partner draw.
    pub seed: u64,
}

impl<'a> QuantileStrategy<'a> {
    pub fn all() -> Self {
        Self {
            kind: StrategyKind::All,
            class_labels: None,
            batch_labels: None,
            seed: 0,
        }
    }

    pub fn class_specific(labels: &'a LabelVector) -> Self {
        Self {
            kind: StrategyKind::ClassSpecific,
            class_labels: Some(labels),
            ..Self::all()
        }
    }

    pub fn discrete(labels: &'a LabelVector, batches: &'a [u32]) -> Self {
        Self {
            kind: StrategyKind::Discrete,
            class_labels: Some(labels),
            batch_labels: Some(batches),
            ..Self::all()
        }
    }

    pub fn ratio(labels: &'a LabelVector, seed: u64) -> Self {
        Self {
            kind: StrategyKind::Ratio,
            class_labels: Some(labels),
            seed,
            ..Self::all()
        }
    }

    fn labels(&self, rows: usize) -> Result<&'a LabelVector> {
        let l = self.class_labels.ok_or_else(|| {
            Error::invalid(format!("{:?} strategy needs class labels", self.kind))
        })?;
        check_len(rows, l.len())?;
        Ok(l)
    }
}

/// Default batch assignment when no batch column exists: first half of the
/// rows in acquisition order is batch 0, the rest batch 1.
pub fn acquisition_halves(rows: usize) -> Vec<u32> {
    (0..rows).map(|i| u32::from(i >= rows.div_ceil(2))).collect()
}

/// 1-based ranks by ascending value; tied values share the mean of their positions.
pub fn rank_within_sample(record: &[f64]) -> Vec<f64> {
    let order = argsort(record);
    let mut ranks = vec![0.0; record.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && record[order[end]] == record[order[start]] {
            end += 1;
        }
        // positions start..end (0-based) -> mean 1-based rank
        let mean = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean;
        }
        start = end;
    }
    ranks
}

fn argsort(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
    idx
}

/// Position-wise mean of the sorted records listed in `rows`.
pub fn reference_distribution(matrix: &FeatureMatrix, rows: &[usize]) -> Vec<f64> {
    let mut reference = vec![0.0; matrix.cols()];
    for &r in rows {
        let mut sorted = matrix.row(r).to_vec();
        sorted.sort_by(f64::total_cmp);
        for (acc, v) in reference.iter_mut().zip(sorted) {
            *acc += v;
        }
    }
    let n = rows.len().max(1) as f64;
    reference.iter_mut().for_each(|v| *v /= n);
    reference
}

/// Maps one record onto `reference` by rank. Tied values receive the mean of
/// the reference values over their tied positions.
pub fn map_to_reference(record: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
    check_len(reference.len(), record.len())?;
    let order = argsort(record);
    let mut out = vec![0.0; record.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && record[order[end]] == record[order[start]] {
            end += 1;
        }
        let mean = reference[start..end].iter().sum::<f64>() / (end - start) as f64;
        for &i in &order[start..end] {
            out[i] = mean;
        }
        start = end;
    }
    Ok(out)
}

fn normalize_groups(matrix: &FeatureMatrix, groups: &[Vec<usize>]) -> Result<FeatureMatrix> {
    let mut out = matrix.clone();
    for g in groups {
        let reference = reference_distribution(matrix, g);
        for &r in g {
            let mapped = map_to_reference(matrix.row(r), &reference)?;
            out.row_mut(r).copy_from_slice(&mapped);
        }
    }
    Ok(out)
}

/// Quantile-normalizes `matrix` under `strategy`. Output has the input's shape
/// and row order.
pub fn quantile_normalize(matrix: &FeatureMatrix, strategy: &QuantileStrategy) -> Result<FeatureMatrix> {
    if matrix.is_empty() {
        return Err(Error::invalid("quantile normalization needs at least one record"));
    }
    let groups = normalization_groups(matrix, strategy)?;
    match strategy.kind {
        StrategyKind::Ratio => ratio_normalize(matrix, strategy),
        _ => normalize_groups(matrix, &groups),
    }
}

/// Row groups each strategy normalizes jointly. For `Ratio` this is the
/// class-0 rows, which are the rows whose values get rewritten.
pub fn normalization_groups(matrix: &FeatureMatrix, strategy: &QuantileStrategy) -> Result<Vec<Vec<usize>>> {
    let rows = matrix.rows();
    match strategy.kind {
        StrategyKind::All => Ok(vec![(0..rows).collect()]),
        StrategyKind::ClassSpecific => {
            let labels = strategy.labels(rows)?;
            Ok([0, 1]
                .into_iter()
                .map(|c| labels.indices_of(c))
                .filter(|g| !g.is_empty())
                .collect())
        }
        StrategyKind::Discrete => {
            let labels = strategy.labels(rows)?;
            let batches = strategy
                .batch_labels
                .ok_or_else(|| Error::invalid("discrete strategy needs batch labels"))?;
            check_len(rows, batches.len())?;
            let mut batch_ids: Vec<u32> = batches.to_vec();
            batch_ids.sort_unstable();
            batch_ids.dedup();
            let classes: Vec<u8> = [0, 1]
                .into_iter()
                .filter(|&c| !labels.indices_of(c).is_empty())
                .collect();
            let mut groups = Vec::new();
            for &c in &classes {
                for &b in &batch_ids {
                    let g: Vec<usize> = (0..rows)
                        .filter(|&i| labels.get(i) == c && batches[i] == b)
                        .collect();
                    if g.is_empty() {
                        return Err(Error::Domain(format!(
                            "discrete group (class {c}, batch {b}) has no records"
                        )));
                    }
                    groups.push(g);
                }
            }
            Ok(groups)
        }
        StrategyKind::Ratio => {
            let labels = strategy.labels(rows)?;
            for c in [0, 1] {
                if labels.indices_of(c).is_empty() {
                    return Err(Error::EmptyClass(c));
                }
            }
            Ok(vec![labels.indices_of(0)])
        }
    }
}

fn ratio_normalize(matrix: &FeatureMatrix, strategy: &QuantileStrategy) -> Result<FeatureMatrix> {
    let labels = strategy.labels(matrix.rows())?;
    let class0 = labels.indices_of(0);
    let class1 = labels.indices_of(1);
    // Shift each column to be >= 1 so ratios are defined; undone afterwards.
    let shift: Vec<f64> = (0..matrix.cols())
        .map(|j| {
            let min = matrix.column(j).into_iter().fold(f64::INFINITY, f64::min);
            if min < 1.0 { 1.0 - min } else { 0.0 }
        })
        .collect();
    let mut rng = rng::stream(strategy.seed, &[0x0004_A710]);
    let partners: Vec<usize> = class0
        .iter()
        .map(|_| class1[rng.gen_range(0..class1.len())])
        .collect();
    let shifted = |r: usize| -> Vec<f64> {
        matrix.row(r).iter().zip(&shift).map(|(v, s)| v + s).collect()
    };
    let ratio_rows: Vec<Vec<f64>> = class0
        .iter()
        .zip(&partners)
        .map(|(&r, &p)| {
            shifted(r)
                .iter()
                .zip(shifted(p))
                .map(|(a, b)| a / b)
                .collect()
        })
        .collect();
    let ratio = FeatureMatrix::from_rows(&ratio_rows)?;
    let ratio_norm = normalize_groups(&ratio, &[(0..ratio.rows()).collect()])?;
    let mut out = matrix.clone();
    for (k, (&r, &p)) in class0.iter().zip(&partners).enumerate() {
        let back: Vec<f64> = ratio_norm
            .row(k)
            .iter()
            .zip(shifted(p))
            .zip(&shift)
            .map(|((q, b), s)| q * b - s)
            .collect();
        out.row_mut(r).copy_from_slice(&back);
    }
    Ok(out)
}

/// Normalization fitted on one set of records, applicable to unseen records.
///
/// Out-of-sample records are mapped by rank onto the pooled reference
/// distribution of the fitted (already normalized) rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedQuantiles {
    pub reference: Vec<f64>,
}

impl FittedQuantiles {
    pub fn transform(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        let rows: Vec<Vec<f64>> = matrix
            .iter_rows()
            .map(|r| map_to_reference(r, &self.reference))
            .collect::<Result<_>>()?;
        let mut out = FeatureMatrix::from_rows(&rows)?;
        if rows.is_empty() {
            out = FeatureMatrix::zeros(0, matrix.cols());
        }
        Ok(out)
    }
}

/// Normalizes `matrix` and returns the reference used for out-of-sample rows.
pub fn fit_transform(
    matrix: &FeatureMatrix,
    strategy: &QuantileStrategy,
) -> Result<(FeatureMatrix, FittedQuantiles)> {
    let normalized = quantile_normalize(matrix, strategy)?;
    let reference = reference_distribution(&normalized, &(0..normalized.rows()).collect::<Vec<_>>());
    Ok((normalized, FittedQuantiles { reference }))
}
