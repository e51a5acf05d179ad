//! Feature fusion: weighted Euclidean feature ranking, per-record weights from
//! a deep maxout network, and grouped weighted sums that shrink `c` features
//! to `e < c`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::tabular::{FeatureMatrix, LabelVector};

pub mod dmn;

pub use dmn::{
    maxout_unit, relu, train_dmn, AffinePiece, DmnNetwork, DmnShape, DmnTrainConfig, DmnTrainLog,
    MaxoutLayer,
};

/// `sqrt(Σ W_t (y_t − z_t)²)` with `W_t = y_t` when `y_t ≠ 0`, else 1.
///
/// Negative entries in `y` give negative weights; a negative sum is a domain error.
pub fn weighted_euclidean(y: &[f64], z: &[f64]) -> Result<f64> {
    check_len(y.len(), z.len())?;
    let radicand: f64 = y
        .iter()
        .zip(z)
        .map(|(&yt, &zt)| {
            let w = if yt != 0.0 { yt } else { 1.0 };
            w * (yt - zt) * (yt - zt)
        })
        .sum();
    if radicand < 0.0 {
        return Err(Error::Domain(format!(
            "weighted distance radicand {radicand} is negative"
        )));
    }
    Ok(radicand.sqrt())
}

/// Mean row of `class`.
pub fn class_centroid(matrix: &FeatureMatrix, labels: &LabelVector, class: u8) -> Result<Vec<f64>> {
    check_len(matrix.rows(), labels.len())?;
    let rows = labels.indices_of(class);
    if rows.is_empty() {
        return Err(Error::EmptyClass(class));
    }
    let mut c = vec![0.0; matrix.cols()];
    for &r in &rows {
        for (acc, v) in c.iter_mut().zip(matrix.row(r)) {
            *acc += v;
        }
    }
    c.iter_mut().for_each(|v| *v /= rows.len() as f64);
    Ok(c)
}

/// Regression target for a record's fusion weight: its weighted distance to
/// its class centroid.
pub fn alpha_target(record: &[f64], centroid: &[f64]) -> Result<f64> {
    weighted_euclidean(record, centroid)
}

/// Per-column offsets that make every column's minimum zero.
pub fn column_minima(matrix: &FeatureMatrix) -> Vec<f64> {
    (0..matrix.cols())
        .map(|j| matrix.column(j).into_iter().fold(f64::INFINITY, f64::min))
        .collect()
}

/// Subtracts `offsets` from every row.
pub fn shift(matrix: &FeatureMatrix, offsets: &[f64]) -> Result<FeatureMatrix> {
    check_len(matrix.cols(), offsets.len())?;
    let mut out = matrix.clone();
    for i in 0..out.rows() {
        out.row_mut(i).iter_mut().zip(offsets).for_each(|(v, o)| *v -= o);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceScore {
    pub feature_index: usize,
    pub score: f64,
}

/// Ranked feature order and its partition into fused groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionPlan {
    /// Feature indices, highest score first.
    pub ranked_order: Vec<usize>,
    pub scores: Vec<DistanceScore>,
    pub fused_count: usize,
}

impl FusionPlan {
    pub fn new(ranked_order: Vec<usize>, fused_count: usize) -> Result<Self> {
        let c = ranked_order.len();
        let mut sorted = ranked_order.clone();
        sorted.sort_unstable();
        if sorted != (0..c).collect::<Vec<_>>() {
            return Err(Error::invalid("ranked order is not a permutation"));
        }
        if fused_count == 0 || fused_count > c {
            return Err(Error::invalid(format!(
                "fused count {fused_count} must be in 1..={c}"
            )));
        }
        Ok(Self {
            ranked_order,
            scores: Vec::new(),
            fused_count,
        })
    }

    /// Total feature count `Z = c`.
    pub fn feature_count(&self) -> usize {
        self.ranked_order.len()
    }

    /// Features per group, `i = Z / a` rounded down.
    pub fn group_size(&self) -> usize {
        self.feature_count() / self.fused_count
    }

    /// Contiguous slices of the ranked list; the last group takes any remainder.
    pub fn groups(&self) -> Vec<&[usize]> {
        let i = self.group_size();
        (0..self.fused_count)
            .map(|g| {
                let end = if g + 1 == self.fused_count {
                    self.feature_count()
                } else {
                    (g + 1) * i
                };
                &self.ranked_order[g * i..end]
            })
            .collect()
    }

    /// Fused values of one record: group `ξ` (1-based) gives
    /// `(α / ξ) · Σ_{t in group ξ} record[t]`.
    pub fn fuse_record(&self, record: &[f64], alpha: f64) -> Result<Vec<f64>> {
        check_len(self.feature_count(), record.len())?;
        Ok(self
            .groups()
            .iter()
            .enumerate()
            .map(|(g, idx)| {
                let xi = (g + 1) as f64;
                alpha / xi * idx.iter().map(|&t| record[t]).sum::<f64>()
            })
            .collect())
    }
}

/// Scores each feature by the weighted distance between its per-record
/// class-mean profile and its pooled-mean profile, after shifting columns to
/// be non-negative. Features are ordered by descending score, ties by index.
pub fn feature_scores(matrix: &FeatureMatrix, labels: &LabelVector) -> Result<Vec<DistanceScore>> {
    check_len(matrix.rows(), labels.len())?;
    if matrix.cols() == 0 {
        return Err(Error::invalid("no features to rank"));
    }
    if matrix.is_empty() {
        return Err(Error::invalid("no records to rank features on"));
    }
    let shifted = shift(matrix, &column_minima(matrix))?;
    let groups = [labels.indices_of(0), labels.indices_of(1)];
    (0..matrix.cols())
        .map(|j| {
            let col = shifted.column(j);
            let pooled = col.iter().sum::<f64>() / col.len() as f64;
            let class_mean: Vec<f64> = groups
                .iter()
                .map(|g| {
                    if g.is_empty() {
                        pooled
                    } else {
                        g.iter().map(|&i| col[i]).sum::<f64>() / g.len() as f64
                    }
                })
                .collect();
            let profile: Vec<f64> = (0..col.len())
                .map(|i| class_mean[labels.get(i) as usize])
                .collect();
            let score = weighted_euclidean(&profile, &vec![pooled; col.len()])?;
            Ok(DistanceScore {
                feature_index: j,
                score,
            })
        })
        .collect()
}

pub fn rank_features(matrix: &FeatureMatrix, labels: &LabelVector, fused_count: usize) -> Result<FusionPlan> {
    let scores = feature_scores(matrix, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].score.total_cmp(&scores[a].score).then(a.cmp(&b)));
    let mut plan = FusionPlan::new(order, fused_count)?;
    plan.scores = scores;
    Ok(plan)
}

/// Per-record fusion weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaVector(pub Vec<f64>);

/// Fuses every record. Requires `e < c`.
pub fn fuse(matrix: &FeatureMatrix, alphas: &AlphaVector, plan: &FusionPlan) -> Result<FeatureMatrix> {
    check_len(plan.feature_count(), matrix.cols())?;
    check_len(matrix.rows(), alphas.0.len())?;
    if plan.fused_count >= matrix.cols() {
        return Err(Error::invalid(format!(
            "fused width {} must be below feature count {}",
            plan.fused_count,
            matrix.cols()
        )));
    }
    let mut values = Vec::with_capacity(matrix.rows() * plan.fused_count);
    for (row, &a) in matrix.iter_rows().zip(&alphas.0) {
        values.extend(plan.fuse_record(row, a)?);
    }
    FeatureMatrix::new(matrix.rows(), plan.fused_count, values)
}

/// Settings for [`AlphaGenerator::fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlphaConfig {
    pub depth: usize,
    pub hidden_width: usize,
    pub pieces: usize,
    pub train: DmnTrainConfig,
}

impl Default for AlphaConfig {
    fn default() -> Self {
        Self {
            depth: 2,
            hidden_width: 16,
            pieces: 2,
            train: DmnTrainConfig::default(),
        }
    }
}

/// A maxout network that predicts a record's fusion weight from the record
/// alone, so unlabeled records can be fused.
///
/// Inputs are z-scored and targets scaled to unit spread with statistics from
/// the fitting rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaGenerator {
    pub network: DmnNetwork,
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub target_mean: f64,
    pub target_scale: f64,
    pub log: DmnTrainLog,
}

fn mean_and_scale(values: &[f64]) -> (f64, f64) {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 1e-12 { sd } else { 1.0 })
}

impl AlphaGenerator {
    /// Alpha targets for labelled rows: weighted distance of each record to its
    /// class centroid, both shifted by the column minima of `matrix`.
    pub fn targets(matrix: &FeatureMatrix, labels: &LabelVector) -> Result<Vec<f64>> {
        let shifted = shift(matrix, &column_minima(matrix))?;
        let centroids = [
            class_centroid(&shifted, labels, 0).ok(),
            class_centroid(&shifted, labels, 1).ok(),
        ];
        shifted
            .iter_rows()
            .enumerate()
            .map(|(i, r)| {
                let c = centroids[labels.get(i) as usize]
                    .as_ref()
                    .ok_or(Error::EmptyClass(labels.get(i)))?;
                alpha_target(r, c)
            })
            .collect()
    }

    pub fn fit(matrix: &FeatureMatrix, labels: &LabelVector, config: &AlphaConfig) -> Result<Self> {
        let targets = Self::targets(matrix, labels)?;
        let (input_mean, input_scale): (Vec<f64>, Vec<f64>) =
            (0..matrix.cols()).map(|j| mean_and_scale(&matrix.column(j))).unzip();
        let (target_mean, target_scale) = mean_and_scale(&targets);
        let records: Vec<Vec<f64>> = matrix
            .iter_rows()
            .map(|r| standardize(r, &input_mean, &input_scale))
            .collect();
        let scaled: Vec<f64> = targets.iter().map(|t| (t - target_mean) / target_scale).collect();
        let shape = DmnShape::new(matrix.cols(), config.depth.max(1), config.hidden_width, config.pieces);
        let init = DmnNetwork::random(&shape, config.train.seed)?;
        let (network, log) = train_dmn(&init, &records, &scaled, &config.train)?;
        Ok(Self {
            network,
            input_mean,
            input_scale,
            target_mean,
            target_scale,
            log,
        })
    }

    pub fn predict(&self, matrix: &FeatureMatrix) -> Result<AlphaVector> {
        matrix
            .iter_rows()
            .map(|r| {
                let x = standardize(r, &self.input_mean, &self.input_scale);
                Ok(self.network.forward(&x)? * self.target_scale + self.target_mean)
            })
            .collect::<Result<_>>()
            .map(AlphaVector)
    }
}

fn standardize(row: &[f64], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    row.iter()
        .zip(mean.iter().zip(scale))
        .map(|(v, (m, s))| (v - m) / s)
        .collect()
}
