//! End-to-end runs: normalize, fuse, balance, train, predict, score.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{self, OversampleConfig};
use crate::error::{Error, Result};
use crate::fusion::{self, AlphaGenerator};
use crate::harness::config::{ExperimentConfig, ProtocolPoint};
use crate::harness::metrics::{confusion, summarize, ConfusionCounts, Scores, Summary, CARRIER};
use crate::harness::report::{PointReport, Provenance, RunReport, SeedResult, SCHEMA_VERSION};
use crate::model::{self, TransferProfile};
use crate::optim::PtsoConfig;
use crate::qnorm::{self, QuantileStrategy, StrategyKind};
use crate::rng;
use crate::tabular::{self, Dataset, DatasetSplit, FeatureMatrix, LabelVector};

// Stage tags for seed derivation.
const QNORM: u64 = 1;
const DMN: u64 = 2;
const SMOTE: u64 = 3;
const PTSO: u64 = 4;

/// Original row indices consumed by each fitted stage of one split.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LeakageAudit {
    pub qnorm_rows: Vec<usize>,
    pub dmn_rows: Vec<usize>,
    pub smote_rows: Vec<usize>,
    /// Original rows in the PTSO fitness set; synthetic rows are counted in
    /// `synthetic_rows` and derive from `smote_rows` only.
    pub fitness_rows: Vec<usize>,
    pub synthetic_rows: usize,
}

impl LeakageAudit {
    /// True when no fitted stage saw any of `test`.
    pub fn is_clean(&self, test: &[usize]) -> bool {
        [&self.qnorm_rows, &self.dmn_rows, &self.smote_rows, &self.fitness_rows]
            .iter()
            .all(|rows| rows.iter().all(|r| test.binary_search(r).is_err()))
    }
}

/// Predictions for the test rows of one split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome {
    pub test_indices: Vec<usize>,
    pub predictions: LabelVector,
    /// The train fold's majority class, predicted for every test row.
    pub baseline: LabelVector,
    pub train_fitness: f64,
    pub audit: LeakageAudit,
}

/// Stage settings shared by every split of a run.
#[derive(Debug, Clone)]
pub struct PipelineSettings {
    pub strategy: StrategyKind,
    pub fused_count: usize,
    pub alpha: crate::harness::config::FusionSettings,
    pub smote_neighbors: usize,
    pub profile: TransferProfile,
    pub ptso: PtsoConfig,
}

impl PipelineSettings {
    pub fn from_config(config: &ExperimentConfig, features: usize) -> Result<Self> {
        let fused_count = config.fusion.fused_count_for(features);
        if fused_count >= features {
            return Err(Error::Config(format!(
                "fused width {fused_count} must be below the {features} features"
            )));
        }
        Ok(Self {
            strategy: config.qnorm.strategy,
            fused_count,
            alpha: config.fusion.clone(),
            smote_neighbors: config.smote.neighbors,
            profile: config.classifier.resolve(None)?,
            ptso: config.ptso.clone(),
        })
    }
}

fn stage_seed(seed: u64, fold: usize, stage: u64) -> u64 {
    rng::derive_key(seed, &[fold as u64, stage])
}

/// Per-column mean and spread (1 where the column is constant).
fn column_stats(m: &FeatureMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.rows().max(1) as f64;
    (0..m.cols())
        .map(|j| {
            let col = m.column(j);
            let mean = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            (mean, if sd > 1e-12 { sd } else { 1.0 })
        })
        .unzip()
}

fn standardize(m: &FeatureMatrix, mean: &[f64], sd: &[f64]) -> Result<FeatureMatrix> {
    let values = m
        .iter_rows()
        .flat_map(|r| r.iter().zip(mean.iter().zip(sd)).map(|(v, (mu, s))| (v - mu) / s))
        .collect();
    FeatureMatrix::new(m.rows(), m.cols(), values)
}

fn majority(labels: &LabelVector) -> u8 {
    let [n0, n1] = labels.counts();
    u8::from(n1 > n0)
}

/// Runs every stage on one split. Only train rows feed fitted stages; test
/// rows pass through train-derived transforms.
pub fn run_split(
    data: &Dataset,
    split: &DatasetSplit,
    settings: &PipelineSettings,
    seed: u64,
) -> Result<SplitOutcome> {
    let fold = split.fold.unwrap_or(0);
    let train_x = data.matrix.select_rows(&split.train_indices);
    let train_y = data.labels.select(&split.train_indices);
    let test_x = data.matrix.select_rows(&split.test_indices);

    let batches: Vec<u32> = match &data.batches {
        Some(b) => split.train_indices.iter().map(|&i| b[i]).collect(),
        None => {
            let halves = qnorm::acquisition_halves(data.matrix.rows());
            split.train_indices.iter().map(|&i| halves[i]).collect()
        }
    };
    let strategy = match settings.strategy {
        StrategyKind::All => QuantileStrategy::all(),
        StrategyKind::ClassSpecific => QuantileStrategy::class_specific(&train_y),
        StrategyKind::Discrete => QuantileStrategy::discrete(&train_y, &batches),
        StrategyKind::Ratio => QuantileStrategy::ratio(&train_y, stage_seed(seed, fold, QNORM)),
    };
    let (norm_train, fitted) = qnorm::fit_transform(&train_x, &strategy).map_err(|e| e.at_stage("qnorm"))?;
    let norm_test = fitted.transform(&test_x).map_err(|e| e.at_stage("qnorm"))?;

    let (fused_train, fused_test) = (|| {
        let plan = fusion::rank_features(&norm_train, &train_y, settings.fused_count)?;
        let generator = AlphaGenerator::fit(
            &norm_train,
            &train_y,
            &settings.alpha.alpha_config(stage_seed(seed, fold, DMN)),
        )?;
        let a_train = generator.predict(&norm_train)?;
        let a_test = generator.predict(&norm_test)?;
        Ok::<_, Error>((
            fusion::fuse(&norm_train, &a_train, &plan)?,
            fusion::fuse(&norm_test, &a_test, &plan)?,
        ))
    })()
    .map_err(|e| e.at_stage("fusion"))?;

    let balanced = augment::balance(
        &fused_train,
        &train_y,
        &OversampleConfig {
            neighbors: settings.smote_neighbors,
            seed: stage_seed(seed, fold, SMOTE),
        },
    )
    .map_err(|e| e.at_stage("augment"))?;

    let (mean, sd) = column_stats(&balanced.matrix);
    let fit_x = standardize(&balanced.matrix, &mean, &sd)?;
    let eval_x = standardize(&fused_test, &mean, &sd)?;

    let (psi, train_fitness, network) = (|| {
        let network = model::build_classifier(&settings.profile, settings.fused_count, 2)?;
        let context = model::FitnessContext::new(&network, &fit_x, &balanced.labels)?;
        let ptso = PtsoConfig {
            seed: stage_seed(seed, fold, PTSO),
            ..settings.ptso.clone()
        };
        let (w, result) = model::train_classifier(&network, &context, &ptso, &model::default_bounds(&network)?)?;
        Ok::<_, Error>((w, result.best_fitness, network))
    })()
    .map_err(|e| e.at_stage("classifier"))?;
    let predictions = model::predict(&network, &psi.values, &eval_x).map_err(|e| e.at_stage("classifier"))?;
    let baseline = LabelVector::new(vec![majority(&train_y); split.test_indices.len()])?;

    let train_rows = split.train_indices.clone();
    Ok(SplitOutcome {
        test_indices: split.test_indices.clone(),
        predictions,
        baseline,
        train_fitness,
        audit: LeakageAudit {
            qnorm_rows: train_rows.clone(),
            dmn_rows: train_rows.clone(),
            smote_rows: train_rows.clone(),
            fitness_rows: train_rows,
            synthetic_rows: balanced.provenance.len(),
        },
    })
}

pub fn splits_for(data: &Dataset, point: ProtocolPoint, seed: u64) -> Result<Vec<DatasetSplit>> {
    match point {
        ProtocolPoint::LearningSet { fraction } => {
            Ok(vec![tabular::split_learning(&data.matrix, &data.labels, fraction, seed)?])
        }
        ProtocolPoint::KFold { k } => tabular::kfold(&data.matrix, &data.labels, k, seed),
    }
}

/// One (protocol point, seed) job. K-fold predictions are pooled over folds
/// before scoring.
pub fn run_seed(data: &Dataset, point: ProtocolPoint, settings: &PipelineSettings, seed: u64) -> Result<SeedResult> {
    let splits = splits_for(data, point, seed).map_err(|e| e.at_stage("split"))?;
    let outcomes = splits
        .par_iter()
        .map(|s| run_split(data, s, settings, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut counts = ConfusionCounts::default();
    let mut baseline_counts = ConfusionCounts::default();
    for o in &outcomes {
        let truth = data.labels.select(&o.test_indices);
        counts.add(&confusion(&o.predictions, &truth, CARRIER)?);
        baseline_counts.add(&confusion(&o.baseline, &truth, CARRIER)?);
    }
    Ok(SeedResult {
        seed,
        scores: Scores::from_counts(&counts),
        counts,
        baseline_scores: Scores::from_counts(&baseline_counts),
        baseline_counts,
        train_fitness: outcomes.iter().map(|o| o.train_fitness).sum::<f64>() / outcomes.len() as f64,
    })
}

fn aggregate(seeds: &[SeedResult], pick: impl Fn(&Scores) -> crate::harness::metrics::Metric) -> Summary {
    summarize(&seeds.iter().map(|s| pick(&s.scores)).collect::<Vec<_>>())
}

/// Runs the configured protocol on `data`. `dataset_bytes` only feeds the
/// provenance hash.
pub fn run_pipeline_on(config: &ExperimentConfig, data: &Dataset, dataset_bytes: &[u8]) -> Result<RunReport> {
    config.validate()?;
    let settings = PipelineSettings::from_config(config, data.matrix.cols())?;
    let points = config.protocol.points();
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|p| config.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(p, s)| run_seed(data, points[p], &settings, s))
        .collect::<Result<Vec<_>>>()?;

    let mut reports = Vec::with_capacity(points.len());
    let mut it = results.into_iter();
    for &point in &points {
        let seeds: Vec<SeedResult> = it.by_ref().take(config.seeds.len()).collect();
        let baseline_f = summarize(&seeds.iter().map(|s| s.baseline_scores.f_measure).collect::<Vec<_>>());
        reports.push(PointReport {
            protocol: point,
            precision: aggregate(&seeds, |s| s.precision),
            recall: aggregate(&seeds, |s| s.recall),
            f_measure: aggregate(&seeds, |s| s.f_measure),
            baseline_f_measure: baseline_f,
            seeds,
        });
    }
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        provenance: Provenance {
            dataset_sha256: crate::harness::config::sha256_hex(dataset_bytes),
            config_hash: config.hash(),
            profile_hash: settings.profile.hash(),
            rows: data.matrix.rows(),
            features: data.matrix.cols(),
            class_counts: data.labels.counts(),
        },
        points: reports,
    })
}

/// Loads the configured dataset and runs the protocol.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let (data, bytes) = config.load_dataset().map_err(|e| e.at_stage("load"))?;
    run_pipeline_on(config, &data, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::SyntheticSource;

    fn small_config() -> ExperimentConfig {
        let mut c = ExperimentConfig {
            synthetic: Some(SyntheticSource {
                rows: 60,
                ..SyntheticSource::default()
            }),
            seeds: vec![3],
            ..ExperimentConfig::default()
        };
        c.fusion.epochs = 10;
        c.ptso.max_evaluations = 300;
        c.ptso.population_size = 10;
        c
    }

    #[test]
    fn split_sees_train_rows_only() {
        let c = small_config();
        let (data, _) = c.load_dataset().unwrap();
        let split = tabular::split_learning(&data.matrix, &data.labels, 0.7, 5).unwrap();
        let settings = PipelineSettings::from_config(&c, data.matrix.cols()).unwrap();
        let out = run_split(&data, &split, &settings, 5).unwrap();
        assert!(out.audit.is_clean(&split.test_indices));
        assert_eq!(out.predictions.len(), split.test_indices.len());
        let counts = data.labels.select(&split.train_indices).counts();
        assert_eq!(out.audit.synthetic_rows, counts[0].abs_diff(counts[1]));
    }

    #[test]
    fn stage_errors_are_tagged() {
        let mut c = small_config();
        c.fusion.fused_count = Some(15);
        let e = run_pipeline(&c).unwrap_err();
        assert!(e.is_config_error());
        let mut c = small_config();
        c.qnorm.strategy = StrategyKind::Discrete;
        c.synthetic.as_mut().unwrap().rows = 8;
        c.protocol.learning_sets = vec![0.5];
        // 4 train rows cannot fill every (class, half) group
        match run_pipeline(&c) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, "qnorm"),
            other => panic!("expected a qnorm stage error, got {other:?}"),
        }
    }

    #[test]
    fn majority_prefers_lower_class_on_ties() {
        assert_eq!(majority(&LabelVector::new(vec![0, 1]).unwrap()), 0);
        assert_eq!(majority(&LabelVector::new(vec![1, 1, 0]).unwrap()), 1);
    }
}
