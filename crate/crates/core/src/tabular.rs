//! Dataset loading, encoding and stratified splitting.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub mod synthetic;

/// Dense row-major table of finite feature values, one row per record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite value at row {}, column {}",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, values })
    }

    /// Builds a matrix from row vectors. An empty list gives a 0×0 matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Dimension {
                    expected: cols,
                    got: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, values)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, col)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            values,
        }
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if self.rows == 0 && self.cols == 0 {
            self.cols = row.len();
        }
        crate::error::check_len(self.cols, row.len())?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite value in appended row".into()));
        }
        self.values.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter_rows().map(<[f64]>::to_vec).collect()
    }
}

/// Binary class labels, carrier = 1 and normal = 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector(Vec<u8>);

impl LabelVector {
    pub fn new(labels: Vec<u8>) -> Result<Self> {
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::invalid(format!("label {bad} is not binary")));
        }
        Ok(Self(labels))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self(indices.iter().map(|&i| self.0[i]).collect())
    }

    /// Number of records with labels 0 and 1.
    pub fn counts(&self) -> [usize; 2] {
        let ones = self.0.iter().filter(|&&l| l == 1).count();
        [self.0.len() - ones, ones]
    }

    pub fn indices_of(&self, class: u8) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == class).then_some(i))
            .collect()
    }

    pub fn push(&mut self, label: u8) {
        assert!(label <= 1, "label {label} is not binary");
        self.0.push(label);
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

/// Column layout discovered from a CSV header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub feature_names: Vec<String>,
    pub categorical_columns: Vec<String>,
    pub label_column: String,
}

impl Schema {
    pub fn new(
        feature_names: Vec<String>,
        categorical_columns: Vec<String>,
        label_column: String,
    ) -> Result<Self> {
        if feature_names.is_empty() {
            return Err(Error::Schema("no feature columns".into()));
        }
        if feature_names.contains(&label_column) {
            return Err(Error::Schema(format!(
                "label column `{label_column}` is also a feature"
            )));
        }
        if let Some(c) = categorical_columns
            .iter()
            .find(|c| !feature_names.contains(c))
        {
            return Err(Error::Schema(format!("categorical column `{c}` is not a feature")));
        }
        Ok(Self {
            feature_names,
            categorical_columns,
            label_column,
        })
    }
}

/// Overrides for [`load_csv`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadOptions {
    pub label_column: String,
    pub categorical_columns: Vec<String>,
    /// Optional batch-id column, removed from the features.
    pub batch_column: Option<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            label_column: "phenotype".into(),
            categorical_columns: vec!["sex".into()],
            batch_column: None,
        }
    }
}

/// A loaded cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub matrix: FeatureMatrix,
    pub labels: LabelVector,
    pub schema: Schema,
    pub batches: Option<Vec<u32>>,
}

/// Reads a class label: `0`, `normal` or `negative` is 0; `1`, `positive` or
/// anything naming a carrier is 1. Case-insensitive.
pub fn parse_label(raw: &str) -> Option<u8> {
    let v = raw.trim().to_ascii_lowercase();
    match v.as_str() {
        "0" | "0.0" | "normal" | "negative" => Some(0),
        "1" | "1.0" | "positive" => Some(1),
        _ if v.contains("carrier") => Some(1),
        _ => None,
    }
}

fn parse_sex(raw: &str) -> Option<f64> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "female" | "f" => Some(0.0),
        "male" | "m" => Some(1.0),
        other => other.parse::<f64>().ok().filter(|v| *v == 0.0 || *v == 1.0),
    }
}

pub fn load_csv(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, opts)
}

/// Parses CSV text from any reader; see [`load_csv`].
pub fn read_csv<R: std::io::Read>(reader: R, opts: &LoadOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let label_idx = header
        .iter()
        .position(|h| *h == opts.label_column)
        .ok_or_else(|| Error::MissingLabelColumn(opts.label_column.clone()))?;
    let batch_idx = match &opts.batch_column {
        Some(b) => Some(
            header
                .iter()
                .position(|h| h == b)
                .ok_or_else(|| Error::Schema(format!("batch column `{b}` not found")))?,
        ),
        None => None,
    };
    let feature_idx: Vec<usize> = (0..header.len())
        .filter(|&i| i != label_idx && Some(i) != batch_idx)
        .collect();
    let feature_names: Vec<String> = feature_idx.iter().map(|&i| header[i].clone()).collect();
    let categorical: Vec<String> = opts
        .categorical_columns
        .iter()
        .filter(|c| feature_names.contains(c))
        .cloned()
        .collect();
    let schema = Schema::new(feature_names, categorical, opts.label_column.clone())?;

    let mut raw_rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        raw_rows.push(rec);
    }
    if raw_rows.is_empty() {
        return Err(Error::EmptyData);
    }

    // Categorical columns other than `sex` get codes in sorted order of their values.
    let mut codebooks: BTreeMap<usize, BTreeMap<String, f64>> = BTreeMap::new();
    for (j, &col) in feature_idx.iter().enumerate() {
        let name = &schema.feature_names[j];
        if schema.categorical_columns.contains(name) && name != "sex" {
            let mut distinct: Vec<String> =
                raw_rows.iter().map(|r| r.get(col).unwrap_or("").to_owned()).collect();
            distinct.sort();
            distinct.dedup();
            codebooks.insert(
                col,
                distinct.into_iter().enumerate().map(|(k, v)| (v, k as f64)).collect(),
            );
        }
    }

    let mut values = Vec::with_capacity(raw_rows.len() * feature_idx.len());
    let mut labels = Vec::with_capacity(raw_rows.len());
    let mut batches = batch_idx.map(|_| Vec::with_capacity(raw_rows.len()));
    let mut batch_codes: BTreeMap<String, u32> = BTreeMap::new();
    for (row, rec) in raw_rows.iter().enumerate() {
        let bad = |col: usize| Error::BadCell {
            row: row + 1,
            column: header[col].clone(),
            value: rec.get(col).unwrap_or("").to_owned(),
        };
        for &col in &feature_idx {
            let cell = rec.get(col).ok_or_else(|| bad(col))?;
            let v = if header[col] == "sex" && schema.categorical_columns.contains(&header[col]) {
                parse_sex(cell)
            } else if let Some(book) = codebooks.get(&col) {
                book.get(cell).copied()
            } else {
                cell.parse::<f64>().ok().filter(|v| v.is_finite())
            };
            values.push(v.ok_or_else(|| bad(col))?);
        }
        let label = rec
            .get(label_idx)
            .and_then(parse_label)
            .ok_or_else(|| bad(label_idx))?;
        labels.push(label);
        if let (Some(bi), Some(b)) = (batch_idx, batches.as_mut()) {
            let cell = rec.get(bi).ok_or_else(|| bad(bi))?.to_owned();
            let next = batch_codes.len() as u32;
            b.push(*batch_codes.entry(cell).or_insert(next));
        }
    }

    Ok(Dataset {
        matrix: FeatureMatrix::new(raw_rows.len(), feature_idx.len(), values)?,
        labels: LabelVector::new(labels)?,
        schema,
        batches,
    })
}

/// Disjoint train/test row indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    pub fold: Option<usize>,
}

fn shuffled_class_indices(labels: &LabelVector, seed: u64, purpose: u64) -> Result<[Vec<usize>; 2]> {
    let mut out = [labels.indices_of(0), labels.indices_of(1)];
    for (class, idx) in out.iter_mut().enumerate() {
        if idx.is_empty() {
            return Err(Error::EmptyClass(class as u8));
        }
        idx.shuffle(&mut rng::stream(seed, &[purpose, class as u64]));
    }
    Ok(out)
}

/// Round half down.
fn round_half_down(x: f64) -> usize {
    (x - 0.5).ceil().max(0.0) as usize
}

/// Stratified train/test split.
///
/// The overall train size is `round(fraction * rows)` with ties rounded down.
/// It is shared out over the classes by floor of each class quota, with the
/// leftover records going to the largest fractional remainders (ties to the
/// lower class id), so each class is within one record of its quota.
pub fn split_learning(
    matrix: &FeatureMatrix,
    labels: &LabelVector,
    fraction: f64,
    seed: u64,
) -> Result<DatasetSplit> {
    crate::error::check_len(matrix.rows(), labels.len())?;
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("learning fraction {fraction} outside (0, 1)")));
    }
    let classes = shuffled_class_indices(labels, seed, 0)?;
    let total = round_half_down(fraction * labels.len() as f64);
    let quotas: Vec<f64> = classes.iter().map(|c| fraction * c.len() as f64).collect();
    let mut take: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..2).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut leftover = total.saturating_sub(take.iter().sum());
    for &c in order.iter().cycle().take(4) {
        if leftover == 0 {
            break;
        }
        if take[c] < classes[c].len() {
            take[c] += 1;
            leftover -= 1;
        }
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, idx) in classes.iter().enumerate() {
        train.extend_from_slice(&idx[..take[c]]);
        test.extend_from_slice(&idx[take[c]..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::invalid(format!(
            "fraction {fraction} leaves an empty side on {} rows",
            labels.len()
        )));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(DatasetSplit {
        train_indices: train,
        test_indices: test,
        seed,
        fold: None,
    })
}

/// Stratified k-fold partition. Class-wise shuffled indices are laid end to
/// end and dealt round-robin, so fold sizes differ by at most one overall
/// and per class.
pub fn kfold(
    matrix: &FeatureMatrix,
    labels: &LabelVector,
    k: usize,
    seed: u64,
) -> Result<Vec<DatasetSplit>> {
    crate::error::check_len(matrix.rows(), labels.len())?;
    if k < 2 {
        return Err(Error::invalid(format!("k = {k} must be at least 2")));
    }
    let classes = shuffled_class_indices(labels, seed, 1)?;
    let minority = classes.iter().map(Vec::len).min().unwrap_or(0);
    if k > minority {
        return Err(Error::invalid(format!(
            "k = {k} exceeds minority class count {minority}"
        )));
    }
    let mut fold_of = vec![0usize; labels.len()];
    for (pos, &row) in classes.iter().flatten().enumerate() {
        fold_of[row] = pos % k;
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..labels.len()).partition(|&i| fold_of[i] == f);
            DatasetSplit {
                train_indices: train,
                test_indices: test,
                seed,
                fold: Some(f),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[u8]) -> LabelVector {
        LabelVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sex_column_is_encoded() {
        let csv = "sex,hb,phenotype\nfemale,12.1,normal\nmale,13.0,alpha carrier\nfemale,11.5,normal\n";
        let ds = read_csv(csv.as_bytes(), &LoadOptions::default()).unwrap();
        assert_eq!(ds.matrix.column(0), vec![0.0, 1.0, 0.0]);
        assert_eq!(ds.labels.as_slice(), &[0, 1, 0]);
        assert_eq!(ds.schema.feature_names, vec!["sex", "hb"]);
    }

    #[test]
    fn header_only_is_empty_data() {
        let err = read_csv("sex,hb,phenotype\n".as_bytes(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyData));
        assert_eq!(err.to_string(), "empty data section");
    }

    #[test]
    fn missing_label_column() {
        let err = read_csv("sex,hb\nmale,1\n".as_bytes(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MissingLabelColumn(_)));
    }

    #[test]
    fn bad_cell_reports_location() {
        let csv = "sex,hb,phenotype\nmale,12,normal\nmale,,normal\n";
        match read_csv(csv.as_bytes(), &LoadOptions::default()).unwrap_err() {
            Error::BadCell { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "hb");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn batch_column_is_split_off() {
        let csv = "hb,site,phenotype\n1,a,0\n2,b,1\n3,a,1\n";
        let opts = LoadOptions {
            batch_column: Some("site".into()),
            ..LoadOptions::default()
        };
        let ds = read_csv(csv.as_bytes(), &opts).unwrap();
        assert_eq!(ds.matrix.cols(), 1);
        assert_eq!(ds.batches, Some(vec![0, 1, 0]));
    }

    #[test]
    fn schema_invariants() {
        assert!(Schema::new(vec![], vec![], "y".into()).is_err());
        assert!(Schema::new(vec!["y".into()], vec![], "y".into()).is_err());
        assert!(Schema::new(vec!["a".into()], vec!["sex".into()], "y".into()).is_err());
    }

    #[test]
    fn two_row_half_split() {
        let m = FeatureMatrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let s = split_learning(&m, &labels(&[0, 1]), 0.5, 3).unwrap();
        assert_eq!(s.train_indices.len(), 1);
        assert_eq!(s.test_indices.len(), 1);
    }

    #[test]
    fn split_rejects_bad_fraction_and_empty_class() {
        let m = FeatureMatrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(split_learning(&m, &labels(&[0, 1]), 1.0, 0).is_err());
        assert!(split_learning(&m, &labels(&[0, 1]), 0.0, 0).is_err());
        assert!(matches!(
            split_learning(&m, &labels(&[1, 1]), 0.5, 0),
            Err(Error::EmptyClass(0))
        ));
    }

    #[test]
    fn kfold_small_and_too_large() {
        let m = FeatureMatrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let l = labels(&[0, 0, 1, 1]);
        let folds = kfold(&m, &l, 2, 9).unwrap();
        for f in &folds {
            assert_eq!(f.test_indices.len(), 2);
            assert_eq!(l.select(&f.test_indices).counts(), [1, 1]);
        }
        assert!(kfold(&m, &l, 3, 9).is_err());
    }

    #[test]
    fn matrix_rejects_non_finite() {
        assert!(FeatureMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(FeatureMatrix::new(1, 2, vec![1.0]).is_err());
    }
}
