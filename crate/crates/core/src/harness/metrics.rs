//! Confusion counts and precision / recall / F-measure.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_len, Result};
use crate::tabular::LabelVector;

/// Label treated as positive unless stated otherwise (carrier).
pub const CARRIER: u8 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positive: u64,
    pub false_positive: u64,
    pub false_negative: u64,
    pub true_negative: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_positive + self.false_positive + self.false_negative + self.true_negative
    }

    pub fn add(&mut self, other: &ConfusionCounts) {
        self.true_positive += other.true_positive;
        self.false_positive += other.false_positive;
        self.false_negative += other.false_negative;
        self.true_negative += other.true_negative;
    }
}

pub fn confusion(predicted: &LabelVector, truth: &LabelVector, positive_class: u8) -> Result<ConfusionCounts> {
    check_len(truth.len(), predicted.len())?;
    let mut c = ConfusionCounts::default();
    for (&p, &t) in predicted.as_slice().iter().zip(truth.as_slice()) {
        match (p == positive_class, t == positive_class) {
            (true, true) => c.true_positive += 1,
            (true, false) => c.false_positive += 1,
            (false, true) => c.false_negative += 1,
            (false, false) => c.true_negative += 1,
        }
    }
    Ok(c)
}

/// A ratio that may be undefined because its denominator is zero. Serialized
/// as a number or the string `"undefined"`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metric(pub Option<f64>);

impl Metric {
    pub const UNDEFINED: Metric = Metric(None);

    pub fn ratio(num: f64, den: f64) -> Self {
        if den > 0.0 {
            Metric(Some(num / den))
        } else {
            Metric::UNDEFINED
        }
    }

    pub fn value(self) -> Option<f64> {
        self.0
    }

    pub fn is_defined(self) -> bool {
        self.0.is_some()
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v:.4}"),
            None => f.write_str("undefined"),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Metric(Some(v))),
            Raw::Text(t) if t == "undefined" => Ok(Metric::UNDEFINED),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("unexpected metric `{t}`"))),
        }
    }
}

/// `ĥ / (ĥ + fp)`.
pub fn precision(c: &ConfusionCounts) -> Metric {
    Metric::ratio(c.true_positive as f64, (c.true_positive + c.false_positive) as f64)
}

/// `ĥ / (ĥ + η)`.
pub fn recall(c: &ConfusionCounts) -> Metric {
    Metric::ratio(c.true_positive as f64, (c.true_positive + c.false_negative) as f64)
}

/// Harmonic mean of precision and recall, kept within `[min, max]` of the
/// two despite rounding.
pub fn f_measure(precision: Metric, recall: Metric) -> Metric {
    match (precision.0, recall.0) {
        (Some(p), Some(r)) if p + r > 0.0 => Metric(Some((2.0 * p * r / (p + r)).clamp(p.min(r), p.max(r)))),
        _ => Metric::UNDEFINED,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: Metric,
    pub recall: Metric,
    pub f_measure: Metric,
}

impl Scores {
    pub fn from_counts(c: &ConfusionCounts) -> Self {
        let p = precision(c);
        let r = recall(c);
        Self {
            precision: p,
            recall: r,
            f_measure: f_measure(p, r),
        }
    }
}

/// Mean and median of the defined values, with how many were undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Metric,
    pub median: Metric,
    pub undefined: usize,
}

pub fn summarize(values: &[Metric]) -> Summary {
    let mut defined: Vec<f64> = values.iter().filter_map(|m| m.0).collect();
    let undefined = values.len() - defined.len();
    if defined.is_empty() {
        return Summary {
            mean: Metric::UNDEFINED,
            median: Metric::UNDEFINED,
            undefined,
        };
    }
    defined.sort_by(f64::total_cmp);
    let n = defined.len();
    let median = if n % 2 == 1 {
        defined[n / 2]
    } else {
        (defined[n / 2 - 1] + defined[n / 2]) / 2.0
    };
    Summary {
        mean: Metric(Some(defined.iter().sum::<f64>() / n as f64)),
        median: Metric(Some(median)),
        undefined,
    }
}
