//! Per-threshold confusion counts and the recall/precision/FPR triple.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::{check_score, Dataset, Label};
use crate::error::{Error, Result};
use crate::query::MetricId;

/// Decision threshold. An example is flagged damaging iff `score >= t`;
/// `AboveMax` flags nothing.
///
/// Serializes as a number, or `null` for `AboveMax`. Orders every `At`
/// before `AboveMax`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Threshold {
    At(f64),
    AboveMax,
}

impl Threshold {
    pub fn value(self) -> Option<f64> {
        match self {
            Threshold::At(t) => Some(t),
            Threshold::AboveMax => None,
        }
    }

    pub(crate) fn check(self) -> Result<()> {
        match self {
            Threshold::At(t) if !(0.0..=1.0).contains(&t) => Err(Error::ThresholdOutOfRange(t)),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn flags(self, score: f64) -> bool {
        match self {
            Threshold::At(t) => score >= t,
            Threshold::AboveMax => false,
        }
    }
}

impl From<f64> for Threshold {
    fn from(t: f64) -> Self {
        Threshold::At(t)
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::At(t) => write!(f, "{t}"),
            Threshold::AboveMax => f.write_str("above-max"),
        }
    }
}

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.value().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match Option::<f64>::deserialize(d)? {
            Some(t) => Threshold::At(t),
            None => Threshold::AboveMax,
        })
    }
}

/// Label an example scored `score` under `threshold`.
pub fn classify(score: f64, threshold: impl Into<Threshold>) -> Result<Label> {
    check_score(score)?;
    let threshold = threshold.into();
    threshold.check()?;
    Ok(if threshold.flags(score) {
        Label::Damaging
    } else {
        Label::Good
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn flagged(&self) -> u64 {
        self.tp + self.fp
    }

    pub fn metrics(&self) -> MetricSet {
        metrics_from(*self)
    }
}

/// Each metric is `None` exactly when its denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSet {
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub fpr: Option<f64>,
}

impl MetricSet {
    pub fn get(&self, metric: MetricId) -> Option<f64> {
        match metric {
            MetricId::Recall => self.recall,
            MetricId::Precision => self.precision,
            MetricId::Fpr => self.fpr,
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics_from(c: ConfusionCounts) -> MetricSet {
    MetricSet {
        recall: ratio(c.tp, c.tp + c.fn_),
        precision: ratio(c.tp, c.tp + c.fp),
        fpr: ratio(c.fp, c.fp + c.tn),
    }
}

/// Tally `dataset` against its true labels at `threshold`.
pub fn confusion_at(dataset: &Dataset, threshold: impl Into<Threshold>) -> Result<ConfusionCounts> {
    let threshold = threshold.into();
    threshold.check()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut c = ConfusionCounts::default();
    for ex in dataset.examples() {
        match (threshold.flags(ex.score), ex.label) {
            (true, Label::Damaging) => c.tp += 1,
            (true, Label::Good) => c.fp += 1,
            (false, Label::Good) => c.tn += 1,
            (false, Label::Damaging) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub threshold: Threshold,
    pub counts: ConfusionCounts,
    pub metrics: MetricSet,
}

impl OperatingPoint {
    pub fn new(threshold: Threshold, counts: ConfusionCounts) -> Self {
        Self {
            threshold,
            counts,
            metrics: metrics_from(counts),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-9;

    fn d0() -> Dataset {
        Dataset::from_pairs([
            (0.9, Label::Damaging),
            (0.8, Label::Good),
            (0.3, Label::Damaging),
            (0.1, Label::Good),
        ])
        .unwrap()
    }

    #[test]
    fn classify_boundary_is_inclusive() {
        assert_eq!(classify(0.5, 0.5), Ok(Label::Damaging));
        assert_eq!(classify(0.49, 0.5), Ok(Label::Good));
        assert_eq!(classify(0.0, 0.0), Ok(Label::Damaging));
        assert_eq!(classify(1.0, Threshold::AboveMax), Ok(Label::Good));
    }

    #[test]
    fn classify_rejects_bad_inputs() {
        assert_eq!(classify(1.2, 0.5), Err(Error::ScoreOutOfRange(1.2)));
        assert_eq!(classify(-0.1, 0.5), Err(Error::ScoreOutOfRange(-0.1)));
        assert_eq!(classify(0.3, 1.5), Err(Error::ThresholdOutOfRange(1.5)));
    }

    #[test]
    fn confusion_on_d0() {
        assert_eq!(
            confusion_at(&d0(), 0.5),
            Ok(ConfusionCounts::new(1, 1, 1, 1))
        );
        assert_eq!(
            confusion_at(&d0(), 0.0),
            Ok(ConfusionCounts::new(2, 2, 0, 0))
        );
        assert_eq!(
            confusion_at(&d0(), Threshold::AboveMax),
            Ok(ConfusionCounts::new(0, 0, 2, 2))
        );
    }

    #[test]
    fn confusion_on_empty_dataset_fails() {
        let empty = Dataset::new(vec![]).unwrap();
        assert_eq!(confusion_at(&empty, 0.5), Err(Error::EmptyDataset));
    }

    #[test]
    fn metrics_from_reference_counts() {
        let m = metrics_from(ConfusionCounts::new(20, 60, 910, 10));
        assert_eq!(m.precision, Some(0.25));
        assert!((m.recall.unwrap() - 0.666_667).abs() < 1e-6);
        assert!((m.fpr.unwrap() - 0.061_856).abs() < 1e-6);
        assert!((m.recall.unwrap() - 20.0 / 30.0).abs() < EPS);
        assert!((m.fpr.unwrap() - 60.0 / 970.0).abs() < EPS);
    }

    #[test]
    fn metrics_degenerate_denominators() {
        let all = metrics_from(ConfusionCounts::new(2, 2, 0, 0));
        assert_eq!(all.recall, Some(1.0));
        assert_eq!(all.fpr, Some(1.0));
        assert_eq!(all.precision, Some(0.5));

        let none = metrics_from(ConfusionCounts::new(0, 0, 5, 5));
        assert_eq!(none.precision, None);
        assert_eq!(none.recall, Some(0.0));
        assert_eq!(none.fpr, Some(0.0));

        let nothing = metrics_from(ConfusionCounts::default());
        assert_eq!(nothing, MetricSet::default());
    }

    #[test]
    fn threshold_serializes_above_max_as_null() {
        assert_eq!(serde_json::to_string(&Threshold::AboveMax).unwrap(), "null");
        assert_eq!(serde_json::to_string(&Threshold::At(0.4)).unwrap(), "0.4");
        let back: Threshold = serde_json::from_str("null").unwrap();
        assert_eq!(back, Threshold::AboveMax);
        assert!(Threshold::At(1.0) < Threshold::AboveMax);
    }

    #[test]
    fn operating_point_document_shape() {
        let p = OperatingPoint::new(Threshold::AboveMax, ConfusionCounts::new(0, 0, 2, 2));
        let v = serde_json::to_value(p).unwrap();
        assert_eq!(
            v,
            serde_json::json!({
                "threshold": null,
                "counts": {"tp": 0, "fp": 0, "tn": 2, "fn": 2},
                "metrics": {"recall": 0.0, "precision": null, "fpr": 0.0}
            })
        );
    }
}
