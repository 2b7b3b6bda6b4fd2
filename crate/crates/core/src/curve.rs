//! Exact threshold curve.
//!
//! Recall, precision and FPR only change where the flagged set changes, so
//! the curve is evaluated at `{0.0} ∪ {distinct scores} ∪ {AboveMax}` and
//! nowhere else. Construction sorts once and accumulates flagged counts
//! from the top score down.

use std::sync::Arc;

use crate::dataset::{Dataset, Label};
use crate::error::{Error, Result};
use crate::metrics::{ConfusionCounts, OperatingPoint, Threshold};

/// Operating points at every candidate threshold, strictly ascending,
/// ending with `AboveMax`.
#[derive(Debug, Clone)]
pub struct ThresholdCurve {
    dataset: Arc<Dataset>,
    points: Vec<OperatingPoint>,
}

pub fn build_curve(dataset: impl Into<Arc<Dataset>>) -> Result<ThresholdCurve> {
    ThresholdCurve::new(dataset)
}

impl ThresholdCurve {
    pub fn new(dataset: impl Into<Arc<Dataset>>) -> Result<Self> {
        let dataset = dataset.into();
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n_pos = dataset.n_damaging() as u64;
        let n_neg = dataset.n_good() as u64;

        let mut ranked: Vec<(f64, Label)> = dataset
            .examples()
            .iter()
            .map(|e| (e.score, e.label))
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0));

        // (score, tp, fp) for the flagged set {s >= score}, descending by score.
        let mut steps: Vec<(f64, u64, u64)> = Vec::new();
        let (mut tp, mut fp) = (0u64, 0u64);
        let mut i = 0;
        while i < ranked.len() {
            let score = ranked[i].0;
            while i < ranked.len() && ranked[i].0 == score {
                match ranked[i].1 {
                    Label::Damaging => tp += 1,
                    Label::Good => fp += 1,
                }
                i += 1;
            }
            steps.push((score, tp, fp));
        }

        let counts = |tp: u64, fp: u64| ConfusionCounts::new(tp, fp, n_neg - fp, n_pos - tp);

        let mut points = Vec::with_capacity(steps.len() + 2);
        let lowest = steps.last().map(|s| s.0).unwrap_or(0.0);
        if lowest > 0.0 {
            points.push(OperatingPoint::new(
                Threshold::At(0.0),
                counts(n_pos, n_neg),
            ));
        }
        for &(score, tp, fp) in steps.iter().rev() {
            // -0.0 == 0.0; keep the candidate reported as the 0.0 sentinel.
            let t = if score == 0.0 { 0.0 } else { score };
            points.push(OperatingPoint::new(Threshold::At(t), counts(tp, fp)));
        }
        points.push(OperatingPoint::new(Threshold::AboveMax, counts(0, 0)));

        Ok(Self { dataset, points })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn points(&self) -> &[OperatingPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the candidate whose flagged set equals `{score >= threshold}`.
    pub fn index_at(&self, threshold: f64) -> Result<usize> {
        Threshold::At(threshold).check()?;
        let finite = &self.points[..self.points.len() - 1];
        Ok(finite.partition_point(|p| match p.threshold {
            Threshold::At(c) => c < threshold,
            Threshold::AboveMax => false,
        }))
    }

    /// Operating point for an arbitrary threshold. The returned point carries
    /// the queried threshold, not the candidate it resolved to.
    pub fn point_at(&self, threshold: f64) -> Result<OperatingPoint> {
        let idx = self.index_at(threshold)?;
        Ok(OperatingPoint::new(
            Threshold::At(threshold),
            self.points[idx].counts,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::confusion_at;

    fn d0() -> Dataset {
        Dataset::from_pairs([
            (0.9, Label::Damaging),
            (0.8, Label::Good),
            (0.3, Label::Damaging),
            (0.1, Label::Good),
        ])
        .unwrap()
    }

    fn thresholds(c: &ThresholdCurve) -> Vec<Threshold> {
        c.points().iter().map(|p| p.threshold).collect()
    }

    #[test]
    fn d0_candidates_and_recalls() {
        let c = build_curve(d0()).unwrap();
        use Threshold::*;
        assert_eq!(
            thresholds(&c),
            vec![At(0.0), At(0.1), At(0.3), At(0.8), At(0.9), AboveMax]
        );
        let recalls: Vec<f64> = c
            .points()
            .iter()
            .map(|p| p.metrics.recall.unwrap())
            .collect();
        assert_eq!(recalls, vec![1.0, 1.0, 1.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn single_example_curve() {
        let c = build_curve(Dataset::from_pairs([(0.7, Label::Damaging)]).unwrap()).unwrap();
        use Threshold::*;
        assert_eq!(thresholds(&c), vec![At(0.0), At(0.7), AboveMax]);
        let tps: Vec<u64> = c.points().iter().map(|p| p.counts.tp).collect();
        assert_eq!(tps, vec![1, 1, 0]);
    }

    #[test]
    fn zero_score_collapses_into_sentinel() {
        let c = build_curve(
            Dataset::from_pairs([
                (0.0, Label::Good),
                (0.0, Label::Damaging),
                (0.5, Label::Good),
            ])
            .unwrap(),
        )
        .unwrap();
        use Threshold::*;
        assert_eq!(thresholds(&c), vec![At(0.0), At(0.5), AboveMax]);
        assert_eq!(c.points()[0].counts, ConfusionCounts::new(1, 2, 0, 0));
    }

    #[test]
    fn ties_collapse() {
        let c = build_curve(
            Dataset::from_pairs([
                (0.4, Label::Good),
                (0.4, Label::Damaging),
                (0.4, Label::Good),
            ])
            .unwrap(),
        )
        .unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.points()[1].counts, ConfusionCounts::new(1, 2, 0, 0));
    }

    #[test]
    fn point_at_d0() {
        let c = build_curve(d0()).unwrap();
        let p = c.point_at(0.5).unwrap();
        assert_eq!(p.threshold, Threshold::At(0.5));
        assert_eq!(p.counts, ConfusionCounts::new(1, 1, 1, 1));
        assert_eq!(
            c.point_at(0.0).unwrap().counts,
            ConfusionCounts::new(2, 2, 0, 0)
        );
        assert_eq!(
            c.point_at(0.95).unwrap().counts,
            ConfusionCounts::new(0, 0, 2, 2)
        );
        assert_eq!(
            c.point_at(0.9).unwrap().counts,
            ConfusionCounts::new(1, 0, 2, 1)
        );
        assert_eq!(
            c.point_at(1.0).unwrap().counts,
            confusion_at(&d0(), 1.0).unwrap()
        );
    }

    #[test]
    fn point_at_rejects_out_of_range() {
        let c = build_curve(d0()).unwrap();
        assert_eq!(c.point_at(1.5), Err(Error::ThresholdOutOfRange(1.5)));
        assert!(c.point_at(-0.01).is_err());
        assert!(c.point_at(f64::NAN).is_err());
    }

    #[test]
    fn empty_dataset_fails() {
        assert_eq!(
            build_curve(Dataset::new(vec![]).unwrap()).err(),
            Some(Error::EmptyDataset)
        );
    }
}
