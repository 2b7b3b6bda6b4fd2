#![allow(dead_code)]

use proptest::prelude::*;
use tradeoff_core::{Dataset, Label};

/// Scores on a coarse grid (to force ties and exact 0/1) or continuous.
pub fn score() -> impl Strategy<Value = f64> {
    prop_oneof![(0u32..=20).prop_map(|k| k as f64 / 20.0), 0.0..=1.0f64]
}

pub fn dataset(max_n: usize) -> impl Strategy<Value = Dataset> {
    (0.0..=1.0f64)
        .prop_flat_map(move |prevalence| {
            prop::collection::vec((score(), prop::bool::weighted(prevalence)), 1..=max_n)
        })
        .prop_map(|rows| {
            Dataset::from_pairs(
                rows.into_iter()
                    .map(|(s, d)| (s, if d { Label::Damaging } else { Label::Good })),
            )
            .unwrap()
        })
}

/// Brute-force (tp, fp, tn, fn) for `score >= t`, `None` meaning nothing flagged.
pub fn recount(d: &Dataset, t: Option<f64>) -> (u64, u64, u64, u64) {
    let mut c = (0, 0, 0, 0);
    for e in d.examples() {
        let flagged = t.is_some_and(|t| e.score >= t);
        match (flagged, e.label) {
            (true, Label::Damaging) => c.0 += 1,
            (true, Label::Good) => c.1 += 1,
            (false, Label::Good) => c.2 += 1,
            (false, Label::Damaging) => c.3 += 1,
        }
    }
    c
}

/// Candidate thresholds built from scratch: {0} ∪ distinct scores ∪ {above-max}.
pub fn candidates(d: &Dataset) -> Vec<Option<f64>> {
    let mut s: Vec<f64> = d.examples().iter().map(|e| e.score + 0.0).collect();
    s.push(0.0);
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s.dedup();
    s.into_iter().map(Some).chain([None]).collect()
}

pub fn ratio(n: u64, d: u64) -> Option<f64> {
    if d == 0 {
        None
    } else {
        Some(n as f64 / d as f64)
    }
}

/// (recall, precision, fpr) from brute-force counts.
pub fn oracle_metrics(c: (u64, u64, u64, u64)) -> [Option<f64>; 3] {
    let (tp, fp, tn, fn_) = c;
    [ratio(tp, tp + fn_), ratio(tp, tp + fp), ratio(fp, fp + tn)]
}
