//! Inverse and constrained threshold queries over a [`ThresholdCurve`].
//!
//! Bounds are compared exactly against the metric values; there is no
//! epsilon. A constraint on a metric that is undefined at a candidate is
//! unsatisfied there.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::ThresholdCurve;
use crate::error::{Error, Infeasible, Result};
use crate::metrics::OperatingPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricId {
    Recall,
    Precision,
    Fpr,
}

impl MetricId {
    pub const ALL: [MetricId; 3] = [MetricId::Recall, MetricId::Precision, MetricId::Fpr];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::Recall => "recall",
            MetricId::Precision => "precision",
            MetricId::Fpr => "fpr",
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown metric {0:?}; expected recall, precision or fpr")]
pub struct UnknownMetric(pub String);

impl FromStr for MetricId {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> std::result::Result<Self, UnknownMetric> {
        match s {
            "recall" => Ok(MetricId::Recall),
            "precision" => Ok(MetricId::Precision),
            "fpr" => Ok(MetricId::Fpr),
            other => Err(UnknownMetric(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtLeast,
    AtMost,
}

impl Relation {
    fn token(self) -> &'static str {
        match self {
            Relation::AtLeast => ">=",
            Relation::AtMost => "<=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub metric: MetricId,
    pub relation: Relation,
    pub bound: f64,
}

impl Constraint {
    pub fn new(metric: MetricId, relation: Relation, bound: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&bound) {
            return Err(Error::TargetOutOfRange(bound));
        }
        Ok(Self {
            metric,
            relation,
            bound,
        })
    }

    pub fn at_least(metric: MetricId, bound: f64) -> Result<Self> {
        Self::new(metric, Relation::AtLeast, bound)
    }

    pub fn at_most(metric: MetricId, bound: f64) -> Result<Self> {
        Self::new(metric, Relation::AtMost, bound)
    }

    pub fn is_satisfied_by(&self, point: &OperatingPoint) -> bool {
        match point.metrics.get(self.metric) {
            Some(v) => match self.relation {
                Relation::AtLeast => v >= self.bound,
                Relation::AtMost => v <= self.bound,
            },
            None => false,
        }
    }

    /// Distance by which `point` misses the bound; 0 when satisfied, 1 when
    /// the metric is undefined.
    fn shortfall(&self, point: &OperatingPoint) -> f64 {
        match point.metrics.get(self.metric) {
            Some(v) => match self.relation {
                Relation::AtLeast => (self.bound - v).max(0.0),
                Relation::AtMost => (v - self.bound).max(0.0),
            },
            None => 1.0,
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.metric, self.relation.token(), self.bound)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed constraint {input:?}: {reason}")]
pub struct ConstraintParseError {
    pub input: String,
    pub reason: String,
}

/// Parses `<metric>>=<bound>` or `<metric><=<bound>`, e.g. `precision>=0.9`.
impl FromStr for Constraint {
    type Err = ConstraintParseError;

    fn from_str(s: &str) -> std::result::Result<Self, ConstraintParseError> {
        let fail = |reason: &str| ConstraintParseError {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let (name, relation, rest) = if let Some((l, r)) = s.split_once(">=") {
            (l, Relation::AtLeast, r)
        } else if let Some((l, r)) = s.split_once("<=") {
            (l, Relation::AtMost, r)
        } else {
            return Err(fail("expected an operator >= or <="));
        };
        let metric: MetricId = name
            .trim()
            .parse()
            .map_err(|e: UnknownMetric| fail(&e.to_string()))?;
        let bound: f64 = rest
            .trim()
            .parse()
            .map_err(|_| fail("bound is not a number"))?;
        Constraint::new(metric, relation, bound).map_err(|e| fail(&e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub point: OperatingPoint,
    pub objective_value: f64,
}

fn check_target(target: f64) -> Result<()> {
    if (0.0..=1.0).contains(&target) {
        Ok(())
    } else {
        Err(Error::TargetOutOfRange(target))
    }
}

/// Largest candidate threshold whose recall is at least `target`.
///
/// Recall is non-increasing along the curve and `recall(0) = 1`, so the
/// answer always exists when the dataset has a damaging example.
pub fn threshold_for_recall(curve: &ThresholdCurve, target: f64) -> Result<QueryResult> {
    check_target(target)?;
    if curve.dataset().n_damaging() == 0 {
        return Err(Error::RecallUndefined);
    }
    let points = curve.points();
    let n_ok = points.partition_point(|p| p.metrics.recall.is_some_and(|r| r >= target));
    let point = points[n_ok - 1];
    Ok(QueryResult {
        point,
        objective_value: point.metrics.recall.unwrap_or_default(),
    })
}

/// Smallest candidate threshold whose FPR is at most `max_fpr`.
pub fn threshold_for_fpr(curve: &ThresholdCurve, max_fpr: f64) -> Result<QueryResult> {
    check_target(max_fpr)?;
    if curve.dataset().n_good() == 0 {
        return Err(Error::FprUndefined);
    }
    let points = curve.points();
    let idx = points.partition_point(|p| p.metrics.fpr.is_some_and(|f| f > max_fpr));
    let point = points[idx];
    Ok(QueryResult {
        point,
        objective_value: point.metrics.fpr.unwrap_or_default(),
    })
}

/// Maximize `objective` over all candidates satisfying every constraint.
///
/// Among equal objective values the largest threshold wins (fewest edits
/// flagged).
pub fn optimize(
    curve: &ThresholdCurve,
    objective: MetricId,
    constraints: &[Constraint],
) -> Result<QueryResult> {
    match objective {
        MetricId::Fpr => return Err(Error::UnsupportedObjective(objective)),
        MetricId::Recall if curve.dataset().n_damaging() == 0 => {
            return Err(Error::RecallUndefined)
        }
        _ => {}
    }
    for c in constraints {
        check_target(c.bound)?;
    }

    let mut best: Option<QueryResult> = None;
    for point in curve.points() {
        let Some(value) = point.metrics.get(objective) else {
            continue;
        };
        if !constraints.iter().all(|c| c.is_satisfied_by(point)) {
            continue;
        }
        // Points ascend by threshold, so `>=` keeps the largest among ties.
        if best.is_none_or(|b| value >= b.objective_value) {
            best = Some(QueryResult {
                point: *point,
                objective_value: value,
            });
        }
    }
    best.ok_or_else(|| infeasible(curve, objective, constraints))
}

fn infeasible(curve: &ThresholdCurve, objective: MetricId, constraints: &[Constraint]) -> Error {
    let mut best: Option<(usize, f64, &OperatingPoint)> = None;
    for point in curve.points() {
        let violated = constraints
            .iter()
            .filter(|c| !c.is_satisfied_by(point))
            .count();
        let shortfall: f64 = constraints.iter().map(|c| c.shortfall(point)).sum();
        let closer = match best {
            None => true,
            Some((v, s, _)) => violated < v || (violated == v && shortfall <= s),
        };
        if closer {
            best = Some((violated, shortfall, point));
        }
    }
    // Curves are never empty.
    let near_miss = *best.expect("non-empty curve").2;
    let violated = constraints
        .iter()
        .find(|c| !c.is_satisfied_by(&near_miss))
        .copied();
    Error::Infeasible(Box::new(Infeasible {
        objective,
        near_miss,
        violated,
    }))
}

/// Threshold achieving a target value of `metric`.
///
/// Recall and FPR are monotone and invert directly. Precision is not, so a
/// precision target resolves to the best recall with `precision >= target`.
pub fn inverse_for_metric(
    curve: &ThresholdCurve,
    metric: MetricId,
    target: f64,
) -> Result<QueryResult> {
    match metric {
        MetricId::Recall => threshold_for_recall(curve, target),
        MetricId::Fpr => threshold_for_fpr(curve, target),
        MetricId::Precision => optimize(
            curve,
            MetricId::Recall,
            &[Constraint::at_least(MetricId::Precision, target)?],
        ),
    }
}
