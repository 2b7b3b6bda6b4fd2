use std::fmt;

use thiserror::Error;

use crate::metrics::OperatingPoint;
use crate::query::{Constraint, MetricId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("score {0} is outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("threshold {0} is outside [0, 1]")]
    ThresholdOutOfRange(f64),
    #[error("target {0} is outside [0, 1]")]
    TargetOutOfRange(f64),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("recall undefined: the dataset has no damaging examples")]
    RecallUndefined,
    #[error("false-positive rate undefined: the dataset has no good examples")]
    FprUndefined,
    #[error("{0} cannot be maximized; choose recall or precision")]
    UnsupportedObjective(MetricId),
    #[error("confusion counts are all zero")]
    EmptyCounts,
    #[error("icon count must be at least 1")]
    NoIcons,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("infeasible: {0}")]
    Infeasible(Box<Infeasible>),
}

/// No candidate threshold satisfies every constraint of an optimize query.
///
/// `near_miss` is the candidate that violates the fewest constraints (then
/// the smallest total shortfall, then the largest threshold). `violated` is
/// the first constraint, in query order, that fails there; it is `None`
/// only when all constraints hold but the objective is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct Infeasible {
    pub objective: MetricId,
    pub near_miss: OperatingPoint,
    pub violated: Option<Constraint>,
}

impl fmt::Display for Infeasible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = &self.near_miss;
        match &self.violated {
            Some(c) => {
                let actual = match at.metrics.get(c.metric) {
                    Some(v) => format!("{v}"),
                    None => "undefined".to_string(),
                };
                write!(
                    f,
                    "no threshold satisfies all constraints; closest candidate {} violates {} ({} is {})",
                    at.threshold, c, c.metric, actual
                )
            }
            None => write!(
                f,
                "no threshold satisfying the constraints has a defined {}; closest candidate {}",
                self.objective, at.threshold
            ),
        }
    }
}
