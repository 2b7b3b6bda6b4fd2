//! Operating-point engine for binary classifiers.
//!
//! Everything here is computed over a [`Dataset`] of scored, labeled
//! examples where `damaging` is the positive class. A [`ThresholdCurve`]
//! holds the exact step function of confusion counts over every threshold
//! at which the flagged set can change; the [`query`] module answers
//! inverse and constrained questions against it, and [`preview`] turns a
//! confusion matrix into a fixed-size icon grid.

pub mod curve;
pub mod dataset;
mod error;
pub mod ingest;
pub mod metrics;
pub mod preview;
pub mod query;

pub use curve::{build_curve, ThresholdCurve};
pub use dataset::{Dataset, Label, ScoredExample};
pub use error::{Error, Infeasible, Result};
pub use ingest::{IngestError, IngestErrorKind, SynthConfig};
pub use metrics::{
    classify, confusion_at, metrics_from, ConfusionCounts, MetricSet, OperatingPoint, Threshold,
};
pub use preview::{
    allocate_icons, legend, Color, LegendEntry, PreviewCategory, PreviewGrid, Shape,
};
pub use query::{
    inverse_for_metric, optimize, threshold_for_fpr, threshold_for_recall, Constraint, MetricId,
    QueryResult, Relation,
};
