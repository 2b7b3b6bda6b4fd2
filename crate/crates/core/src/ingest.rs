//! Dataset loading (CSV and JSONL), synthetic generation, and the
//! calibrated reference fixture.
//!
//! CSV: header `id,score,label`, no quoting, LF or CRLF.
//! JSONL: one `{"id": .., "score": .., "label": ..}` object per line;
//! unknown fields are ignored.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, Label, ScoredExample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IngestErrorKind {
    BadScoreRange,
    BadLabel,
    MalformedRow,
    EmptyInput,
    DuplicateId,
}

impl IngestErrorKind {
    pub fn code(self) -> &'static str {
        match self {
            IngestErrorKind::BadScoreRange => "bad_score_range",
            IngestErrorKind::BadLabel => "bad_label",
            IngestErrorKind::MalformedRow => "malformed_row",
            IngestErrorKind::EmptyInput => "empty_input",
            IngestErrorKind::DuplicateId => "duplicate_id",
        }
    }
}

impl fmt::Display for IngestErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// First validation failure in an input. `line` is 1-based and present for
/// every row-level error.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{}", match .line { Some(l) => format!("line {l}: {kind}: {detail}"), None => format!("{kind}: {detail}") })]
pub struct IngestError {
    pub kind: IngestErrorKind,
    pub line: Option<u64>,
    pub detail: String,
}

impl IngestError {
    fn at(kind: IngestErrorKind, line: u64, detail: impl Into<String>) -> Self {
        Self {
            kind,
            line: Some(line),
            detail: detail.into(),
        }
    }

    fn empty() -> Self {
        Self {
            kind: IngestErrorKind::EmptyInput,
            line: None,
            detail: "no data rows".to_string(),
        }
    }
}

/// Shared row validation for both formats.
struct RowSink {
    examples: Vec<ScoredExample>,
    seen: HashSet<String>,
}

impl RowSink {
    fn new() -> Self {
        Self {
            examples: Vec::new(),
            seen: HashSet::new(),
        }
    }

    fn push(
        &mut self,
        line: u64,
        id: Option<String>,
        score: f64,
        label: &str,
    ) -> std::result::Result<(), IngestError> {
        if !(0.0..=1.0).contains(&score) {
            return Err(IngestError::at(
                IngestErrorKind::BadScoreRange,
                line,
                format!("score {score} is outside [0, 1]"),
            ));
        }
        let label: Label = label.parse().map_err(|_| {
            IngestError::at(
                IngestErrorKind::BadLabel,
                line,
                format!("label {label:?} is not \"good\" or \"damaging\""),
            )
        })?;
        if let Some(id) = &id {
            if !self.seen.insert(id.clone()) {
                return Err(IngestError::at(
                    IngestErrorKind::DuplicateId,
                    line,
                    format!("id {id:?} appears more than once"),
                ));
            }
        }
        self.examples.push(ScoredExample { id, score, label });
        Ok(())
    }

    fn finish(self) -> std::result::Result<Dataset, IngestError> {
        if self.examples.is_empty() {
            return Err(IngestError::empty());
        }
        Ok(Dataset::new(self.examples).expect("scores validated per row"))
    }
}

const CSV_HEADER: [&str; 3] = ["id", "score", "label"];

pub fn parse_csv<R: Read>(input: R) -> std::result::Result<Dataset, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .quoting(false)
        .from_reader(input);

    let mut records = reader.records();
    let mut sink = RowSink::new();

    match records.next() {
        None => return Err(IngestError::empty()),
        Some(Err(e)) => return Err(csv_error(e)),
        Some(Ok(header)) => {
            let line = header.position().map_or(1, |p| p.line());
            let fields: Vec<&str> = header
                .iter()
                .map(|f| f.trim_start_matches('\u{feff}'))
                .collect();
            if fields != CSV_HEADER {
                return Err(IngestError::at(
                    IngestErrorKind::MalformedRow,
                    line,
                    format!(
                        "expected header \"id,score,label\", found {:?}",
                        fields.join(",")
                    ),
                ));
            }
        }
    }

    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(IngestError::at(
                IngestErrorKind::MalformedRow,
                line,
                format!("expected 3 fields, found {}", record.len()),
            ));
        }
        let score: f64 = record[1].trim().parse().map_err(|_| {
            IngestError::at(
                IngestErrorKind::MalformedRow,
                line,
                format!("score {:?} is not a number", &record[1]),
            )
        })?;
        let id = Some(record[0].to_string()).filter(|s| !s.is_empty());
        sink.push(line, id, score, &record[2])?;
    }
    sink.finish()
}

fn csv_error(e: csv::Error) -> IngestError {
    let line = e.position().map_or(1, |p| p.line());
    IngestError::at(IngestErrorKind::MalformedRow, line, e.to_string())
}

#[derive(Deserialize)]
struct JsonRow {
    id: String,
    score: f64,
    label: String,
}

pub fn parse_jsonl<R: Read>(mut input: R) -> std::result::Result<Dataset, IngestError> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| IngestError::at(IngestErrorKind::MalformedRow, 1, e.to_string()))?;
    parse_jsonl_str(&text)
}

fn parse_jsonl_str(text: &str) -> std::result::Result<Dataset, IngestError> {
    let mut sink = RowSink::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx as u64 + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let row: JsonRow = serde_json::from_str(raw)
            .map_err(|e| IngestError::at(IngestErrorKind::MalformedRow, line, e.to_string()))?;
        sink.push(line, Some(row.id), row.score, &row.label)?;
    }
    sink.finish()
}

/// Parse either format, choosing JSONL when the first non-blank character
/// is `{`.
pub fn parse_auto(text: &str) -> std::result::Result<Dataset, IngestError> {
    if text.trim_start().starts_with('{') {
        parse_jsonl_str(text)
    } else {
        parse_csv(text.as_bytes())
    }
}

/// Write the CSV format read by [`parse_csv`]. Scores use the shortest
/// representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(dataset: &Dataset, mut out: W) -> io::Result<()> {
    writeln!(out, "id,score,label")?;
    for ex in dataset.examples() {
        writeln!(
            out,
            "{},{},{}",
            ex.id.as_deref().unwrap_or(""),
            ex.score,
            ex.label
        )?;
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_total: usize,
    /// Fraction of damaging examples.
    pub prevalence: f64,
    /// Beta parameters for good-edit scores.
    pub good_score_shape: (f64, f64),
    /// Beta parameters for damaging-edit scores.
    pub damaging_score_shape: (f64, f64),
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(n_total: usize, prevalence: f64, seed: u64) -> Self {
        Self {
            n_total,
            prevalence,
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_total == 0 {
            return Err(Error::InvalidConfig("n_total must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.prevalence) {
            return Err(Error::InvalidConfig(format!(
                "prevalence {} is outside [0, 1]",
                self.prevalence
            )));
        }
        let (ga, gb) = self.good_score_shape;
        let (da, db) = self.damaging_score_shape;
        if [ga, gb, da, db]
            .iter()
            .any(|&p| !(p > 0.0 && p.is_finite()))
        {
            return Err(Error::InvalidConfig(
                "Beta shape parameters must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_total: 1000,
            prevalence: 0.05,
            good_score_shape: (1.0, 8.0),
            damaging_score_shape: (6.0, 2.0),
            seed: 0,
        }
    }
}

/// Seeded synthetic dataset; the same config always yields the same
/// dataset.
pub fn synthesize(config: &SynthConfig) -> Result<Dataset> {
    config.validate()?;
    let n_damaging = (config.prevalence * config.n_total as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let beta =
        |(a, b): (f64, f64)| Beta::new(a, b).map_err(|e| Error::InvalidConfig(e.to_string()));
    let good = beta(config.good_score_shape)?;
    let damaging = beta(config.damaging_score_shape)?;

    let mut labels: Vec<Label> = std::iter::repeat_n(Label::Damaging, n_damaging)
        .chain(std::iter::repeat_n(
            Label::Good,
            config.n_total - n_damaging,
        ))
        .collect();
    labels.shuffle(&mut rng);

    let examples = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let dist = match label {
                Label::Damaging => &damaging,
                Label::Good => &good,
            };
            let score: f64 = dist.sample(&mut rng);
            ScoredExample::new(format!("synth-{:04}", i + 1), score.clamp(0.0, 1.0), label)
        })
        .collect();
    Dataset::new(examples)
}

/// `n` evenly spaced values from `lo` to `hi`, both endpoints exact.
fn even_band(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            return lo;
        }
        let f = i as f64 / (n - 1) as f64;
        lo * (1.0 - f) + hi * f
    })
}

/// The N=1000 reference fixture. At threshold 0.4 it splits exactly into
/// tp=20, fp=60, tn=910, fn=10: 8% flagged (6% wrongly, 2% correctly) and
/// 91% correctly passed as good.
pub fn fixture_t04() -> Dataset {
    let bands = [
        (Label::Good, 0.01, 0.39, 910),
        (Label::Good, 0.40, 0.80, 60),
        (Label::Damaging, 0.40, 0.95, 20),
        (Label::Damaging, 0.05, 0.39, 10),
    ];
    let examples = bands
        .iter()
        .flat_map(|&(label, lo, hi, n)| even_band(lo, hi, n).map(move |s| (label, s)))
        .enumerate()
        .map(|(i, (label, score))| ScoredExample::new(format!("f1-{:04}", i + 1), score, label))
        .collect();
    Dataset::new(examples).expect("fixture scores are in range")
}
