use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// True state of an edit. `Damaging` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Good,
    Damaging,
}

impl Label {
    pub fn is_damaging(self) -> bool {
        self == Label::Damaging
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Good => "good",
            Label::Damaging => "damaging",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Exact, case-sensitive token match.
impl FromStr for Label {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "good" => Ok(Label::Good),
            "damaging" => Ok(Label::Damaging),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredExample {
    pub id: Option<String>,
    /// Model probability that the example is damaging.
    pub score: f64,
    pub label: Label,
}

impl ScoredExample {
    pub fn new(id: impl Into<Option<String>>, score: f64, label: Label) -> Self {
        Self {
            id: id.into(),
            score,
            label,
        }
    }
}

pub(crate) fn check_score(score: f64) -> Result<()> {
    if (0.0..=1.0).contains(&score) {
        Ok(())
    } else {
        Err(Error::ScoreOutOfRange(score))
    }
}

/// Immutable labeled evaluation corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    examples: Vec<ScoredExample>,
    n_damaging: usize,
}

impl Dataset {
    /// Every score must lie in `[0, 1]` (NaN is rejected).
    pub fn new(examples: Vec<ScoredExample>) -> Result<Self> {
        for ex in &examples {
            check_score(ex.score)?;
        }
        let n_damaging = examples.iter().filter(|e| e.label.is_damaging()).count();
        Ok(Self {
            examples,
            n_damaging,
        })
    }

    /// Convenience constructor for id-less `(score, label)` pairs.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, Label)>,
    {
        Self::new(
            pairs
                .into_iter()
                .map(|(score, label)| ScoredExample::new(None, score, label))
                .collect(),
        )
    }

    pub fn examples(&self) -> &[ScoredExample] {
        &self.examples
    }

    pub fn n_total(&self) -> usize {
        self.examples.len()
    }

    pub fn n_damaging(&self) -> usize {
        self.n_damaging
    }

    pub fn n_good(&self) -> usize {
        self.examples.len() - self.n_damaging
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_partition_total() {
        let d = Dataset::from_pairs([
            (0.9, Label::Damaging),
            (0.8, Label::Good),
            (0.3, Label::Damaging),
            (0.1, Label::Good),
            (0.2, Label::Good),
        ])
        .unwrap();
        assert_eq!(d.n_total(), 5);
        assert_eq!(d.n_damaging(), 2);
        assert_eq!(d.n_good(), 3);
    }

    #[test]
    fn rejects_out_of_range_and_nan() {
        assert_eq!(
            Dataset::from_pairs([(1.5, Label::Good)]),
            Err(Error::ScoreOutOfRange(1.5))
        );
        assert!(Dataset::from_pairs([(f64::NAN, Label::Good)]).is_err());
        assert!(Dataset::from_pairs([(-0.0, Label::Good), (1.0, Label::Damaging)]).is_ok());
    }

    #[test]
    fn label_tokens_are_case_sensitive() {
        assert_eq!("good".parse::<Label>(), Ok(Label::Good));
        assert_eq!("damaging".parse::<Label>(), Ok(Label::Damaging));
        assert!("Good".parse::<Label>().is_err());
        assert!("vandal".parse::<Label>().is_err());
    }
}
