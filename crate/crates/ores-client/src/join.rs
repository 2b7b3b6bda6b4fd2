use std::collections::BTreeMap;

use thiserror::Error;
use tradeoff_core::{Dataset, Label, ScoredExample};

use crate::RevisionScore;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JoinError {
    #[error("no revision has both a score and a label")]
    EmptyIntersection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joined {
    pub dataset: Dataset,
    /// Revisions present in only one of the two inputs, ascending.
    pub skipped: Vec<u64>,
}

/// Join service scores with human labels. The example score is `p_true`.
pub fn build_dataset(
    scores: &BTreeMap<u64, RevisionScore>,
    labels: &BTreeMap<u64, Label>,
) -> Result<Joined, JoinError> {
    let examples: Vec<ScoredExample> = scores
        .iter()
        .filter_map(|(id, s)| {
            labels
                .get(id)
                .map(|&label| ScoredExample::new(id.to_string(), s.p_true, label))
        })
        .collect();
    if examples.is_empty() {
        return Err(JoinError::EmptyIntersection);
    }
    let mut skipped: Vec<u64> = scores
        .keys()
        .filter(|id| !labels.contains_key(id))
        .chain(labels.keys().filter(|id| !scores.contains_key(id)))
        .copied()
        .collect();
    skipped.sort_unstable();

    let dataset = Dataset::new(examples).expect("service probabilities are validated in [0, 1]");
    Ok(Joined { dataset, skipped })
}
