//! Client for ORES-compatible scoring services.
//!
//! Revision ids are sent in batches of at most [`BATCH_SIZE`] per
//! `GET {base}/v3/scores/{context}/?models={model}&revids=a|b|c` call.
//! Every requested revision resolves on its own: a missing revision or a
//! failed batch never affects revisions outside it.

mod client;
mod join;
mod response;

pub use client::{FixtureStore, OresClient, Source, BATCH_SIZE};
pub use join::{build_dataset, JoinError, Joined};
pub use response::parse_scores;

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreRequest {
    pub base_url: String,
    /// Wiki database name, e.g. `enwiki`.
    pub context: String,
    pub model: String,
    pub rev_ids: Vec<u64>,
}

impl ScoreRequest {
    pub fn new(
        base_url: impl Into<String>,
        context: impl Into<String>,
        model: impl Into<String>,
        rev_ids: Vec<u64>,
    ) -> Self {
        Self {
            base_url: base_url.into(),
            context: context.into(),
            model: model.into(),
            rev_ids,
        }
    }

    pub fn validate(&self) -> Result<(), InvalidRequest> {
        if self.rev_ids.is_empty() {
            return Err(InvalidRequest("no revision ids".into()));
        }
        if self.rev_ids.contains(&0) {
            return Err(InvalidRequest("revision ids must be positive".into()));
        }
        if self.context.is_empty() {
            return Err(InvalidRequest("context is empty".into()));
        }
        if self.model.is_empty() {
            return Err(InvalidRequest("model is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid score request: {0}")]
pub struct InvalidRequest(pub String);

/// One revision's score as reported by the service.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevisionScore {
    pub rev_id: u64,
    /// The service's own thresholded call; kept for reference only.
    pub prediction: bool,
    /// Probability the revision is damaging.
    pub p_true: f64,
    pub p_false: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClientErrorKind {
    Transport,
    HttpStatus,
    MalformedBody,
    RevisionError,
}

impl fmt::Display for ClientErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClientErrorKind::Transport => "transport",
            ClientErrorKind::HttpStatus => "http_status",
            ClientErrorKind::MalformedBody => "malformed_body",
            ClientErrorKind::RevisionError => "revision_error",
        })
    }
}

/// Per-revision failure. `rev_id` is always set for `RevisionError`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind}: {detail}")]
pub struct ClientError {
    pub kind: ClientErrorKind,
    pub rev_id: Option<u64>,
    pub detail: String,
}

impl ClientError {
    pub fn new(kind: ClientErrorKind, rev_id: Option<u64>, detail: impl Into<String>) -> Self {
        Self {
            kind,
            rev_id,
            detail: detail.into(),
        }
    }

    pub fn revision(rev_id: u64, detail: impl Into<String>) -> Self {
        Self::new(ClientErrorKind::RevisionError, Some(rev_id), detail)
    }
}

pub type ScoreOutcome = Result<RevisionScore, ClientError>;
