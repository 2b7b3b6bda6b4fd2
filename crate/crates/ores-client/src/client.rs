use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;
use std::time::Duration;

use futures::future::join_all;
use serde_json::{Map, Value};

use crate::response::parse_scores;
use crate::{ClientError, ClientErrorKind, InvalidRequest, ScoreOutcome, ScoreRequest};

/// Maximum revision ids per HTTP call.
pub const BATCH_SIZE: usize = 50;

const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);
const DEFAULT_RETRY_DELAY: Duration = Duration::from_secs(1);
const USER_AGENT: &str = concat!(
    "tradeoff-ores/",
    env!("CARGO_PKG_VERSION"),
    " (threshold exploration tool)"
);

/// Where scores come from.
#[derive(Debug, Clone)]
pub enum Source {
    Http(reqwest::Client),
    /// Recorded response bodies; no network access.
    Fixtures(FixtureStore),
}

#[derive(Debug, Clone)]
pub struct OresClient {
    source: Source,
    retry_delay: Duration,
}

impl OresClient {
    pub fn http() -> reqwest::Result<Self> {
        Self::http_with_timeout(DEFAULT_TIMEOUT)
    }

    pub fn http_with_timeout(timeout: Duration) -> reqwest::Result<Self> {
        let client = reqwest::Client::builder()
            .user_agent(USER_AGENT)
            .timeout(timeout)
            .build()?;
        Ok(Self {
            source: Source::Http(client),
            retry_delay: DEFAULT_RETRY_DELAY,
        })
    }

    pub fn offline(store: FixtureStore) -> Self {
        Self {
            source: Source::Fixtures(store),
            retry_delay: DEFAULT_RETRY_DELAY,
        }
    }

    /// Delay before the single retry of a failed batch.
    pub fn with_retry_delay(mut self, delay: Duration) -> Self {
        self.retry_delay = delay;
        self
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    /// Score every requested revision. The result has exactly one entry per
    /// distinct requested id; batches run concurrently.
    pub async fn fetch_scores(
        &self,
        request: &ScoreRequest,
    ) -> Result<BTreeMap<u64, ScoreOutcome>, InvalidRequest> {
        request.validate()?;
        let endpoint = match &self.source {
            Source::Http(_) => Some(endpoint(request)?),
            Source::Fixtures(_) => None,
        };

        let mut ids = request.rev_ids.clone();
        ids.sort_unstable();
        ids.dedup();

        let batches = ids
            .chunks(BATCH_SIZE)
            .map(|batch| self.fetch_batch(request, endpoint.as_ref(), batch));
        Ok(join_all(batches).await.into_iter().flatten().collect())
    }

    async fn fetch_batch(
        &self,
        request: &ScoreRequest,
        endpoint: Option<&reqwest::Url>,
        batch: &[u64],
    ) -> BTreeMap<u64, ScoreOutcome> {
        let body = match &self.source {
            Source::Fixtures(store) => Ok(store.body_for(&request.context, &request.model, batch)),
            Source::Http(client) => {
                let url = endpoint.expect("validated for http sources");
                match get(client, url, &request.model, batch).await {
                    Ok(body) => Ok(body),
                    Err(_) => {
                        tokio::time::sleep(self.retry_delay).await;
                        get(client, url, &request.model, batch).await
                    }
                }
            }
        };
        match body {
            Ok(body) => parse_scores(&body, &request.context, &request.model, batch),
            Err(e) => batch
                .iter()
                .map(|&id| {
                    (
                        id,
                        Err(ClientError::new(e.kind, Some(id), e.detail.clone())),
                    )
                })
                .collect(),
        }
    }
}

fn endpoint(request: &ScoreRequest) -> Result<reqwest::Url, InvalidRequest> {
    let url = format!(
        "{}/v3/scores/{}/",
        request.base_url.trim_end_matches('/'),
        request.context
    );
    reqwest::Url::parse(&url).map_err(|e| InvalidRequest(format!("bad base url: {e}")))
}

async fn get(
    client: &reqwest::Client,
    url: &reqwest::Url,
    model: &str,
    batch: &[u64],
) -> Result<String, ClientError> {
    let revids = batch
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join("|");
    let transport =
        |e: reqwest::Error| ClientError::new(ClientErrorKind::Transport, None, e.to_string());
    let mut url = url.clone();
    url.query_pairs_mut()
        .append_pair("models", model)
        .append_pair("revids", &revids);
    let resp = client.get(url).send().await.map_err(transport)?;
    let status = resp.status();
    if !status.is_success() {
        return Err(ClientError::new(
            ClientErrorKind::HttpStatus,
            None,
            format!("service answered {status}"),
        ));
    }
    resp.text().await.map_err(transport)
}

/// Recorded scoring responses, keyed by context and revision id.
///
/// Each `*.json` file in the fixture directory is a full v3 scores body;
/// files are merged, later files (by name) overriding earlier ones.
#[derive(Debug, Clone, Default)]
pub struct FixtureStore {
    scores: BTreeMap<String, Map<String, Value>>,
}

impl FixtureStore {
    pub fn load(dir: impl AsRef<Path>) -> io::Result<Self> {
        let mut files: Vec<_> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let mut store = Self::default();
        for path in files {
            let text = fs::read_to_string(&path)?;
            store.add_body(&text).map_err(|e| {
                io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("{}: {e}", path.display()),
                )
            })?;
        }
        Ok(store)
    }

    pub fn add_body(&mut self, body: &str) -> Result<(), serde_json::Error> {
        let doc: Map<String, Value> = serde_json::from_str(body)?;
        for (context, wiki) in doc {
            if let Some(Value::Object(scores)) = wiki.get("scores") {
                let entry = self.scores.entry(context).or_default();
                for (rev, models) in scores {
                    entry.insert(rev.clone(), models.clone());
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.scores.values().map(Map::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The response body the live service would have returned for `batch`,
    /// restricted to the recorded revisions.
    pub fn body_for(&self, context: &str, model: &str, batch: &[u64]) -> String {
        let mut scores = Map::new();
        if let Some(recorded) = self.scores.get(context) {
            for id in batch {
                let key = id.to_string();
                if let Some(entry) = recorded.get(&key).and_then(|m| m.get(model)) {
                    let mut models = Map::new();
                    models.insert(model.to_string(), entry.clone());
                    scores.insert(key, Value::Object(models));
                }
            }
        }
        serde_json::json!({ context: { "scores": scores } }).to_string()
    }
}
