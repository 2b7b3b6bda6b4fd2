//! HTTP/JSON front end for the threshold engine.
//!
//! Uploaded datasets are stored immutably with their threshold curve built
//! at upload time; every other route is a read against that curve.
//! Undefined metrics and the above-max threshold serialize as `null`.

mod error;
mod store;

use std::net::SocketAddr;
use std::path::PathBuf;

use axum::body::Bytes;
use axum::extract::{Path, RawQuery, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Serialize;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;
use tradeoff_core::ingest::{parse_auto, parse_csv, parse_jsonl};
use tradeoff_core::{
    allocate_icons, inverse_for_metric, legend, optimize, ConfusionCounts, Constraint, Dataset,
    IngestError, LegendEntry, MetricId, MetricSet, OperatingPoint, PreviewCategory, QueryResult,
    Threshold,
};

pub use error::ApiError;
pub use store::{DatasetHandle, Store, StoredDataset};

pub const DEFAULT_ADDR: &str = "127.0.0.1:8808";
pub const DEFAULT_ICONS: u64 = 100;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub addr: SocketAddr,
    /// Built UI bundle served at `/`.
    pub ui_dir: Option<PathBuf>,
    /// Allowed CORS origin; any origin when unset.
    pub cors_origin: Option<String>,
    /// Restored at startup and written on shutdown.
    pub snapshot: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            addr: DEFAULT_ADDR.parse().expect("valid default address"),
            ui_dir: None,
            cors_origin: None,
            snapshot: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AppState {
    pub store: Store,
}

type ApiResult<T> = Result<T, ApiError>;

struct RouteDoc {
    method: &'static str,
    path: &'static str,
    params: &'static [&'static str],
}

const ROUTES: &[RouteDoc] = &[
    RouteDoc {
        method: "GET",
        path: "/api/routes",
        params: &[],
    },
    RouteDoc {
        method: "GET",
        path: "/api/datasets",
        params: &[],
    },
    RouteDoc {
        method: "POST",
        path: "/api/datasets",
        params: &["name", "format=csv|jsonl"],
    },
    RouteDoc {
        method: "GET",
        path: "/api/datasets/{id}",
        params: &[],
    },
    RouteDoc {
        method: "GET",
        path: "/api/datasets/{id}/metrics",
        params: &["threshold"],
    },
    RouteDoc {
        method: "GET",
        path: "/api/datasets/{id}/curve",
        params: &[],
    },
    RouteDoc {
        method: "GET",
        path: "/api/datasets/{id}/inverse",
        params: &["metric", "target"],
    },
    RouteDoc {
        method: "GET",
        path: "/api/datasets/{id}/optimize",
        params: &["maximize", "constraint (repeatable, e.g. precision>=0.9)"],
    },
    RouteDoc {
        method: "GET",
        path: "/api/datasets/{id}/preview",
        params: &["threshold", "icons"],
    },
];

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/routes", get(list_routes))
        .route("/api/datasets", get(list_datasets).post(create_dataset))
        .route("/api/datasets/{id}", get(get_dataset))
        .route("/api/datasets/{id}/metrics", get(metrics))
        .route("/api/datasets/{id}/curve", get(curve))
        .route("/api/datasets/{id}/inverse", get(inverse))
        .route("/api/datasets/{id}/optimize", get(optimize_route))
        .route("/api/datasets/{id}/preview", get(preview))
        .with_state(state)
}

/// Full application: API routes, CORS, and the static UI bundle.
pub fn app(state: AppState, config: &ServiceConfig) -> Router {
    let cors = match config
        .cors_origin
        .as_deref()
        .and_then(|o| HeaderValue::from_str(o).ok())
    {
        Some(origin) => CorsLayer::new().allow_origin(AllowOrigin::exact(origin)),
        None => CorsLayer::new().allow_origin(AllowOrigin::any()),
    }
    .allow_methods([axum::http::Method::GET, axum::http::Method::POST])
    .allow_headers([header::CONTENT_TYPE]);

    let api = router(state);
    let app = match &config.ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.layer(cors)
}

/// Bind, serve until Ctrl-C, then write the snapshot if configured.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let state = AppState::default();
    if let Some(path) = config.snapshot.as_deref().filter(|p| p.exists()) {
        let n = state.store.load_snapshot(path)?;
        tracing::info!(datasets = n, path = %path.display(), "restored snapshot");
    }
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, app(state.clone(), &config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    if let Some(path) = &config.snapshot {
        state.store.save_snapshot(path)?;
        tracing::info!(datasets = state.store.len(), path = %path.display(), "wrote snapshot");
    }
    Ok(())
}

// ---- query-string helpers ----

struct Params(Vec<(String, String)>);

impl Params {
    fn parse(raw: Option<String>) -> Self {
        Self(
            form_urlencoded::parse(raw.unwrap_or_default().as_bytes())
                .into_owned()
                .collect(),
        )
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.0
            .iter()
            .filter(move |(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn unit(&self, key: &str, code: &str) -> ApiResult<f64> {
        let raw = self
            .get(key)
            .ok_or_else(|| ApiError::bad_request(code, format!("missing query parameter {key}")))?;
        match raw.trim().parse::<f64>() {
            Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
            _ => Err(ApiError::bad_request(
                code,
                format!("{key} must be a number in [0, 1], got {raw:?}"),
            )),
        }
    }

    fn metric(&self, key: &str) -> ApiResult<MetricId> {
        let raw = self.get(key).ok_or_else(|| {
            ApiError::bad_request("bad_metric", format!("missing query parameter {key}"))
        })?;
        raw.parse()
            .map_err(|e: tradeoff_core::query::UnknownMetric| {
                ApiError::bad_request("bad_metric", e.to_string())
            })
    }
}

fn lookup(state: &AppState, id: &str) -> ApiResult<std::sync::Arc<StoredDataset>> {
    state.store.get(id).ok_or_else(|| ApiError::not_found(id))
}

// ---- response documents ----

#[derive(Serialize)]
struct RouteEntry {
    method: &'static str,
    path: &'static str,
    params: &'static [&'static str],
}

#[derive(Serialize)]
struct CurveDoc<'a> {
    dataset_id: &'a str,
    points: &'a [OperatingPoint],
}

#[derive(Serialize)]
struct QueryDoc {
    threshold: Threshold,
    counts: ConfusionCounts,
    metrics: MetricSet,
    objective: MetricId,
    objective_value: f64,
}

impl QueryDoc {
    fn new(objective: MetricId, r: QueryResult) -> Self {
        Self {
            threshold: r.point.threshold,
            counts: r.point.counts,
            metrics: r.point.metrics,
            objective,
            objective_value: r.objective_value,
        }
    }
}

#[derive(Serialize)]
struct PreviewDoc {
    threshold: f64,
    n_icons: u64,
    allocation: std::collections::BTreeMap<PreviewCategory, u64>,
    fractions: std::collections::BTreeMap<PreviewCategory, f64>,
    legend: [LegendEntry; 4],
}

// ---- handlers ----

async fn list_routes() -> Json<Vec<RouteEntry>> {
    Json(
        ROUTES
            .iter()
            .map(|r| RouteEntry {
                method: r.method,
                path: r.path,
                params: r.params,
            })
            .collect(),
    )
}

async fn list_datasets(State(state): State<AppState>) -> Json<Vec<DatasetHandle>> {
    Json(state.store.list())
}

fn parse_body(text: &str, format: Option<&str>, headers: &HeaderMap) -> ApiResult<Dataset> {
    let content_type = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("");
    let parsed: Result<Dataset, IngestError> = match format {
        Some("csv") => parse_csv(text.as_bytes()),
        Some("jsonl") => parse_jsonl(text.as_bytes()),
        Some(other) => {
            return Err(ApiError::bad_request(
                "bad_format",
                format!("format must be csv or jsonl, got {other:?}"),
            ))
        }
        None if content_type.starts_with("text/csv") => parse_csv(text.as_bytes()),
        None if content_type.contains("ndjson") || content_type.contains("jsonl") => {
            parse_jsonl(text.as_bytes())
        }
        None => parse_auto(text),
    };
    Ok(parsed?)
}

async fn create_dataset(
    State(state): State<AppState>,
    RawQuery(query): RawQuery,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let params = Params::parse(query);
    let text = std::str::from_utf8(&body).map_err(|e| {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "malformed_row",
            format!("body is not UTF-8: {e}"),
        )
    })?;
    let dataset = parse_body(text, params.get("format"), &headers)?;
    let name = params.get("name").unwrap_or("unnamed").to_string();
    let handle = state.store.insert(name, dataset)?;
    Ok((StatusCode::CREATED, Json(handle)).into_response())
}

async fn get_dataset(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<DatasetHandle>> {
    Ok(Json(lookup(&state, &id)?.handle.clone()))
}

async fn metrics(
    State(state): State<AppState>,
    Path(id): Path<String>,
    RawQuery(query): RawQuery,
) -> ApiResult<Json<OperatingPoint>> {
    let stored = lookup(&state, &id)?;
    let t = Params::parse(query).unit("threshold", "bad_threshold")?;
    Ok(Json(stored.curve.point_at(t)?))
}

async fn curve(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let stored = lookup(&state, &id)?;
    Ok(Json(CurveDoc {
        dataset_id: &stored.handle.id,
        points: stored.curve.points(),
    })
    .into_response())
}

async fn inverse(
    State(state): State<AppState>,
    Path(id): Path<String>,
    RawQuery(query): RawQuery,
) -> ApiResult<Json<QueryDoc>> {
    let stored = lookup(&state, &id)?;
    let params = Params::parse(query);
    let metric = params.metric("metric")?;
    let target = params.unit("target", "bad_target")?;
    let r = inverse_for_metric(&stored.curve, metric, target)?;
    let objective = match metric {
        MetricId::Precision => MetricId::Recall,
        m => m,
    };
    Ok(Json(QueryDoc::new(objective, r)))
}

async fn optimize_route(
    State(state): State<AppState>,
    Path(id): Path<String>,
    RawQuery(query): RawQuery,
) -> ApiResult<Json<QueryDoc>> {
    let stored = lookup(&state, &id)?;
    let params = Params::parse(query);
    let objective = params.metric("maximize")?;
    if objective == MetricId::Fpr {
        return Err(ApiError::bad_request(
            "bad_objective",
            "maximize must be recall or precision",
        ));
    }
    let constraints = params
        .all("constraint")
        .map(|c| {
            c.parse::<Constraint>()
                .map_err(|e| ApiError::bad_request("bad_constraint", e.to_string()))
        })
        .collect::<ApiResult<Vec<_>>>()?;
    let r = optimize(&stored.curve, objective, &constraints)?;
    Ok(Json(QueryDoc::new(objective, r)))
}

async fn preview(
    State(state): State<AppState>,
    Path(id): Path<String>,
    RawQuery(query): RawQuery,
) -> ApiResult<Json<PreviewDoc>> {
    let stored = lookup(&state, &id)?;
    let params = Params::parse(query);
    let t = params.unit("threshold", "bad_threshold")?;
    let n_icons = match params.get("icons") {
        None => DEFAULT_ICONS,
        Some(raw) => match raw.trim().parse::<u64>() {
            Ok(n) if n >= 1 => n,
            _ => {
                return Err(ApiError::bad_request(
                    "bad_icons",
                    format!("icons must be a positive integer, got {raw:?}"),
                ))
            }
        },
    };
    let point = stored.curve.point_at(t)?;
    let grid = allocate_icons(&point.counts, n_icons)?;
    Ok(Json(PreviewDoc {
        threshold: t,
        n_icons: grid.n_icons,
        allocation: grid.allocation,
        fractions: grid.fractions,
        legend: legend(),
    }))
}
