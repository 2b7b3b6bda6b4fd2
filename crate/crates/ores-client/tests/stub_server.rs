use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use tradeoff_core::Label;
use tradeoff_ores::{
    build_dataset, ClientErrorKind, FixtureStore, OresClient, RevisionScore, ScoreRequest,
    BATCH_SIZE,
};

#[derive(Default)]
struct Stub {
    calls: AtomicUsize,
    /// Revision ids answered with a RevisionNotFound entry.
    missing: Vec<u64>,
    /// Batches containing this id answer 503 this many times.
    poison: Option<(u64, usize)>,
    poison_hits: AtomicUsize,
}

fn p_true(id: u64) -> f64 {
    (id % 100) as f64 / 100.0
}

async fn scores(
    State(stub): State<Arc<Stub>>,
    Query(q): Query<HashMap<String, String>>,
) -> Response {
    stub.calls.fetch_add(1, Ordering::SeqCst);
    assert_eq!(q.get("models").map(String::as_str), Some("damaging"));
    let ids: Vec<u64> = q["revids"].split('|').map(|s| s.parse().unwrap()).collect();
    assert!(ids.len() <= BATCH_SIZE);
    if let Some((bad, times)) = stub.poison {
        if ids.contains(&bad) && stub.poison_hits.fetch_add(1, Ordering::SeqCst) < times {
            return StatusCode::SERVICE_UNAVAILABLE.into_response();
        }
    }
    let mut scores = serde_json::Map::new();
    for id in ids {
        let entry = if stub.missing.contains(&id) {
            serde_json::json!({"damaging": {"error": {"type": "RevisionNotFound", "message": "gone"}}})
        } else {
            let p = p_true(id);
            serde_json::json!({"damaging": {"score": {
                "prediction": p >= 0.5,
                "probability": {"true": p, "false": 1.0 - p}
            }}})
        };
        scores.insert(id.to_string(), entry);
    }
    axum::Json(serde_json::json!({"enwiki": {"scores": scores}})).into_response()
}

async fn serve(stub: Arc<Stub>) -> String {
    let app = Router::new()
        .route("/v3/scores/{context}/", get(scores))
        .with_state(stub);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}")
}

fn client() -> OresClient {
    OresClient::http()
        .unwrap()
        .with_retry_delay(Duration::from_millis(10))
}

#[tokio::test]
async fn batches_of_fifty() {
    let stub = Arc::new(Stub::default());
    let base = serve(stub.clone()).await;
    let ids: Vec<u64> = (1001..=1120).collect();
    let out = client()
        .fetch_scores(&ScoreRequest::new(&base, "enwiki", "damaging", ids.clone()))
        .await
        .unwrap();
    assert_eq!(stub.calls.load(Ordering::SeqCst), 3);
    assert_eq!(out.keys().copied().collect::<Vec<_>>(), ids);
    assert!(out.values().all(Result::is_ok));
    assert_eq!(out[&1042].as_ref().unwrap().p_true, 0.42);
}

#[tokio::test]
async fn revision_error_is_isolated() {
    let stub = Arc::new(Stub {
        missing: vec![7],
        ..Stub::default()
    });
    let base = serve(stub).await;
    let out = client()
        .fetch_scores(&ScoreRequest::new(
            &base,
            "enwiki",
            "damaging",
            vec![5, 6, 7, 8],
        ))
        .await
        .unwrap();
    let err = out[&7].as_ref().unwrap_err();
    assert_eq!(err.kind, ClientErrorKind::RevisionError);
    assert_eq!(err.rev_id, Some(7));
    for id in [5, 6, 8] {
        assert!(out[&id].is_ok());
    }
}

#[tokio::test]
async fn failed_batch_is_retried_once() {
    let stub = Arc::new(Stub {
        poison: Some((3, 1)),
        ..Stub::default()
    });
    let base = serve(stub.clone()).await;
    let out = client()
        .fetch_scores(&ScoreRequest::new(
            &base,
            "enwiki",
            "damaging",
            vec![1, 2, 3],
        ))
        .await
        .unwrap();
    assert_eq!(stub.calls.load(Ordering::SeqCst), 2);
    assert!(out.values().all(Result::is_ok));
}

#[tokio::test]
async fn persistent_failure_hits_only_its_batch() {
    let stub = Arc::new(Stub {
        poison: Some((60, 100)),
        ..Stub::default()
    });
    let base = serve(stub.clone()).await;
    let ids: Vec<u64> = (1..=100).collect();
    let out = client()
        .fetch_scores(&ScoreRequest::new(&base, "enwiki", "damaging", ids))
        .await
        .unwrap();
    // Batch 1..=50 succeeds; batch 51..=100 fails twice (one retry).
    assert_eq!(stub.calls.load(Ordering::SeqCst), 3);
    assert_eq!(out.len(), 100);
    for id in 1..=50 {
        assert!(out[&id].is_ok());
    }
    for id in 51..=100 {
        let e = out[&id].as_ref().unwrap_err();
        assert_eq!(e.kind, ClientErrorKind::HttpStatus);
        assert_eq!(e.rev_id, Some(id));
    }
}

#[tokio::test]
async fn unreachable_service_is_transport_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let out = client()
        .fetch_scores(&ScoreRequest::new(
            format!("http://{addr}"),
            "enwiki",
            "damaging",
            vec![1],
        ))
        .await
        .unwrap();
    assert_eq!(
        out[&1].as_ref().unwrap_err().kind,
        ClientErrorKind::Transport
    );
}

#[tokio::test]
async fn invalid_requests_fail_whole_call() {
    let c = client();
    for req in [
        ScoreRequest::new("http://127.0.0.1:1", "enwiki", "damaging", vec![]),
        ScoreRequest::new("http://127.0.0.1:1", "", "damaging", vec![1]),
        ScoreRequest::new("http://127.0.0.1:1", "enwiki", "", vec![1]),
        ScoreRequest::new("http://127.0.0.1:1", "enwiki", "damaging", vec![0]),
        ScoreRequest::new("not a url", "enwiki", "damaging", vec![1]),
    ] {
        assert!(c.fetch_scores(&req).await.is_err(), "{req:?}");
    }
}

#[tokio::test]
async fn duplicate_ids_resolve_once() {
    let stub = Arc::new(Stub::default());
    let base = serve(stub.clone()).await;
    let out = client()
        .fetch_scores(&ScoreRequest::new(
            &base,
            "enwiki",
            "damaging",
            vec![4, 4, 9],
        ))
        .await
        .unwrap();
    assert_eq!(out.len(), 2);
    assert_eq!(stub.calls.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn offline_fixtures() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let store = FixtureStore::load(dir).unwrap();
    assert_eq!(store.len(), 5);
    let client = OresClient::offline(store);
    let out = client
        .fetch_scores(&ScoreRequest::new(
            "http://unused.invalid",
            "enwiki",
            "damaging",
            vec![12345, 12346, 12347, 99999],
        ))
        .await
        .unwrap();
    assert_eq!(
        out[&12345],
        Ok(RevisionScore {
            rev_id: 12345,
            prediction: false,
            p_true: 0.07,
            p_false: 0.93
        })
    );
    assert_eq!(
        out[&12347].as_ref().unwrap_err().kind,
        ClientErrorKind::RevisionError
    );
    assert!(out[&99999].is_err());

    let scores: BTreeMap<u64, RevisionScore> = out
        .iter()
        .filter_map(|(id, o)| o.as_ref().ok().map(|s| (*id, *s)))
        .collect();
    let labels = BTreeMap::from([
        (12345, Label::Good),
        (12346, Label::Damaging),
        (12348, Label::Good),
    ]);
    let joined = build_dataset(&scores, &labels).unwrap();
    assert_eq!(joined.dataset.n_total(), 2);
    assert_eq!(joined.skipped, vec![12348]);
}
