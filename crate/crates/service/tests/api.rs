use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use gamesys_service::{router, AppState, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const SPRINT: &str = r#"{
    "name": "sprint",
    "resources": [{"id": "stamina", "capacity": 10}],
    "actions": [
        {"id": "walk", "costs": []},
        {"id": "sprint", "costs": [{"resource": "stamina", "amount": 3}]},
        {"id": "slow", "costs": []}
    ],
    "states": [{"id": "walking", "importance": 1}, {"id": "running", "importance": 3}],
    "startState": "walking",
    "transitions": [
        {"from": "walking", "action": "walk", "to": "walking"},
        {"from": "walking", "action": "sprint", "to": "running"},
        {"from": "running", "action": "slow", "to": "walking"}
    ],
    "taps": [{"state": "walking", "resource": "stamina", "amount": 2}],
    "drains": [{"state": "running", "resource": "stamina", "amount": 1}],
    "converters": []
}"#;

struct Harness {
    app: Router,
    _dir: tempfile::TempDir,
}

fn config(dir: &std::path::Path) -> ServiceConfig {
    ServiceConfig { data_dir: dir.to_path_buf(), ..ServiceConfig::default() }
}

fn harness() -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let state = Arc::new(AppState::new(&config(dir.path())).unwrap());
    Harness { app: router(state), _dir: dir }
}

async fn send(
    app: &Router,
    method: Method,
    uri: &str,
    body: Option<String>,
    if_match: Option<&str>,
) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(rev) = if_match {
        req = req.header(header::IF_MATCH, rev);
    }
    let req = req
        .header(header::CONTENT_TYPE, "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    send(app, Method::GET, uri, None, None).await
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    send(app, Method::POST, uri, Some(body.to_string()), None).await
}

async fn create(app: &Router) -> String {
    let (status, body) = send(app, Method::POST, "/designs", Some(SPRINT.into()), None).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn health() {
    let h = harness();
    let (status, body) = get(&h.app, "/healthz").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
}

#[tokio::test]
async fn design_crud_round_trip() {
    let h = harness();
    let (status, created) = send(&h.app, Method::POST, "/designs", Some(SPRINT.into()), None).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(created["revision"], 1);
    assert_eq!(created["name"], "sprint");
    let id = created["id"].as_str().unwrap();

    let (status, fetched) = get(&h.app, &format!("/designs/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(fetched, created);

    let renamed = SPRINT.replace(r#""name": "sprint""#, r#""name": "dash""#);
    let uri = format!("/designs/{id}");
    let (status, updated) = send(&h.app, Method::PUT, &uri, Some(renamed.clone()), Some("1")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(updated["revision"], 2);
    assert_eq!(updated["name"], "dash");

    // The client still believes revision 1.
    let (status, body) = send(&h.app, Method::PUT, &uri, Some(renamed), Some("\"1\"")).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "REVISION_CONFLICT");

    let (_, list) = get(&h.app, "/designs").await;
    assert_eq!(list.as_array().unwrap().len(), 1);

    for _ in 0..2 {
        let (status, _) = send(&h.app, Method::DELETE, &uri, None, None).await;
        assert_eq!(status, StatusCode::NO_CONTENT);
    }
    let (status, body) = get(&h.app, &uri).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "NOT_FOUND");
    let (status, _) = send(&h.app, Method::PUT, &uri, Some(SPRINT.into()), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn invalid_designs_are_rejected() {
    let h = harness();
    let no_start = SPRINT.replace(r#""startState": "walking","#, "");
    let (status, body) = send(&h.app, Method::POST, "/designs", Some(no_start), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "VALIDATION_ERROR");
    let codes: Vec<&str> =
        body["report"]["issues"].as_array().unwrap().iter().map(|i| i["code"].as_str().unwrap()).collect();
    assert!(codes.contains(&"MISSING_START"), "{codes:?}");

    let extra = SPRINT.replace(r#""name": "sprint","#, r#""name": "sprint", "extra": true,"#);
    let (status, body) = send(&h.app, Method::POST, "/designs", Some(extra), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "SCHEMA_ERROR");

    let id = create(&h.app).await;
    let broken = SPRINT.replace(r#""to": "running""#, r#""to": "nowhere""#);
    let (status, body) = send(&h.app, Method::PUT, &format!("/designs/{id}"), Some(broken), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "VALIDATION_ERROR");
    let (_, stored) = get(&h.app, &format!("/designs/{id}")).await;
    assert_eq!(stored["revision"], 1);
}

#[tokio::test]
async fn designs_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let first = router(Arc::new(AppState::new(&config(dir.path())).unwrap()));
    let id = create(&first).await;
    let (_, before) = get(&first, &format!("/designs/{id}")).await;
    drop(first);
    let second = router(Arc::new(AppState::new(&config(dir.path())).unwrap()));
    let (status, after) = get(&second, &format!("/designs/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(after, before);
}

#[tokio::test]
async fn evaluate_defaults_echo_and_determinism() {
    let h = harness();
    let id = create(&h.app).await;
    let uri = format!("/designs/{id}/evaluate");
    let (status, body) = post(&h.app, &uri, json!({})).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    for (_, w) in body["weights"].as_object().unwrap() {
        assert_eq!(w, 1.0);
    }
    assert!(body["summary"].as_str().unwrap().contains("sprint"));
    assert!(body["report"]["statePath"].as_array().unwrap().len() > 1);

    let req = json!({"weights": {"resourceGains": -100}, "seed": 7});
    let (_, a) = post(&h.app, &uri, req.clone()).await;
    let (_, b) = post(&h.app, &uri, req).await;
    assert_eq!(a, b);
    assert_eq!(a["seed"], 7);
    assert_eq!(a["weights"]["resourceGains"], -100.0);
    assert_eq!(a["weights"]["curiosity"], 1.0);

    let (status, body) = post(&h.app, &uri, json!({"simConfig": {"maxEpochs": 5}})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["report"]["actionsTaken"].as_array().unwrap().len(), 5);
}

#[tokio::test]
async fn evaluate_errors() {
    let h = harness();
    let id = create(&h.app).await;
    let uri = format!("/designs/{id}/evaluate");
    let (status, body) = post(&h.app, &uri, json!({"weights": {"fun": 2}})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "UNKNOWN_METRIC");
    let (status, body) = post(&h.app, &uri, json!({"weights": {"curiosity": "lots"}})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "MALFORMED_BODY");
    let (status, body) = post(&h.app, &uri, json!({"simConfig": {"maxEpochs": 0}})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "INVALID_CONFIG");
    let (status, _) = post(&h.app, "/designs/missing/evaluate", json!({})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

fn ga(generations: usize, every: usize) -> Value {
    json!({
        "populationSize": 4,
        "generations": generations,
        "humanEveryK": every,
        "candidatesShown": 4,
        "simConfig": {"maxEpochs": 12},
        "seed": 3
    })
}

async fn start(app: &Router, id: &str, mode: &str, config: Value) -> String {
    let (status, body) =
        post(app, "/sessions", json!({"designId": id, "mode": mode, "config": config})).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["id"].as_str().unwrap().to_string()
}

/// Polls until the session leaves `running`.
async fn wait_settled(app: &Router, sid: &str) -> Value {
    let deadline = Instant::now() + Duration::from_secs(60);
    loop {
        let (status, s) = get(app, &format!("/sessions/{sid}")).await;
        assert_eq!(status, StatusCode::OK);
        if s["status"] != "running" {
            return s;
        }
        assert!(Instant::now() < deadline, "session stuck running");
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
}

fn check_invariants(s: &Value) {
    let pending = s["pendingCandidates"].as_array().unwrap();
    assert_eq!(!pending.is_empty(), s["status"] == "awaitingChoice", "{s}");
    assert_eq!(s.get("result").is_some(), s["status"] == "finished");
}

#[tokio::test]
async fn automated_session_runs_to_completion() {
    let h = harness();
    let id = create(&h.app).await;
    let sid = start(&h.app, &id, "balance", ga(6, 0)).await;
    let s = wait_settled(&h.app, &sid).await;
    check_invariants(&s);
    assert_eq!(s["status"], "finished");
    assert_eq!(s["generation"], 6);
    let (status, result) = get(&h.app, &format!("/sessions/{sid}/result")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(result, s["result"]);
    assert_eq!(result["history"].as_array().unwrap().len(), 7);
    assert_eq!(result["partial"], false);

    let (status, body) = post(&h.app, &format!("/sessions/{sid}/choice"), json!({"candidateIndex": 0})).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "WRONG_STATE");
    let (status, _) = post(&h.app, &format!("/sessions/{sid}/abort"), json!({})).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn checkpoints_pause_for_a_choice() {
    let h = harness();
    let id = create(&h.app).await;
    let sid = start(&h.app, &id, "generate", ga(12, 5)).await;
    let choice_uri = format!("/sessions/{sid}/choice");
    let mut paused_at = Vec::new();
    loop {
        let s = wait_settled(&h.app, &sid).await;
        check_invariants(&s);
        if s["status"] != "awaitingChoice" {
            assert_eq!(s["status"], "finished");
            break;
        }
        paused_at.push(s["generation"].as_u64().unwrap());
        let pending = s["pendingCandidates"].as_array().unwrap();
        assert_eq!(pending.len(), 4);
        for (i, c) in pending.iter().enumerate() {
            assert_eq!(c["index"], i);
            assert!(c["digest"]["pathLength"].as_u64().unwrap() >= 1);
            assert!(c["design"]["states"].is_array());
        }
        let (status, body) = post(&h.app, &choice_uri, json!({"candidateIndex": 9})).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
        assert_eq!(body["code"], "INDEX_OUT_OF_RANGE");
        let (status, body) = post(&h.app, &choice_uri, json!({"candidateIndex": 2})).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body["status"], "running");
        assert!(body["pendingCandidates"].as_array().unwrap().is_empty());
    }
    assert_eq!(paused_at, vec![5, 10]);
}

#[tokio::test]
async fn concurrent_choices_admit_exactly_one() {
    let h = harness();
    let id = create(&h.app).await;
    let sid = start(&h.app, &id, "balance", ga(10, 1)).await;
    let s = wait_settled(&h.app, &sid).await;
    assert_eq!(s["status"], "awaitingChoice");
    let uri = format!("/sessions/{sid}/choice");
    let calls = (0..8).map(|i| {
        let app = h.app.clone();
        let uri = uri.clone();
        tokio::spawn(async move { post(&app, &uri, json!({"candidateIndex": i % 4})).await.0 })
    });
    let mut statuses = Vec::new();
    for c in calls {
        statuses.push(c.await.unwrap());
    }
    assert_eq!(statuses.iter().filter(|&&s| s == StatusCode::OK).count(), 1, "{statuses:?}");
    assert!(statuses.iter().all(|&s| s == StatusCode::OK || s == StatusCode::CONFLICT));
    let (status, _) = post(&h.app, &format!("/sessions/{sid}/abort"), json!({})).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn abort_keeps_best_so_far() {
    let h = harness();
    let id = create(&h.app).await;
    let sid = start(&h.app, &id, "balance", ga(12, 5)).await;
    let s = wait_settled(&h.app, &sid).await;
    assert_eq!(s["status"], "awaitingChoice");

    let (status, body) = get(&h.app, &format!("/sessions/{sid}/result")).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "WRONG_STATE");

    let (status, s) = post(&h.app, &format!("/sessions/{sid}/abort"), json!({})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(s["status"], "aborted");
    check_invariants(&s);
    let (status, result) = get(&h.app, &format!("/sessions/{sid}/result")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(result["partial"], true);
    // Input plus five completed generations.
    assert_eq!(result["history"].as_array().unwrap().len(), 6);
    assert!(result["bestDesign"]["states"].is_array());
}

#[tokio::test]
async fn abort_while_running() {
    let h = harness();
    let id = create(&h.app).await;
    let mut cfg = ga(100_000, 0);
    cfg["simConfig"]["maxEpochs"] = json!(200);
    let sid = start(&h.app, &id, "balance", cfg).await;
    let (status, s) = post(&h.app, &format!("/sessions/{sid}/abort"), json!({})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(s["status"], "aborted");
    let (_, result) = get(&h.app, &format!("/sessions/{sid}/result")).await;
    assert_eq!(result["partial"], true);
}

#[tokio::test]
async fn session_start_errors() {
    let h = harness();
    let (status, _) = post(&h.app, "/sessions", json!({"designId": "nope", "mode": "balance"})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let id = create(&h.app).await;
    let (status, body) = post(
        &h.app,
        "/sessions",
        json!({"designId": id, "mode": "balance", "config": {"populationSize": 0}}),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "INVALID_CONFIG");
    let (status, body) = post(&h.app, "/sessions", json!({"designId": id, "mode": "mutate"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "MALFORMED_BODY");
    let (status, _) = get(&h.app, "/sessions/unknown").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}
