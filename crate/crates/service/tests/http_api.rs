use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use scideator::domain::Classification;
use scideator::offline::scenario::{
    demo_inputs, demo_selection, demo_session, demo_user_ideas, DEMO_OVERRIDE_REASON, DEMO_QUERY, DEMO_TOPIC,
};
use scideator::session::{Engine, EngineConfig, RunMode, SessionState, SessionStore};
use scideator_service::app::{router, AppState};

fn engine(mode: RunMode) -> Engine {
    Engine::from_config(&EngineConfig { mode, ..Default::default() }).unwrap()
}

fn app(root: &std::path::Path, workers: usize) -> (Arc<AppState>, Router) {
    let state = AppState::open(engine(RunMode::Replay), SessionStore::new(root), workers).unwrap();
    (state.clone(), router(state))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn session(app: &Router, id: &str) -> SessionState {
    let (s, v) = call(app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    serde_json::from_value(v).unwrap()
}

fn create_body() -> Value {
    json!({ "topic": DEMO_TOPIC, "papers": demo_inputs() })
}

#[tokio::test]
async fn demo_workflow_over_http_matches_the_engine() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, app) = app(tmp.path(), 2);

    let (s, v) = call(&app, Method::POST, "/sessions?wait=true", Some(create_body())).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    let id = v["session_id"].as_str().unwrap().to_string();
    let (s, again) = call(&app, Method::POST, "/sessions?wait=true", Some(create_body())).await;
    assert_eq!((s, &again["session_id"]), (StatusCode::OK, &v["session_id"]));

    let (s, v) = call(&app, Method::POST, &format!("/sessions/{id}/ideas/generate?wait=true"), None).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["ideas"].as_array().unwrap().len(), 4);
    let body = json!({ "query": DEMO_QUERY });
    let (s, v) = call(&app, Method::POST, &format!("/sessions/{id}/facets/generate?wait=true"), Some(body)).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let (s, v) = call(&app, Method::POST, &format!("/sessions/{id}/facets/generate?wait=true"), None).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let selection = serde_json::to_value(demo_selection(&session(&app, &id).await)).unwrap();
    let (s, v) = call(&app, Method::POST, &format!("/sessions/{id}/ideas/generate?wait=true"), Some(selection)).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    for text in demo_user_ideas() {
        let (s, v) = call(&app, Method::POST, &format!("/sessions/{id}/ideas?wait=true"), Some(json!({ "text": text }))).await;
        assert_eq!(s, StatusCode::CREATED, "{v}");
    }
    let order = session(&app, &id).await.idea_order;
    for idea in &order {
        let (s, v) = call(&app, Method::POST, &format!("/ideas/{idea}/novelty?wait=true"), None).await;
        assert_eq!(s, StatusCode::OK, "{v}");
    }
    let first = &order[0];
    let flipped = session(&app, &id).await.assessments[first].classification.opposite();
    let body = json!({ "classification": flipped, "reason": DEMO_OVERRIDE_REASON });
    let (s, v) = call(&app, Method::PATCH, &format!("/ideas/{first}/novelty"), Some(body)).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    if flipped == Classification::NotNovel {
        let (s, v) = call(&app, Method::POST, &format!("/ideas/{first}/suggestions?wait=true"), None).await;
        assert_eq!(s, StatusCode::OK, "{v}");
    }

    let expected = demo_session(&engine(RunMode::Replay), None).await.unwrap();
    let got = session(&app, &id).await;
    assert_eq!(serde_json::to_value(&got).unwrap(), serde_json::to_value(&expected).unwrap());

    // Reassessment as a polled job.
    let (s, job) = call(&app, Method::POST, &format!("/ideas/{}/novelty", order[1]), None).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let job_uri = format!("/jobs/{}", job["id"].as_str().unwrap());
    let done = loop {
        let (_, j) = call(&app, Method::GET, &job_uri, None).await;
        if j["status"] == "succeeded" || j["status"] == "failed" {
            break j;
        }
        tokio::time::sleep(std::time::Duration::from_millis(5)).await;
    };
    assert_eq!(done["status"], "succeeded", "{done}");

    let not_novel = got
        .idea_order
        .iter()
        .find(|i| i.as_str() != first && got.assessments[*i].classification == Classification::NotNovel)
        .unwrap()
        .clone();
    let (s, v) = call(&app, Method::POST, &format!("/ideas/{not_novel}/suggestions"), None).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["suggestions"].as_array().unwrap().len(), 3);
    let (s, adopted) = call(&app, Method::POST, &format!("/ideas/{not_novel}/suggestions"), Some(json!({ "adopt": 0 }))).await;
    assert_eq!(s, StatusCode::CREATED, "{adopted}");
    let novel = got.idea_order.iter().find(|i| got.assessments[*i].effective_classification() == Classification::Novel);
    if let Some(novel) = novel {
        let (s, v) = call(&app, Method::POST, &format!("/ideas/{novel}/suggestions"), None).await;
        assert_eq!(s, StatusCode::CONFLICT, "{v}");
    }
    let (s, v) = call(&app, Method::POST, &format!("/ideas/{not_novel}/save"), None).await;
    assert_eq!((s, &v["saved"]), (StatusCode::OK, &json!(true)));
    let (s, _) = call(&app, Method::DELETE, &format!("/ideas/{not_novel}"), None).await;
    assert_eq!(s, StatusCode::NO_CONTENT);
    let (s, v) = call(&app, Method::GET, &format!("/ideas/{not_novel}"), None).await;
    assert_eq!((s, &v["error"]["kind"]), (StatusCode::NOT_FOUND, &json!("not_found")));

    let before = session(&app, &id).await;
    let (_, reopened) = self::app(tmp.path(), 1);
    assert_eq!(session(&reopened, &id).await, before);
}

#[tokio::test]
async fn invalid_requests_and_upstream_misses_map_to_statuses() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, app) = app(tmp.path(), 2);
    let (s, v) = call(&app, Method::POST, "/sessions?wait=true", Some(json!({ "topic": "t", "papers": [] }))).await;
    assert_eq!((s, &v["error"]["kind"]), (StatusCode::UNPROCESSABLE_ENTITY, &json!("invalid")));
    let (s, _) = call(&app, Method::POST, "/sessions", Some(json!("not an object"))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let body = json!({ "topic": "a topic nobody recorded", "papers": [{ "corpus_id": "art01" }] });
    let (s, v) = call(&app, Method::POST, "/sessions?wait=true", Some(body)).await;
    assert_eq!((s, &v["error"]["kind"]), (StatusCode::BAD_GATEWAY, &json!("upstream")), "{v}");
    let (s, _) = call(&app, Method::GET, "/sessions/s-000000000000", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, Method::GET, "/jobs/job-999", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let (_, v) = call(&app, Method::POST, "/sessions?wait=true", Some(create_body())).await;
    let id = v["session_id"].as_str().unwrap().to_string();
    let bad = json!({ "purpose_ids": ["purpose-missing-000000000"] });
    let (s, v) = call(&app, Method::POST, &format!("/sessions/{id}/ideas/generate"), Some(bad)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{v}");
    let (s, v) = call(&app, Method::POST, &format!("/sessions/{id}/facets"), Some(json!({ "kind": "purpose", "text": "one two three four five six seven eight nine" }))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{v}");
    let (s, v) = call(&app, Method::POST, &format!("/sessions/{id}/facets"), Some(json!({ "kind": "evaluation", "text": "user study", "definition": "Participants try the system." }))).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    let (s, v) = call(&app, Method::GET, &format!("/sessions/{id}/facets"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(v["facets"].as_array().unwrap().iter().any(|f| f["text"] == "user study"));
    let (s, _) = call(&app, Method::GET, "/health", None).await;
    assert_eq!(s, StatusCode::OK);
}

#[tokio::test]
async fn second_round_while_one_runs_is_a_conflict() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, app) = app(tmp.path(), 1);
    let (_, v) = call(&app, Method::POST, "/sessions?wait=true", Some(create_body())).await;
    let id = v["session_id"].as_str().unwrap().to_string();
    let uri = format!("/sessions/{id}/ideas/generate");
    // On the single-threaded test runtime the first job cannot start
    // before the second request is handled.
    let (s, job) = call(&app, Method::POST, &uri, None).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let (s, v) = call(&app, Method::POST, &uri, None).await;
    assert_eq!((s, &v["error"]["kind"]), (StatusCode::CONFLICT, &json!("conflict")));
    let job_uri = format!("/jobs/{}", job["id"].as_str().unwrap());
    loop {
        let (_, j) = call(&app, Method::GET, &job_uri, None).await;
        if j["status"] == "succeeded" {
            break;
        }
        assert_ne!(j["status"], "failed", "{j}");
        tokio::time::sleep(std::time::Duration::from_millis(5)).await;
    }
    let (s, v) = call(&app, Method::POST, &format!("{uri}?wait=true"), None).await;
    assert_ne!(s, StatusCode::CONFLICT, "{v}");
}
