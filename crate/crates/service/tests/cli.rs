use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use scideator::offline::scenario::{demo_inputs, DEMO_INPUTS, DEMO_TOPIC};
use scideator::session::{Engine, EngineConfig, SessionStore, SESSION_FILE};
use scideator_service::app::{router, AppState};
use scideator_service::cli::main_with;

async fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("scideator").chain(args.iter().copied());
    let code = main_with(argv, &mut out, &mut err).await;
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

#[tokio::test]
async fn init_without_papers_is_a_usage_error() {
    let (code, _, err) = run(&["init", "--topic", "t"]).await;
    assert_eq!(code, 2, "{err}");
    let (code, _, _) = run(&["--mode", "sideways", "bench"]).await;
    assert_eq!(code, 2);
}

#[tokio::test]
async fn cli_and_http_create_the_same_session() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("cli-session");
    let mut args = vec!["--mode", "replay", "init", "--topic", DEMO_TOPIC, "--out", out.to_str().unwrap()];
    for id in DEMO_INPUTS {
        args.extend(["--papers", id]);
    }
    let (code, stdout, err) = run(&args).await;
    assert_eq!(code, 0, "{err}");
    let printed: Value = serde_json::from_str(&stdout).unwrap();
    let from_cli: Value = serde_json::from_str(&std::fs::read_to_string(out.join(SESSION_FILE)).unwrap()).unwrap();
    assert_eq!(printed["session_id"], from_cli["session_id"]);

    let engine = Engine::from_config(&EngineConfig::default()).unwrap();
    let app = router(AppState::open(engine, SessionStore::new(tmp.path().join("http")), 1).unwrap());
    let body = json!({ "topic": DEMO_TOPIC, "papers": demo_inputs() }).to_string();
    let req = Request::post("/sessions?wait=true").header("content-type", "application/json").body(Body::from(body)).unwrap();
    let res = app.oneshot(req).await.unwrap();
    assert_eq!(res.status(), StatusCode::CREATED);
    let from_http: Value = serde_json::from_slice(&res.into_body().collect().await.unwrap().to_bytes()).unwrap();
    assert_eq!(from_cli, from_http);

    let session = out.to_str().unwrap();
    let session_file = out.join(SESSION_FILE);
    let (code, stdout, err) = run(&["ideate", "--session", session_file.to_str().unwrap()]).await;
    assert_eq!(code, 0, "{err}");
    let round: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(round["ideas"].as_array().unwrap().len(), 4);

    let (code, _, err) = run(&["assess", "--session", session, "--idea", "idea-missing"]).await;
    assert_eq!(code, 1);
    assert!(err.contains("idea-missing"), "{err}");
    let (code, _, _) = run(&["assess", "--session", tmp.path().join("none").to_str().unwrap(), "--idea", "x"]).await;
    assert_eq!(code, 1);
}

#[tokio::test]
async fn bench_on_the_labeled_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let report = tmp.path().join("report.json");
    let labeled = fixture("labeled_pair.json");
    let args = [
        "--mode",
        "replay",
        "bench",
        "--labeled",
        labeled.to_str().unwrap(),
        "--variant",
        "complete",
        "--report",
        "json",
        "--out",
        report.to_str().unwrap(),
    ];
    let (code, stdout, err) = run(&args).await;
    assert_eq!(code, 0, "{err}");
    let printed: Value = serde_json::from_str(&stdout).unwrap();
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(printed, written);
    assert_eq!(printed[0]["variant"], "complete");
    assert_eq!(printed[0]["items"], 2);

    let (code, stdout, err) = run(&["--mode", "replay", "bench", "--labeled", labeled.to_str().unwrap()]).await;
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("keyword_only"), "{stdout}");
    let (code, _, _) = run(&["bench", "--labeled", tmp.path().join("missing.json").to_str().unwrap()]).await;
    assert_eq!(code, 1);
}
