#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::Value;
use stacksim::design::DesignDocument;
use stacksim::dse::SweepConfig;
use stacksim_gateway::api::{router, AppState};
use stacksim_gateway::jobs::JobManager;
use stacksim_gateway::store::Store;
use tower::ServiceExt;

pub fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub fn manifest() -> PathBuf {
    scenarios().join("baseline.design")
}

pub fn document() -> DesignDocument {
    DesignDocument::load(&manifest()).expect("shipped design loads")
}

/// Copies the shipped scenario into `dir` so tests can edit it.
pub fn copy_scenarios(dir: &Path) -> PathBuf {
    for entry in std::fs::read_dir(scenarios()).unwrap() {
        let p = entry.unwrap().path();
        std::fs::copy(&p, dir.join(p.file_name().unwrap())).unwrap();
    }
    dir.join("baseline.design")
}

pub fn stacksim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stacksim")).args(args).output().expect("binary runs")
}

pub fn app(state_dir: &Path, workers: usize) -> Router {
    let store = Store::open(state_dir).unwrap();
    router(AppState::new(JobManager::recover(store, workers, SweepConfig::default()).unwrap()))
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<&Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => req.header("content-type", "application/json").body(Body::from(serde_json::to_vec(v).unwrap())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, bytes.to_vec())
}

pub async fn call_json(app: &Router, method: &str, uri: &str, body: Option<&Value>) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, body).await;
    let v = if b.is_empty() { Value::Null } else { serde_json::from_slice(&b).unwrap_or(Value::Null) };
    (s, v)
}

pub async fn create_design(app: &Router, doc: &DesignDocument) -> String {
    let (s, v) = call_json(app, "POST", "/designs", Some(&serde_json::to_value(doc).unwrap())).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    v["id"].as_str().unwrap().to_string()
}

pub async fn submit(app: &Router, design: &str, kind: &str) -> String {
    let body = serde_json::json!({ "kind": kind });
    let (s, v) = call_json(app, "POST", &format!("/designs/{design}/jobs"), Some(&body)).await;
    assert_eq!(s, StatusCode::ACCEPTED, "{v}");
    v["id"].as_str().unwrap().to_string()
}

/// Polls until the job finishes; returns the final record and every
/// progress value observed.
pub async fn wait(app: &Router, job: &str) -> (Value, Vec<f64>) {
    let start = Instant::now();
    let mut seen = Vec::new();
    loop {
        let (s, v) = call_json(app, "GET", &format!("/jobs/{job}"), None).await;
        assert_eq!(s, StatusCode::OK);
        seen.push(v["progress"].as_f64().unwrap());
        if matches!(v["state"].as_str(), Some("done" | "failed")) {
            return (v, seen);
        }
        assert!(start.elapsed() < Duration::from_secs(600), "job {job} did not finish");
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
}
