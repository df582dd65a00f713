mod common;

use axum::http::StatusCode;
use common::*;
use serde_json::json;
use stacksim::thermal::Heatmap;

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn unknown_ids_are_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 1);
    for uri in ["/designs/nope", "/jobs/nope", "/jobs/nope/summary", "/jobs/nope/heatmap?layer=0", "/jobs/nope/ranking"] {
        let (s, v) = call_json(&app, "GET", uri, None).await;
        assert_eq!(s, StatusCode::NOT_FOUND, "{uri}");
        assert!(v["error"].as_str().unwrap().contains("not found"));
    }
    let (s, _) = call_json(&app, "POST", "/designs/nope/jobs", Some(&json!({"kind": "simulate"}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn invalid_design_is_rejected_without_creating_anything() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 1);
    let mut doc = document();
    let flp = doc.floorplans.get_mut("core.flp").unwrap();
    *flp = flp.replace("C_3\t0.004\t0.003\t0.004\t0.005", "C_3\t0.004\t0.003\t0.003\t0.005");
    let (s, v) = call_json(&app, "POST", "/designs", Some(&serde_json::to_value(&doc).unwrap())).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let violations = v["violations"].as_array().unwrap();
    assert!(violations.iter().any(|x| x["resource"] == "core.flp" && x["line"] == 7), "{v}");
    assert_eq!(std::fs::read_dir(dir.path().join("designs")).unwrap().count(), 0);
    assert_eq!(std::fs::read_dir(dir.path().join("jobs")).unwrap().count(), 0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn stale_revision_conflicts() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 1);
    let doc = document();
    let id = create_design(&app, &doc).await;
    let mut edited = doc.clone();
    edited.grid.rows = 32;
    edited.grid.cols = 32;
    let body = json!({ "revision": 1, "document": edited });
    let (s, v) = call_json(&app, "PUT", &format!("/designs/{id}"), Some(&body)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["revision"], 2);
    let (s, v) = call_json(&app, "PUT", &format!("/designs/{id}"), Some(&body)).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["current_revision"], 2);
    let (_, v) = call_json(&app, "GET", &format!("/designs/{id}"), None).await;
    assert_eq!(v["document"]["grid"]["rows"], 32);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn unfinished_job_results_conflict() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 1);
    let id = create_design(&app, &document()).await;
    let sweep = submit(&app, &id, "sweep").await;
    let queued = submit(&app, &id, "simulate").await;
    let (s, v) = call_json(&app, "GET", &format!("/jobs/{queued}/summary"), None).await;
    assert_eq!(s, StatusCode::CONFLICT, "{v}");
    let (rec, _) = wait(&app, &sweep).await;
    assert_eq!(rec["state"], "done");
    let (rec, _) = wait(&app, &queued).await;
    assert_eq!(rec["state"], "done");
    let (s, _) = call_json(&app, "GET", &format!("/jobs/{queued}/ranking"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call_json(&app, "GET", &format!("/jobs/{sweep}/heatmap?layer=0"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call_json(&app, "GET", &format!("/jobs/{queued}/heatmap?layer=99"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn sweep_progress_is_monotonic_and_ranking_is_served() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 1);
    let id = create_design(&app, &document()).await;
    let job = submit(&app, &id, "sweep").await;
    let (rec, seen) = wait(&app, &job).await;
    assert_eq!(rec["state"], "done", "{rec}");
    assert!(seen.windows(2).all(|w| w[0] <= w[1]), "{seen:?}");
    assert_eq!(*seen.last().unwrap(), 1.0);
    let (s, v) = call_json(&app, "GET", &format!("/jobs/{job}/ranking"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["baseline"], "baseline");
    let ranking = v["ranking"].as_array().unwrap();
    assert_eq!(ranking.len(), 7);
    assert_eq!(ranking.last().unwrap()["point"], "baseline");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn designs_and_results_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (design, job, grid) = {
        let app = app(dir.path(), 1);
        let design = create_design(&app, &document()).await;
        let job = submit(&app, &design, "simulate").await;
        wait(&app, &job).await;
        let (_, grid) = call(&app, "GET", &format!("/jobs/{job}/heatmap?layer=0&format=grid"), None).await;
        (design, job, grid)
    };
    let interrupted = json!({
        "id": "interrupted-1", "design_id": design, "design_revision": 1, "kind": "sweep",
        "state": "running", "progress": 0.25, "result_id": null, "error": null, "created": 0, "updated": 0
    });
    std::fs::write(dir.path().join("jobs/interrupted-1.json"), interrupted.to_string()).unwrap();

    let app = app(dir.path(), 1);
    let (s, v) = call_json(&app, "GET", &format!("/designs/{design}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["revision"], 1);
    let (s, again) = call(&app, "GET", &format!("/jobs/{job}/heatmap?layer=0&format=grid"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(again, grid);
    let (_, v) = call_json(&app, "GET", "/jobs/interrupted-1", None).await;
    assert_eq!(v["state"], "failed");
    assert_eq!(v["progress"], 0.25);
    assert!(v["error"].as_str().unwrap().contains("restart"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn identical_documents_share_results() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 1);
    let a = create_design(&app, &document()).await;
    let b = create_design(&app, &document()).await;
    let ja = submit(&app, &a, "simulate").await;
    let jb = submit(&app, &b, "simulate").await;
    let (ra, _) = wait(&app, &ja).await;
    let (rb, _) = wait(&app, &jb).await;
    assert_eq!(ra["result_id"], rb["result_id"]);
    assert_eq!(std::fs::read_dir(dir.path().join("results")).unwrap().count(), 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn heatmap_json_matches_grid_text() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 1);
    let id = create_design(&app, &document()).await;
    let job = submit(&app, &id, "simulate").await;
    wait(&app, &job).await;
    for layer in 0..6 {
        let (s, body) = call(&app, "GET", &format!("/jobs/{job}/heatmap?layer={layer}"), None).await;
        assert_eq!(s, StatusCode::OK);
        let map: Heatmap = serde_json::from_slice(&body).unwrap();
        assert_eq!(map.layer, layer);
        let (_, text) = call(&app, "GET", &format!("/jobs/{job}/heatmap?layer={layer}&format=grid"), None).await;
        assert_eq!(String::from_utf8(text).unwrap(), map.emit());
    }
    let (s, v) = call_json(&app, "GET", &format!("/jobs/{job}/summary"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["summary"]["blocks"][1]["name"], "C_0");
    assert!(v["energy_relative_error"].as_f64().unwrap() < 1e-6);
}
