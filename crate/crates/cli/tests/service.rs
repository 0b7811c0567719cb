//! HTTP contract checks against golden request/response files.
//!
//! Set `PPM_BLESS=1` to rewrite the expected responses.

mod common;

use axum::http::StatusCode;
use serde_json::json;

use common::{call, concurrent_identical, registry, run_golden};
use ppm_cli::server::router;

#[tokio::test]
async fn golden_predict_cases() {
    let bless = std::env::var_os("PPM_BLESS").is_some();
    let (cases, alarms) = run_golden(router(registry()), bless).await.unwrap_or_else(|e| panic!("{e}"));
    assert!(cases >= 6);
    assert_eq!(alarms, [true, true], "golden set must cover alarm true and false");
}

#[tokio::test]
async fn malformed_json_is_400() {
    let app = router(registry());
    for body in ["{", "[]", "{\"events\": 3}", ""] {
        let (status, value, _) = call(app.clone(), "POST", "/predict", Some(body.to_string())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        assert!(value["error"].is_string() && value["message"].is_string());
    }
}

#[tokio::test]
async fn models_and_health() {
    let app = router(registry());
    let (status, value, _) = call(app.clone(), "GET", "/models", None).await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = value.as_array().unwrap().iter().map(|m| m["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["table1", "weighted"]);
    assert_eq!(value[0]["variant"], "dats");

    let (status, value, _) = call(app.clone(), "GET", "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(value, json!({"status": "ok", "models": 2}));

    let (status, _, _) = call(app, "GET", "/predict", None).await;
    assert_eq!(status, StatusCode::METHOD_NOT_ALLOWED);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 8)]
async fn concurrent_identical_queries_agree() {
    assert!(concurrent_identical(router(registry())).await);
}
