#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use ppm_core::fixtures;
use ppm_core::predictors::{ModelArchive, PredictorModel, TrainConfig};
use ppm_core::service::Registry;
use ppm_core::abstraction::{AbstractionKind, StateAbstraction};
use ppm_core::PredictorKind;

pub fn ppm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppm")).args(args).output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name)
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

/// Archive around the hand-weighted DATS model (branch 0.6/0.1/0.3 at `{B}`).
pub fn weighted_archive() -> ModelArchive {
    let (model, _) = fixtures::weighted_dats();
    let log = fixtures::three_variants();
    ModelArchive::new(
        TrainConfig {
            abstraction: StateAbstraction::with_horizon(AbstractionKind::Set, 1),
            ..TrainConfig::new(PredictorKind::Dats)
        },
        log.schema().clone(),
        PredictorModel::Dats(model),
        Vec::new(),
    )
}

pub fn registry() -> Arc<Registry> {
    let mut r = Registry::new();
    let archive = ModelArchive::train(&fixtures::table_1(), TrainConfig::new(PredictorKind::Dats)).unwrap();
    r.insert("table1", archive);
    r.insert("weighted", weighted_archive());
    Arc::new(r)
}

pub async fn call(app: Router, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Value, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let res = app.oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let text = String::from_utf8(bytes.to_vec()).unwrap();
    let value = serde_json::from_str(&text).unwrap_or(Value::Null);
    (status, value, text)
}

/// Same keys, same types, same strings and integers, floats within 1e-9.
pub fn same_shape(expected: &Value, actual: &Value, at: &str) -> Result<(), String> {
    match (expected, actual) {
        (Value::Object(a), Value::Object(b)) => {
            let ka: Vec<_> = a.keys().collect();
            let kb: Vec<_> = b.keys().collect();
            if ka != kb {
                return Err(format!("{at}: keys {ka:?} vs {kb:?}"));
            }
            a.iter().try_for_each(|(k, v)| same_shape(v, &b[k], &format!("{at}.{k}")))
        }
        (Value::Array(a), Value::Array(b)) => {
            if a.len() != b.len() {
                return Err(format!("{at}: {} vs {} items", a.len(), b.len()));
            }
            a.iter().zip(b).enumerate().try_for_each(|(i, (x, y))| same_shape(x, y, &format!("{at}[{i}]")))
        }
        (Value::Number(a), Value::Number(b)) => {
            if a.is_f64() != b.is_f64() {
                return Err(format!("{at}: {a} vs {b} differ in kind"));
            }
            let (x, y) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            if a.is_f64() && (x - y).abs() <= 1e-9 || a == b {
                Ok(())
            } else {
                Err(format!("{at}: {a} vs {b}"))
            }
        }
        (a, b) if a == b => Ok(()),
        (a, b) => Err(format!("{at}: {a} vs {b}")),
    }
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Replays every golden case against `app`. Returns the number of cases and
/// the alarm values seen, or the first mismatch.
pub async fn run_golden(app: Router, bless: bool) -> Result<(usize, [bool; 2]), String> {
    let mut files: Vec<_> = std::fs::read_dir(golden_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    let mut seen_alarm = [false; 2];
    for path in &files {
        let mut case: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        let (status, body, _) = call(app.clone(), "POST", "/predict", Some(case["request"].to_string())).await;
        if let Some(alarm) = body.get("alarm").and_then(Value::as_bool) {
            seen_alarm[usize::from(alarm)] = true;
        }
        if bless {
            case["status"] = json!(status.as_u16());
            case["response"] = body;
            std::fs::write(path, serde_json::to_string_pretty(&case).unwrap() + "\n").unwrap();
            continue;
        }
        let name = path.file_name().unwrap().to_string_lossy();
        if status.as_u16() as u64 != case["status"].as_u64().unwrap() {
            return Err(format!("{name}: status {status}"));
        }
        same_shape(&case["response"], &body, "response").map_err(|e| format!("{name}: {e}"))?;
    }
    Ok((files.len(), seen_alarm))
}

/// 64 concurrent copies of one query; true when every body is identical.
pub async fn concurrent_identical(app: Router) -> bool {
    let body = json!({
        "events": [
            {"activity": "A", "timestamp": "2002-02-19T09:10:00Z", "attributes": {"resource": "Jack", "amount": 200}},
            {"activity": "B", "timestamp": "2002-02-19T13:22:00Z", "attributes": {"resource": "John", "category": "Standard"}}
        ],
        "deadline": "2002-02-20T12:00:00Z"
    })
    .to_string();
    let handles: Vec<_> = (0..64)
        .map(|_| tokio::spawn(call(app.clone(), "POST", "/predict", Some(body.clone()))))
        .collect();
    let mut bodies = Vec::new();
    for h in handles {
        let (status, _, text) = h.await.unwrap();
        if status != StatusCode::OK {
            return false;
        }
        bodies.push(text);
    }
    bodies.windows(2).all(|w| w[0] == w[1])
}
