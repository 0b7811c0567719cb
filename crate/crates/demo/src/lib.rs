//! Browser bindings: each export takes a CSV log and returns JSON.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use ppm_core::event_log::Event;
use ppm_core::predictors::{train, PredictorKind, PredictorModel, TrainConfig};
use ppm_core::{parse_log, EventAbstraction, EventLog, StateAbstraction, TransitionSystem};

fn load(csv: &str, abstraction: &str) -> Result<(EventLog, StateAbstraction), String> {
    let log = parse_log(csv.as_bytes()).map_err(|e| e.to_string())?;
    if log.is_empty() {
        return Err("the log has no events".into());
    }
    let abs: StateAbstraction = abstraction.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((log, abs))
}

/// Comma or space separated activity names, one hour apart.
fn prefix_events(log: &EventLog, prefix: &str) -> Vec<Event> {
    prefix
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .enumerate()
        .map(|(i, a)| Event::new("demo", a, i as i64 * 3600, vec![None; log.schema().len()]))
        .collect()
}

pub fn system_json(csv: &str, abstraction: &str) -> Result<String, String> {
    let (log, abs) = load(csv, abstraction)?;
    let ts = TransitionSystem::build(&log, abs, EventAbstraction::ActivityName);
    let states: Vec<Value> = ts
        .states()
        .iter()
        .enumerate()
        .map(|(id, s)| json!({"id": id, "label": s.to_string(), "accepting": ts.is_accepting(id)}))
        .collect();
    let transitions: Vec<Value> = ts
        .transitions()
        .iter()
        .map(|t| json!({"source": t.source, "target": t.target, "label": t.label, "count": t.count}))
        .collect();
    Ok(json!({
        "abstraction": abs.to_string(),
        "states": states,
        "transitions": transitions,
        "dot": ts.to_dot(),
    })
    .to_string())
}

pub fn encoding_json(csv: &str, abstraction: &str, prefix: &str) -> Result<String, String> {
    let (log, abs) = load(csv, abstraction)?;
    let ts = TransitionSystem::build(&log, abs, EventAbstraction::ActivityName);
    let events = prefix_events(&log, prefix);
    let mapped = ts.map_state(&events);
    let v = ts.encode_mapped(&mapped, abs.similarity());
    let values: Vec<Value> = ts.states()[1..]
        .iter()
        .zip(&v.values)
        .map(|(s, x)| json!({"state": s.to_string(), "value": x}))
        .collect();
    Ok(json!({
        "prefix_state": mapped.repr.to_string(),
        "fits": mapped.is_fitting(),
        "kind": format!("{:?}", v.kind).to_lowercase(),
        "values": values,
    })
    .to_string())
}

pub fn prediction_json(csv: &str, abstraction: &str, prefix: &str) -> Result<String, String> {
    let (log, abs) = load(csv, abstraction)?;
    let mut cfg = TrainConfig::new(PredictorKind::Dats);
    cfg.abstraction = abs;
    cfg.svr.grid = None;
    let PredictorModel::Dats(model) = train(&log, &cfg).map_err(|e| e.to_string())? else {
        unreachable!("trained a DATS model")
    };
    let events = prefix_events(&log, prefix);
    let p = model.predict(&events);
    let path = model.predict_path(&events).map_err(|e| e.to_string())?;
    Ok(json!({
        "remaining_seconds": p.seconds.round() as i64,
        "remaining_hours": p.seconds / 3600.0,
        "dropped_events": p.dropped,
        "global_fallback": p.fallback,
        "path": path.activities,
        "probability": path.probability,
    })
    .to_string())
}

pub fn sample_log_csv() -> &'static str {
    ppm_core::fixtures::TABLE_1
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// Transition system of the log: states, transitions and DOT source.
#[wasm_bindgen]
pub fn build_system(csv: &str, abstraction: &str) -> Result<String, JsValue> {
    js(system_json(csv, abstraction))
}

/// State vector of a running prefix: one-hot when it fits, similarities otherwise.
#[wasm_bindgen]
pub fn encode_prefix(csv: &str, abstraction: &str, prefix: &str) -> Result<String, JsValue> {
    js(encoding_json(csv, abstraction, prefix))
}

/// Trains DATS on the log and predicts remaining time and future path.
#[wasm_bindgen]
pub fn predict(csv: &str, abstraction: &str, prefix: &str) -> Result<String, JsValue> {
    js(prediction_json(csv, abstraction, prefix))
}

#[wasm_bindgen]
pub fn sample_log() -> String {
    sample_log_csv().to_string()
}
