//! Query protocol of the prediction service, independent of the transport.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event_log::{format_timestamp, parse_timestamp, AttrKind, AttributeSchema, Event, Value};
use crate::predictors::{HistoryTrace, ModelArchive};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ServiceError {
    #[error("{0}")]
    BadRequest(String),
    #[error("unknown model '{0}'")]
    UnknownModel(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryEvent {
    pub activity: String,
    pub timestamp: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRequest {
    pub events: Vec<QueryEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathAnswer {
    pub activities: Vec<String>,
    pub probability: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarKind {
    /// Fastest historical case sharing the running prefix.
    FastestWithPrefix,
    /// Fastest such case continuing along the predicted path.
    FastestOnPath,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarTrace {
    pub kind: SimilarKind,
    pub case_id: String,
    pub activities: Vec<String>,
    /// Remaining time of the historical case after the shared prefix.
    pub remaining_seconds: i64,
    pub duration_seconds: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafetyAnswer {
    pub dropped_events: usize,
    pub global_fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub id: String,
    pub variant: String,
    pub abstraction: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub remaining_seconds: i64,
    pub predicted_completion: String,
    pub alarm: bool,
    pub path: PathAnswer,
    pub similar: Vec<SimilarTrace>,
    pub safety: SafetyAnswer,
    pub model: ModelInfo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl ServiceError {
    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            error: match self {
                ServiceError::BadRequest(_) => "bad_request",
                ServiceError::UnknownModel(_) => "unknown_model",
            }
            .to_string(),
            message: self.to_string(),
        }
    }
}

/// Up to two historical cases: the fastest whose activities start with
/// `running`, and the fastest of those continuing exactly along `path`.
pub fn find_similar<S: AsRef<str>>(history: &[HistoryTrace], running: &[S], path: &[String]) -> Vec<SimilarTrace> {
    let k = running.len();
    let matching = history.iter().filter(|h| {
        h.activities.len() >= k && h.activities.iter().zip(running).all(|(a, b)| a == b.as_ref())
    });
    let mut best: Option<&HistoryTrace> = None;
    let mut best_on_path: Option<&HistoryTrace> = None;
    let faster = |cand: &HistoryTrace, cur: Option<&HistoryTrace>| {
        cur.map_or(true, |c| {
            (cand.remaining_after(k), &cand.case_id) < (c.remaining_after(k), &c.case_id)
        })
    };
    for h in matching {
        if faster(h, best) {
            best = Some(h);
        }
        if h.activities[k..] == *path && faster(h, best_on_path) {
            best_on_path = Some(h);
        }
    }
    let entry = |kind, h: &HistoryTrace| SimilarTrace {
        kind,
        case_id: h.case_id.clone(),
        activities: h.activities.clone(),
        remaining_seconds: h.remaining_after(k),
        duration_seconds: h.duration(),
    };
    best.map(|h| entry(SimilarKind::FastestWithPrefix, h))
        .into_iter()
        .chain(best_on_path.map(|h| entry(SimilarKind::FastestOnPath, h)))
        .collect()
}

fn convert_value(name: &str, kind: AttrKind, v: &serde_json::Value) -> Result<Option<Value>, ServiceError> {
    use serde_json::Value as J;
    let bad = || ServiceError::BadRequest(format!("attribute '{name}' expects a {kind} value, got {v}"));
    Ok(match (kind, v) {
        (_, J::Null) => None,
        (AttrKind::Numeric, J::Number(n)) => Some(Value::Numeric(n.as_f64().ok_or_else(bad)?)),
        (AttrKind::Numeric, J::String(s)) => Some(Value::Numeric(s.trim().parse().map_err(|_| bad())?)),
        (AttrKind::Nominal, J::String(s)) => Some(Value::Nominal(s.clone())),
        (AttrKind::Nominal, J::Number(n)) => Some(Value::Nominal(n.to_string())),
        (AttrKind::Nominal, J::Bool(b)) => Some(Value::Nominal(b.to_string())),
        _ => return Err(bad()),
    })
}

/// Converts request events into log events. Unknown attribute names are
/// ignored; timestamps must be non-decreasing.
pub fn request_events(req: &QueryRequest, schema: &AttributeSchema) -> Result<Vec<Event>, ServiceError> {
    if req.events.is_empty() {
        return Err(ServiceError::BadRequest("events must not be empty".into()));
    }
    let mut out: Vec<Event> = Vec::with_capacity(req.events.len());
    for (i, e) in req.events.iter().enumerate() {
        if e.activity.is_empty() {
            return Err(ServiceError::BadRequest(format!("event {i}: empty activity")));
        }
        let ts = parse_timestamp(&e.timestamp)
            .ok_or_else(|| ServiceError::BadRequest(format!("event {i}: unreadable timestamp '{}'", e.timestamp)))?;
        if let Some(prev) = out.last() {
            if ts < prev.timestamp {
                return Err(ServiceError::BadRequest(format!(
                    "event {i}: timestamp {} is earlier than the previous event",
                    e.timestamp
                )));
            }
        }
        let mut attrs = vec![None; schema.len()];
        for (name, v) in &e.attributes {
            if let Some(slot) = schema.index_of(name) {
                attrs[slot] = convert_value(name, schema.attributes[slot].kind, v)?;
            }
        }
        out.push(Event::new("query", e.activity.clone(), ts, attrs));
    }
    Ok(out)
}

/// Answers a query against one archive.
pub fn answer(id: &str, archive: &ModelArchive, req: &QueryRequest) -> Result<QueryResponse, ServiceError> {
    let events = request_events(req, &archive.attributes)?;
    let deadline = req
        .deadline
        .as_deref()
        .map(|d| parse_timestamp(d).ok_or_else(|| ServiceError::BadRequest(format!("unreadable deadline '{d}'"))))
        .transpose()?;
    let model = &archive.model;
    let remaining = model.predict_remaining(&events);
    let remaining_seconds = remaining.seconds.round() as i64;
    let completion = events.last().expect("non-empty").timestamp + remaining_seconds;
    let path = match model.predict_path(&events) {
        Ok(p) => PathAnswer {
            activities: p.activities,
            probability: p.probability,
        },
        Err(e) => {
            log::debug!("no path: {e}");
            PathAnswer {
                activities: Vec::new(),
                probability: 1.0,
            }
        }
    };
    let running: Vec<&str> = events.iter().map(|e| e.activity.as_str()).collect();
    let similar = find_similar(&archive.history, &running, &path.activities);
    Ok(QueryResponse {
        remaining_seconds,
        predicted_completion: format_timestamp(completion),
        alarm: deadline.is_some_and(|d| completion > d),
        path,
        similar,
        safety: SafetyAnswer {
            dropped_events: remaining.dropped,
            global_fallback: remaining.fallback,
        },
        model: info(id, archive),
    })
}

pub fn info(id: &str, archive: &ModelArchive) -> ModelInfo {
    ModelInfo {
        id: id.to_string(),
        variant: archive.model.kind().to_string(),
        abstraction: archive.config.abstraction.to_string(),
    }
}

/// Loaded archives keyed by id; the first one answers requests without a
/// `model` field.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    models: BTreeMap<String, ModelArchive>,
    default: Option<String>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, archive: ModelArchive) {
        let id = id.into();
        if self.default.is_none() {
            self.default = Some(id.clone());
        }
        self.models.insert(id, archive);
    }

    pub fn models(&self) -> Vec<ModelInfo> {
        self.models.iter().map(|(id, a)| info(id, a)).collect()
    }

    pub fn answer(&self, req: &QueryRequest) -> Result<QueryResponse, ServiceError> {
        let id = match (&req.model, &self.default) {
            (Some(id), _) => id,
            (None, Some(id)) => id,
            (None, None) => return Err(ServiceError::UnknownModel(String::new())),
        };
        let archive = self.models.get(id).ok_or_else(|| ServiceError::UnknownModel(id.clone()))?;
        answer(id, archive, req)
    }
}
