//! Event logs: timestamped activity records grouped into traces by case.
//!
//! The on-disk form is a CSV file with the header
//! `case_id,activity,timestamp[,attr:<name>:<nominal|numeric> ...]`.
//! Timestamps are stored as integer seconds since the Unix epoch.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Seconds since 1970-01-01T00:00:00Z.
pub type Timestamp = i64;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid header: {0}")]
    Header(String),
    #[error("row {row}: {message}")]
    Row { row: u64, message: String },
    #[error("invalid log: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrKind {
    Nominal,
    Numeric,
}

impl fmt::Display for AttrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttrKind::Nominal => "nominal",
            AttrKind::Numeric => "numeric",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDecl {
    pub name: String,
    pub kind: AttrKind,
}

/// Ordered attribute slots shared by every event of a log.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub attributes: Vec<AttributeDecl>,
}

impl AttributeSchema {
    pub fn new(attributes: Vec<AttributeDecl>) -> Self {
        Self { attributes }
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }
}

/// A present attribute value. Absent values (`⊥`) are `None` in the slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Numeric(f64),
    Nominal(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Numeric(v) => Some(*v),
            Value::Nominal(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Nominal(s) => Some(s),
            Value::Numeric(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Numeric(v) => write!(f, "{v}"),
            Value::Nominal(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub activity: String,
    pub case_id: String,
    pub timestamp: Timestamp,
    pub attributes: Vec<Option<Value>>,
}

impl Event {
    pub fn new(
        case_id: impl Into<String>,
        activity: impl Into<String>,
        timestamp: Timestamp,
        attributes: Vec<Option<Value>>,
    ) -> Self {
        Self {
            activity: activity.into(),
            case_id: case_id.into(),
            timestamp,
            attributes,
        }
    }
}

/// The events of one case, in timestamp order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub case_id: String,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn new(case_id: impl Into<String>, events: Vec<Event>) -> Self {
        Self {
            case_id: case_id.into(),
            events,
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `hd^k`: the first `min(k, len)` events.
    pub fn prefix(&self, k: usize) -> &[Event] {
        crate::collections::hd(&self.events, k)
    }

    pub fn activities(&self) -> Vec<&str> {
        activities(&self.events)
    }

    pub fn duration(&self) -> i64 {
        rem(&self.events, 1)
    }
}

/// Activity projection of a (partial) trace.
pub fn activities(events: &[Event]) -> Vec<&str> {
    events.iter().map(|e| e.activity.as_str()).collect()
}

/// Time from the `i`-th event (1-based) to the last event of `events`.
///
/// Returns 0 for the empty trace and for indices outside `1..=len`.
pub fn rem(events: &[Event], i: usize) -> i64 {
    if i == 0 || i > events.len() {
        return 0;
    }
    events[events.len() - 1].timestamp - events[i - 1].timestamp
}

/// Latest non-absent value of attribute slot `attr`, if any.
pub fn last(events: &[Event], attr: usize) -> Option<&Value> {
    events
        .iter()
        .rev()
        .find_map(|e| e.attributes.get(attr).and_then(Option::as_ref))
}

/// A set of traces with their attribute schema and derived alphabets.
///
/// Immutable once built; traces are ordered by case id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    schema: AttributeSchema,
    traces: Vec<Trace>,
    activities: BTreeSet<String>,
    nominal_values: Vec<BTreeSet<String>>,
}

impl EventLog {
    /// Builds a log, sorting every trace by timestamp (stable) and traces by
    /// case id.
    pub fn new(schema: AttributeSchema, traces: Vec<Trace>) -> Result<Self, LogError> {
        let mut by_case: BTreeMap<String, Trace> = BTreeMap::new();
        for mut trace in traces {
            for e in &trace.events {
                if e.case_id != trace.case_id {
                    return Err(LogError::Invalid(format!(
                        "event of case {} stored in trace {}",
                        e.case_id, trace.case_id
                    )));
                }
                if e.attributes.len() != schema.len() {
                    return Err(LogError::Invalid(format!(
                        "event of case {} has {} attribute slots, schema declares {}",
                        e.case_id,
                        e.attributes.len(),
                        schema.len()
                    )));
                }
                if e.timestamp < 0 {
                    return Err(LogError::Invalid(format!(
                        "negative timestamp in case {}",
                        e.case_id
                    )));
                }
                for (slot, decl) in e.attributes.iter().zip(&schema.attributes) {
                    let ok = match (slot, decl.kind) {
                        (None, _) => true,
                        (Some(Value::Numeric(v)), AttrKind::Numeric) => v.is_finite(),
                        (Some(Value::Nominal(_)), AttrKind::Nominal) => true,
                        _ => false,
                    };
                    if !ok {
                        return Err(LogError::Invalid(format!(
                            "attribute {} of case {} does not match its declared kind",
                            decl.name, e.case_id
                        )));
                    }
                }
            }
            trace.events.sort_by_key(|e| e.timestamp);
            if by_case.contains_key(&trace.case_id) {
                return Err(LogError::Invalid(format!(
                    "duplicate case id {}",
                    trace.case_id
                )));
            }
            by_case.insert(trace.case_id.clone(), trace);
        }
        let traces: Vec<Trace> = by_case.into_values().collect();
        let mut activities = BTreeSet::new();
        let mut nominal_values = vec![BTreeSet::new(); schema.len()];
        for e in traces.iter().flat_map(|t| &t.events) {
            activities.insert(e.activity.clone());
            for (i, v) in e.attributes.iter().enumerate() {
                if let Some(Value::Nominal(s)) = v {
                    nominal_values[i].insert(s.clone());
                }
            }
        }
        Ok(Self {
            schema,
            traces,
            activities,
            nominal_values,
        })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn event_count(&self) -> usize {
        self.traces.iter().map(Trace::len).sum()
    }

    pub fn trace(&self, case_id: &str) -> Option<&Trace> {
        self.traces
            .binary_search_by(|t| t.case_id.as_str().cmp(case_id))
            .ok()
            .map(|i| &self.traces[i])
    }

    pub fn activities(&self) -> &BTreeSet<String> {
        &self.activities
    }

    /// Observed values of a nominal attribute (empty for numeric slots).
    pub fn nominal_values(&self, attr: usize) -> &BTreeSet<String> {
        &self.nominal_values[attr]
    }

    /// Sub-log with the traces accepted by `keep`.
    pub fn filter<F: FnMut(&Trace) -> bool>(&self, mut keep: F) -> EventLog {
        let traces = self.traces.iter().filter(|t| keep(t)).cloned().collect();
        EventLog::new(self.schema.clone(), traces).expect("sub-log of a valid log is valid")
    }

    /// Mean of `rem(σ, k)` over every event of every trace.
    pub fn mean_remaining(&self) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for t in &self.traces {
            for k in 1..=t.len() {
                sum += rem(&t.events, k) as f64;
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

/// Groups case ids by their activity sequence.
pub fn variants(log: &EventLog) -> BTreeMap<Vec<String>, Vec<String>> {
    let mut out: BTreeMap<Vec<String>, Vec<String>> = BTreeMap::new();
    for t in log.traces() {
        let key = t.events.iter().map(|e| e.activity.clone()).collect();
        out.entry(key).or_default().push(t.case_id.clone());
    }
    out
}

/// Parses a timestamp in any of the accepted textual forms.
///
/// Accepted: RFC 3339 (`2002-02-20T11:11:00Z`), naive ISO date-times taken as
/// UTC (`2002-02-20T11:11:00`, `2002-02-20 11:11:00`), plain dates,
/// `dd-mm-yyyy:HH.MM`, and bare integer epoch seconds.
pub fn parse_timestamp(text: &str) -> Option<Timestamp> {
    let s = text.trim();
    if s.is_empty() {
        return None;
    }
    if s.bytes().all(|b| b.is_ascii_digit()) {
        return s.parse().ok();
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
        "%d-%m-%Y:%H.%M",
        "%d-%m-%Y %H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| dt.and_utc().timestamp())
}

pub fn format_timestamp(ts: Timestamp) -> String {
    match DateTime::from_timestamp(ts, 0) {
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        None => ts.to_string(),
    }
}

fn is_absent(field: &str) -> bool {
    field.is_empty() || field == "-"
}

fn parse_header(header: &csv::StringRecord) -> Result<AttributeSchema, LogError> {
    let fixed = ["case_id", "activity", "timestamp"];
    if header.len() < 3 {
        return Err(LogError::Header(format!(
            "expected at least {} columns, found {}",
            fixed.len(),
            header.len()
        )));
    }
    for (i, name) in fixed.iter().enumerate() {
        let got = header[i].trim().trim_start_matches('\u{feff}');
        if got != *name {
            return Err(LogError::Header(format!(
                "column {} must be `{name}`, found `{got}`",
                i + 1
            )));
        }
    }
    let mut attributes = Vec::new();
    for col in header.iter().skip(3) {
        let parts: Vec<&str> = col.trim().splitn(3, ':').collect();
        let [tag, name, kind] = parts[..] else {
            return Err(LogError::Header(format!(
                "attribute column `{col}` must be `attr:<name>:<nominal|numeric>`"
            )));
        };
        if tag != "attr" || name.is_empty() {
            return Err(LogError::Header(format!(
                "attribute column `{col}` must be `attr:<name>:<nominal|numeric>`"
            )));
        }
        let kind = match kind {
            "nominal" => AttrKind::Nominal,
            "numeric" => AttrKind::Numeric,
            other => {
                return Err(LogError::Header(format!(
                    "unknown attribute kind `{other}` in column `{col}`"
                )))
            }
        };
        if attributes.iter().any(|a: &AttributeDecl| a.name == name) {
            return Err(LogError::Header(format!("duplicate attribute `{name}`")));
        }
        attributes.push(AttributeDecl {
            name: name.to_string(),
            kind,
        });
    }
    Ok(AttributeSchema::new(attributes))
}

/// Reads a CSV event log. Rows of a case may appear in any order; each trace
/// is sorted by timestamp with ties kept in file order.
pub fn parse_log<R: Read>(source: R) -> Result<EventLog, LogError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(source);
    let schema = parse_header(reader.headers()?)?;
    let width = 3 + schema.len();
    let mut cases: BTreeMap<String, Vec<Event>> = BTreeMap::new();
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record)? {
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != width {
            return Err(LogError::Row {
                row,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        let case_id = record[0].trim().to_string();
        if case_id.is_empty() {
            return Err(LogError::Row {
                row,
                message: "empty case id".into(),
            });
        }
        let activity = record[1].trim().to_string();
        if activity.is_empty() {
            return Err(LogError::Row {
                row,
                message: "empty activity".into(),
            });
        }
        let timestamp = parse_timestamp(&record[2])
            .filter(|t| *t >= 0)
            .ok_or_else(|| LogError::Row {
                row,
                message: format!("unparseable timestamp `{}`", &record[2]),
            })?;
        let mut attributes = Vec::with_capacity(schema.len());
        for (decl, field) in schema.attributes.iter().zip(record.iter().skip(3)) {
            let field = field.trim();
            if is_absent(field) {
                attributes.push(None);
                continue;
            }
            let value = match decl.kind {
                AttrKind::Nominal => Value::Nominal(field.to_string()),
                AttrKind::Numeric => match field.parse::<f64>() {
                    Ok(v) if v.is_finite() => Value::Numeric(v),
                    _ => {
                        return Err(LogError::Row {
                            row,
                            message: format!(
                                "attribute `{}` expects a number, found `{field}`",
                                decl.name
                            ),
                        })
                    }
                },
            };
            attributes.push(Some(value));
        }
        cases
            .entry(case_id.clone())
            .or_default()
            .push(Event::new(case_id, activity, timestamp, attributes));
    }
    let traces = cases
        .into_iter()
        .map(|(case_id, events)| Trace::new(case_id, events))
        .collect();
    EventLog::new(schema, traces)
}

pub fn read_log(path: impl AsRef<Path>) -> Result<EventLog, LogError> {
    let file = std::fs::File::open(path)?;
    parse_log(std::io::BufReader::new(file))
}

/// Writes `log` in the CSV format accepted by [`parse_log`]: traces by case id,
/// events by position, timestamps as RFC 3339 UTC.
pub fn write_log<W: Write>(log: &EventLog, sink: W) -> Result<(), LogError> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    let mut header = vec![
        "case_id".to_string(),
        "activity".to_string(),
        "timestamp".to_string(),
    ];
    header.extend(
        log.schema()
            .attributes
            .iter()
            .map(|a| format!("attr:{}:{}", a.name, a.kind)),
    );
    writer.write_record(&header)?;
    for t in log.traces() {
        for e in &t.events {
            let mut row = vec![
                e.case_id.clone(),
                e.activity.clone(),
                format_timestamp(e.timestamp),
            ];
            row.extend(e.attributes.iter().map(|v| match v {
                None => String::new(),
                Some(v) => v.to_string(),
            }));
            writer.write_record(&row)?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub fn serialize_log(log: &EventLog) -> String {
    let mut buf = Vec::new();
    write_log(log, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}
