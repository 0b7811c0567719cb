//! Fixed-length feature vectors for (partial) traces.
//!
//! Layout: one-hot of the last activity, then one block per attribute in
//! schema order holding the encoding of its last observed value, then
//! optionally the transition-system state block.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::event_log::{last, rem, AttrKind, Event, EventLog, Value};
use crate::transition_system::{StateVector, TransitionSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Binary,
    Continuous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttributeEncoder {
    /// One slot per known value; absent or unseen values encode as zeros.
    Nominal { name: String, values: Vec<String> },
    /// Single slot. With `bounds` the value is min-max scaled and clamped to
    /// `[0, 1]`; absent values encode as 0.
    Numeric {
        name: String,
        bounds: Option<(f64, f64)>,
    },
}

impl AttributeEncoder {
    pub fn width(&self) -> usize {
        match self {
            AttributeEncoder::Nominal { values, .. } => values.len(),
            AttributeEncoder::Numeric { .. } => 1,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            AttributeEncoder::Nominal { name, .. } | AttributeEncoder::Numeric { name, .. } => name,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct SchemaData {
    activities: Vec<String>,
    attributes: Vec<AttributeEncoder>,
    state_block: Option<usize>,
}

/// Frozen dictionaries mapping traces to vectors of dimension [`Self::dim`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "SchemaData", into = "SchemaData")]
pub struct EncodingSchema {
    data: SchemaData,
    activity_index: HashMap<String, usize>,
    value_index: Vec<HashMap<String, usize>>,
    dim: usize,
}

impl From<SchemaData> for EncodingSchema {
    fn from(data: SchemaData) -> Self {
        let activity_index = data
            .activities
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let value_index = data
            .attributes
            .iter()
            .map(|a| match a {
                AttributeEncoder::Nominal { values, .. } => {
                    values.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect()
                }
                AttributeEncoder::Numeric { .. } => HashMap::new(),
            })
            .collect();
        let dim = data.activities.len()
            + data.attributes.iter().map(AttributeEncoder::width).sum::<usize>()
            + data.state_block.unwrap_or(0);
        Self {
            data,
            activity_index,
            value_index,
            dim,
        }
    }
}

impl From<EncodingSchema> for SchemaData {
    fn from(s: EncodingSchema) -> Self {
        s.data
    }
}

impl EncodingSchema {
    pub fn new(activities: Vec<String>, attributes: Vec<AttributeEncoder>, state_block: Option<usize>) -> Self {
        SchemaData {
            activities,
            attributes,
            state_block,
        }
        .into()
    }

    /// Fits dictionaries on `log` with numeric min-max scaling.
    pub fn fit(log: &EventLog, ts: Option<&TransitionSystem>) -> Self {
        Self::fit_with(log, ts, true)
    }

    pub fn fit_with(log: &EventLog, ts: Option<&TransitionSystem>, scale_numeric: bool) -> Self {
        let activities = log.activities().iter().cloned().collect();
        let attributes = log
            .schema()
            .attributes
            .iter()
            .enumerate()
            .map(|(i, decl)| match decl.kind {
                AttrKind::Nominal => AttributeEncoder::Nominal {
                    name: decl.name.clone(),
                    values: log.nominal_values(i).iter().cloned().collect(),
                },
                AttrKind::Numeric => {
                    let bounds = scale_numeric
                        .then(|| numeric_bounds(log, i))
                        .flatten();
                    AttributeEncoder::Numeric {
                        name: decl.name.clone(),
                        bounds,
                    }
                }
            })
            .collect();
        Self::new(activities, attributes, ts.map(TransitionSystem::non_start_count))
    }

    /// Same dictionaries without the state block.
    pub fn without_state_block(&self) -> Self {
        Self::new(self.data.activities.clone(), self.data.attributes.clone(), None)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn activities(&self) -> &[String] {
        &self.data.activities
    }

    pub fn attributes(&self) -> &[AttributeEncoder] {
        &self.data.attributes
    }

    pub fn state_block(&self) -> Option<usize> {
        self.data.state_block
    }

    pub fn feature_kinds(&self) -> Vec<FeatureKind> {
        let mut kinds = vec![FeatureKind::Binary; self.data.activities.len()];
        for a in &self.data.attributes {
            match a {
                AttributeEncoder::Nominal { values, .. } => {
                    kinds.extend(std::iter::repeat(FeatureKind::Binary).take(values.len()))
                }
                AttributeEncoder::Numeric { .. } => kinds.push(FeatureKind::Continuous),
            }
        }
        kinds.extend(std::iter::repeat(FeatureKind::Continuous).take(self.data.state_block.unwrap_or(0)));
        kinds
    }

    /// Encodes a prefix. `ts` must be given exactly when the schema carries a
    /// state block.
    pub fn encode(&self, events: &[Event], ts: Option<&TransitionSystem>) -> Vec<f64> {
        let state = match (self.data.state_block, ts) {
            (Some(width), Some(ts)) => {
                assert_eq!(width, ts.non_start_count(), "state block does not match transition system");
                Some(ts.encode_state(events, ts.abstraction().similarity()))
            }
            (None, _) => None,
            (Some(_), None) => panic!("schema has a state block but no transition system was given"),
        };
        self.encode_with_state(events, state.as_ref())
    }

    /// `x` with its activity block replaced by the one-hot of `activity`.
    pub fn with_activity(&self, x: &[f64], activity: &str) -> Vec<f64> {
        let mut out = x.to_vec();
        let n = self.data.activities.len();
        out[..n].fill(0.0);
        if let Some(&i) = self.activity_index.get(activity) {
            out[i] = 1.0;
        }
        out
    }

    /// Encodes a prefix using a precomputed state vector.
    pub fn encode_with_state(&self, events: &[Event], state: Option<&StateVector>) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim);
        let mut block = vec![0.0; self.data.activities.len()];
        if let Some(i) = events.last().and_then(|e| self.activity_index.get(&e.activity)) {
            block[*i] = 1.0;
        }
        x.extend_from_slice(&block);
        for (i, enc) in self.data.attributes.iter().enumerate() {
            let value = last(events, i);
            match enc {
                AttributeEncoder::Nominal { values, .. } => {
                    let start = x.len();
                    x.resize(start + values.len(), 0.0);
                    if let Some(slot) = value
                        .and_then(Value::as_str)
                        .and_then(|v| self.value_index[i].get(v))
                    {
                        x[start + slot] = 1.0;
                    }
                }
                AttributeEncoder::Numeric { bounds, .. } => {
                    let v = value.and_then(Value::as_f64).unwrap_or(0.0);
                    let v = match (value, bounds) {
                        (Some(_), Some((lo, hi))) if hi > lo => ((v - lo) / (hi - lo)).clamp(0.0, 1.0),
                        (Some(_), Some(_)) => 0.0,
                        _ => v,
                    };
                    x.push(v);
                }
            }
        }
        if let Some(width) = self.data.state_block {
            match state {
                Some(s) => x.extend_from_slice(&s.values),
                None => x.resize(x.len() + width, 0.0),
            }
        }
        debug_assert_eq!(x.len(), self.dim);
        x
    }
}

fn numeric_bounds(log: &EventLog, attr: usize) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for e in log.traces().iter().flat_map(|t| &t.events) {
        if let Some(Value::Numeric(v)) = e.attributes.get(attr).and_then(Option::as_ref) {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Regression examples: feature vectors and remaining seconds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingSet {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl TrainingSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) {
        self.x.push(x);
        self.y.push(y);
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> TrainingSet {
        TrainingSet {
            x: indices.iter().map(|&i| self.x[i].clone()).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

/// One example per event of every trace: the encoded prefix ending at that
/// event and its remaining time.
pub fn build_training_set(log: &EventLog, schema: &EncodingSchema, ts: Option<&TransitionSystem>) -> TrainingSet {
    let mut tr = TrainingSet::new();
    for t in log.traces() {
        for k in 1..=t.len() {
            tr.push(schema.encode(t.prefix(k), ts), rem(&t.events, k) as f64);
        }
    }
    tr
}
