//! Labeled transition systems mined from event logs.
//!
//! States are abstraction values of observed prefixes, transitions are
//! observed event labels. State 0 is always the start state (the
//! representation of the empty prefix); states `1..n` are enumerated in
//! first-seen order and that enumeration is what the state encodings use.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::abstraction::{EventAbstraction, Similarity, StateAbstraction, StateRepr};
use crate::event_log::{Event, EventLog};

pub type StateId = usize;
pub type TransitionId = usize;

pub const START: StateId = 0;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub source: StateId,
    pub label: String,
    pub target: StateId,
    /// Number of log prefixes that fired this transition.
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TsData {
    abstraction: StateAbstraction,
    event_abstraction: EventAbstraction,
    states: Vec<StateRepr>,
    transitions: Vec<Transition>,
    end_counts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "TsData", into = "TsData")]
pub struct TransitionSystem {
    data: TsData,
    index: HashMap<StateRepr, StateId>,
    outgoing: Vec<Vec<TransitionId>>,
    incoming: Vec<Vec<TransitionId>>,
    labels: BTreeSet<String>,
}

impl From<TsData> for TransitionSystem {
    fn from(data: TsData) -> Self {
        let index = data
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let mut outgoing = vec![Vec::new(); data.states.len()];
        let mut incoming = vec![Vec::new(); data.states.len()];
        let mut labels = BTreeSet::new();
        for (id, t) in data.transitions.iter().enumerate() {
            outgoing[t.source].push(id);
            incoming[t.target].push(id);
            labels.insert(t.label.clone());
        }
        Self {
            data,
            index,
            outgoing,
            incoming,
            labels,
        }
    }
}

impl From<TransitionSystem> for TsData {
    fn from(ts: TransitionSystem) -> Self {
        ts.data
    }
}

/// Result of mapping a prefix onto the state space.
#[derive(Clone, Debug, PartialEq)]
pub struct MappedState {
    pub repr: StateRepr,
    pub state: Option<StateId>,
}

impl MappedState {
    pub fn is_fitting(&self) -> bool {
        self.state.is_some()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingKind {
    /// Empty prefix: zero vector.
    Start,
    /// One-hot at the prefix's own state.
    Fitting,
    /// Normalized similarity to every non-start state.
    Similarity,
    /// Every similarity was zero; uniform vector.
    Degenerate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub values: Vec<f64>,
    pub kind: EncodingKind,
}

/// Outcome of the safety mechanism: the longest prefix that maps onto a
/// known state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SafetyPrefix {
    pub state: StateId,
    pub prefix_len: usize,
    /// Events had to be dropped to reach a known state.
    pub truncated: bool,
    /// Only the empty prefix fits while the trace is not empty; callers should
    /// fall back to a global estimate.
    pub fallback: bool,
}

impl TransitionSystem {
    /// Mines the transition system of `log` under the given abstractions.
    pub fn build(log: &EventLog, abs: StateAbstraction, ev_abs: EventAbstraction) -> Self {
        let mut states = vec![abs.empty_state()];
        let mut index: HashMap<StateRepr, StateId> = HashMap::new();
        index.insert(states[0].clone(), START);
        let mut intern = |repr: StateRepr, states: &mut Vec<StateRepr>| -> StateId {
            if let Some(&id) = index.get(&repr) {
                return id;
            }
            let id = states.len();
            index.insert(repr.clone(), id);
            states.push(repr);
            id
        };

        let mut paths: Vec<Vec<StateId>> = Vec::with_capacity(log.len());
        for trace in log.traces() {
            let labels: Vec<&str> = trace.events.iter().map(|e| ev_abs.represent(e)).collect();
            let mut path = vec![START];
            for k in 1..=labels.len() {
                path.push(intern(abs.represent_labels(&labels[..k]), &mut states));
            }
            paths.push(path);
        }

        let mut transitions: Vec<Transition> = Vec::new();
        let mut t_index: HashMap<(StateId, String, StateId), TransitionId> = HashMap::new();
        let mut end_counts = vec![0usize; states.len()];
        for (trace, path) in log.traces().iter().zip(&paths) {
            for k in 0..trace.len() {
                let label = ev_abs.represent(&trace.events[k]).to_string();
                let key = (path[k], label, path[k + 1]);
                match t_index.get(&key) {
                    Some(&id) => transitions[id].count += 1,
                    None => {
                        t_index.insert(key.clone(), transitions.len());
                        transitions.push(Transition {
                            source: key.0,
                            label: key.1,
                            target: key.2,
                            count: 1,
                        });
                    }
                }
            }
            end_counts[*path.last().expect("path has start")] += 1;
        }

        TsData {
            abstraction: abs,
            event_abstraction: ev_abs,
            states,
            transitions,
            end_counts,
        }
        .into()
    }

    pub fn abstraction(&self) -> StateAbstraction {
        self.data.abstraction
    }

    pub fn event_abstraction(&self) -> EventAbstraction {
        self.data.event_abstraction
    }

    pub fn state_count(&self) -> usize {
        self.data.states.len()
    }

    /// Number of states excluding the start state; the encoding width.
    pub fn non_start_count(&self) -> usize {
        self.data.states.len() - 1
    }

    pub fn states(&self) -> &[StateRepr] {
        &self.data.states
    }

    pub fn state(&self, id: StateId) -> &StateRepr {
        &self.data.states[id]
    }

    pub fn state_id(&self, repr: &StateRepr) -> Option<StateId> {
        self.index.get(repr).copied()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.data.transitions
    }

    pub fn transition(&self, id: TransitionId) -> &Transition {
        &self.data.transitions[id]
    }

    pub fn find_transition(&self, source: StateId, label: &str, target: StateId) -> Option<TransitionId> {
        self.outgoing[source]
            .iter()
            .copied()
            .find(|&t| self.data.transitions[t].label == label && self.data.transitions[t].target == target)
    }

    pub fn outgoing(&self, state: StateId) -> &[TransitionId] {
        &self.outgoing[state]
    }

    pub fn incoming(&self, state: StateId) -> &[TransitionId] {
        &self.incoming[state]
    }

    /// `s•`: distinct successor states in first-seen order.
    pub fn successors(&self, state: StateId) -> Vec<StateId> {
        let mut out: Vec<StateId> = Vec::new();
        for &t in &self.outgoing[state] {
            let target = self.data.transitions[t].target;
            if !out.contains(&target) {
                out.push(target);
            }
        }
        out
    }

    pub fn labels(&self) -> &BTreeSet<String> {
        &self.labels
    }

    pub fn is_accepting(&self, state: StateId) -> bool {
        self.data.end_counts[state] > 0
    }

    /// Number of log traces that ended in `state`.
    pub fn end_count(&self, state: StateId) -> usize {
        self.data.end_counts[state]
    }

    pub fn accepting_states(&self) -> Vec<StateId> {
        (0..self.state_count()).filter(|&s| self.is_accepting(s)).collect()
    }

    pub fn map_state(&self, events: &[Event]) -> MappedState {
        let repr = self.data.abstraction.represent(events);
        let state = self.state_id(&repr);
        MappedState { repr, state }
    }

    pub fn map_labels<S: AsRef<str>>(&self, labels: &[S]) -> MappedState {
        let repr = self.data.abstraction.represent_labels(labels);
        let state = self.state_id(&repr);
        MappedState { repr, state }
    }

    /// Encodes the state of a prefix over the non-start states: one-hot when
    /// the prefix fits, otherwise normalized similarities.
    pub fn encode_state(&self, events: &[Event], sim: Similarity) -> StateVector {
        if events.is_empty() {
            return StateVector {
                values: vec![0.0; self.non_start_count()],
                kind: EncodingKind::Start,
            };
        }
        self.encode_mapped(&self.map_state(events), sim)
    }

    /// Encoding of an already mapped prefix.
    pub fn encode_mapped(&self, mapped: &MappedState, sim: Similarity) -> StateVector {
        let n = self.non_start_count();
        let mut values = vec![0.0; n];
        let kind = match mapped.state {
            Some(START) => EncodingKind::Start,
            Some(id) => {
                values[id - 1] = 1.0;
                EncodingKind::Fitting
            }
            None => {
                let mut den = 0.0;
                for (v, state) in values.iter_mut().zip(&self.data.states[1..]) {
                    *v = sim(&mapped.repr, state);
                    den += *v;
                }
                if den > 0.0 {
                    values.iter_mut().for_each(|v| *v /= den);
                    EncodingKind::Similarity
                } else {
                    log::debug!("degenerate state encoding for {}", mapped.repr);
                    values.iter_mut().for_each(|v| *v = 1.0 / n as f64);
                    EncodingKind::Degenerate
                }
            }
        };
        StateVector { values, kind }
    }

    /// Drops trailing events until the prefix maps onto a known state.
    pub fn safety_prefix(&self, events: &[Event]) -> SafetyPrefix {
        for len in (0..=events.len()).rev() {
            if let Some(state) = self.map_state(&events[..len]).state {
                return SafetyPrefix {
                    state,
                    prefix_len: len,
                    truncated: len < events.len(),
                    fallback: len == 0 && !events.is_empty(),
                };
            }
        }
        // The empty prefix always maps onto the start state.
        unreachable!("start state missing from transition system")
    }

    /// Whether the activity sequence is a walk from the start state to an
    /// accepting state.
    pub fn is_compliant<S: AsRef<str>>(&self, labels: &[S]) -> bool {
        let mut state = START;
        for k in 0..labels.len() {
            let Some(next) = self.map_labels(&labels[..k + 1]).state else {
                return false;
            };
            if self.find_transition(state, labels[k].as_ref(), next).is_none() {
                return false;
            }
            state = next;
        }
        self.is_accepting(state)
    }

    /// Graphviz rendering; accepting states are double circles.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph ts {\n  rankdir=LR;\n");
        for (i, s) in self.data.states.iter().enumerate() {
            let shape = if self.is_accepting(i) {
                "doublecircle"
            } else {
                "circle"
            };
            let label = format!("s{i}\\n{s}").replace('"', "\\\"");
            let _ = writeln!(out, "  s{i} [shape={shape}, label=\"{label}\"];");
        }
        for t in &self.data.transitions {
            let label = t.label.replace('"', "\\\"");
            let _ = writeln!(out, "  s{} -> s{} [label=\"{label} ({})\"];", t.source, t.target, t.count);
        }
        out.push_str("}\n");
        out
    }
}
