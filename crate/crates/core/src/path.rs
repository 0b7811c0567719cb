//! Most likely continuation of a running case as a shortest-path problem:
//! edge cost is −ln p, so the cheapest route to an accepting state is the
//! most probable one.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transition_system::{StateId, TransitionSystem};

pub const P_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PathError {
    #[error("no accepting state is reachable from state {0}")]
    Unreachable(StateId),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPrediction {
    /// Visited states, starting with the current one.
    pub states: Vec<StateId>,
    pub activities: Vec<String>,
    pub probability: f64,
    /// Sum of clamped edge costs.
    pub cost: f64,
}

pub fn edge_cost(p: f64) -> f64 {
    -p.clamp(P_FLOOR, 1.0 - P_FLOOR).ln()
}

#[derive(PartialEq)]
struct Entry {
    cost: f64,
    state: StateId,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.state.cmp(&self.state))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Best-first search over an abstract graph. `succ(s)` lists the successors
/// of `s`, `prob(s, t)` the probability of moving from `s` to `t`. Returns the
/// visited states and the product of the unclamped edge probabilities.
pub fn best_first<S, A, P>(
    n_states: usize,
    from: StateId,
    succ: S,
    accepting: A,
    mut prob: P,
) -> Option<(Vec<StateId>, f64, f64)>
where
    S: Fn(StateId) -> Vec<StateId>,
    A: Fn(StateId) -> bool,
    P: FnMut(StateId, StateId) -> f64,
{
    let mut dist = vec![f64::INFINITY; n_states];
    let mut prev: Vec<Option<(StateId, f64)>> = vec![None; n_states];
    let mut done = vec![false; n_states];
    let mut heap = BinaryHeap::new();
    dist[from] = 0.0;
    heap.push(Entry { cost: 0.0, state: from });
    while let Some(Entry { cost, state }) = heap.pop() {
        if done[state] {
            continue;
        }
        done[state] = true;
        if accepting(state) {
            let mut states = vec![state];
            let mut probability = 1.0;
            let mut s = state;
            while let Some((p_state, p)) = prev[s] {
                states.push(p_state);
                probability *= p;
                s = p_state;
            }
            states.reverse();
            return Some((states, probability, cost));
        }
        for next in succ(state) {
            let p = prob(state, next);
            let c = cost + edge_cost(p);
            if !done[next] && c < dist[next] {
                dist[next] = c;
                prev[next] = Some((state, p));
                heap.push(Entry { cost: c, state: next });
            }
        }
    }
    None
}

/// Most likely path from `from` to an accepting state of `ts`. Labels are the
/// most frequent transition label between consecutive states.
pub fn most_likely_path<P>(ts: &TransitionSystem, from: StateId, prob: P) -> Result<PathPrediction, PathError>
where
    P: FnMut(StateId, StateId) -> f64,
{
    let (states, probability, cost) = best_first(
        ts.state_count(),
        from,
        |s| ts.successors(s),
        |s| ts.is_accepting(s),
        prob,
    )
    .ok_or(PathError::Unreachable(from))?;
    let activities = states.windows(2).map(|w| step_label(ts, w[0], w[1])).collect();
    Ok(PathPrediction {
        states,
        activities,
        probability,
        cost,
    })
}

fn step_label(ts: &TransitionSystem, s: StateId, t: StateId) -> String {
    let mut best: Option<(usize, &str)> = None;
    for &id in ts.outgoing(s) {
        let tr = ts.transition(id);
        if tr.target == t && best.map_or(true, |(c, _)| tr.count > c) {
            best = Some((tr.count, &tr.label));
        }
    }
    best.map(|(_, l)| l.to_string()).unwrap_or_default()
}

/// Branch probabilities estimated from transition counts.
pub fn frequency_probability(ts: &TransitionSystem, s: StateId, t: StateId) -> f64 {
    let mut total = 0;
    let mut hit = 0;
    for &id in ts.outgoing(s) {
        let tr = ts.transition(id);
        total += tr.count;
        if tr.target == t {
            hit += tr.count;
        }
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}
