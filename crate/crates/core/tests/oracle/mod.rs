//! Brute-force reference computations shared by the integration tests and
//! the acceptance report.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use ppm_core::event_log::Event;
use ppm_core::predictors::{DatsModel, PredictorKind, TrainConfig};
use ppm_core::transition_system::StateId;
use ppm_core::{parse_log, EventLog};

/// Posteriors of a smoothed Bernoulli naive Bayes computed from raw counts.
/// `data` holds (features, class) pairs with binary features.
pub fn nb_posterior(data: &[(Vec<u8>, usize)], classes: usize, x: &[u8], alpha: f64) -> Vec<f64> {
    let n = data.len() as f64;
    let mut joint = Vec::new();
    for y in 0..classes {
        let rows: Vec<&Vec<u8>> = data.iter().filter(|(_, c)| *c == y).map(|(f, _)| f).collect();
        let ny = rows.len() as f64;
        let mut p = (ny + alpha) / (n + classes as f64 * alpha);
        for (j, &v) in x.iter().enumerate() {
            let hits = rows.iter().filter(|r| r[j] == v).count() as f64;
            p *= (hits + alpha) / (ny + 2.0 * alpha);
        }
        joint.push(p);
    }
    let z: f64 = joint.iter().sum();
    joint.into_iter().map(|p| p / z).collect()
}

/// Remaining times grouped by the set of activities seen so far, scanning
/// every non-empty prefix of every trace.
pub fn vda_prefix_scan(log: &EventLog) -> BTreeMap<BTreeSet<String>, Vec<i64>> {
    let mut out: BTreeMap<BTreeSet<String>, Vec<i64>> = BTreeMap::new();
    for t in log.traces() {
        let end = t.events.last().unwrap().timestamp;
        let mut seen = BTreeSet::new();
        for e in &t.events {
            seen.insert(e.activity.clone());
            out.entry(seen.clone()).or_default().push(end - e.timestamp);
        }
    }
    out
}

/// Random log over activities `a`, `b`, `c` with one nominal attribute on the
/// first event. Full set abstraction keeps the system at 8 states or fewer.
pub fn random_log(rng: &mut ChaCha8Rng, cases: usize) -> EventLog {
    let mut csv = String::from("case_id,activity,timestamp,attr:kind:nominal\n");
    let acts = ["a", "b", "c"];
    for c in 0..cases {
        let len = rng.gen_range(1..=6);
        let mut ts = c as i64 * 100_000;
        for i in 0..len {
            let a = acts[rng.gen_range(0..3)];
            let kind = if i == 0 { ["x", "y"][rng.gen_range(0..2)] } else { "" };
            csv.push_str(&format!("c{c},{a},{ts},{kind}\n"));
            ts += rng.gen_range(60..7200);
        }
    }
    parse_log(csv.as_bytes()).unwrap()
}

pub fn quick_dats_config() -> TrainConfig {
    let mut cfg = TrainConfig::new(PredictorKind::Dats);
    cfg.svr.grid = None;
    cfg
}

pub struct WalkOracle {
    pub best_probability: f64,
    /// Every walk whose probability is within 1e-12 of the best.
    pub best_walks: Vec<Vec<StateId>>,
    pub walks_enumerated: usize,
}

/// Enumerates every walk of at most `max_len` steps from the state of
/// `events` that ends in an accepting state. Branch probabilities come from
/// the model's classifiers; states away from the current one are scored
/// with the activity that most often leads into them in `log`.
pub fn enumerate_walks(model: &DatsModel, log: &EventLog, events: &[Event], max_len: usize) -> WalkOracle {
    let ts = &model.ts;
    let sp = ts.safety_prefix(events);
    let x = model.schema.encode(&events[..sp.prefix_len], None);

    // entering activity per state, counted on the log itself
    let mut entering: BTreeMap<StateId, BTreeMap<String, usize>> = BTreeMap::new();
    for t in log.traces() {
        for k in 1..=t.len() {
            let s = ts.map_state(t.prefix(k)).state.unwrap();
            *entering.entry(s).or_default().entry(t.events[k - 1].activity.clone()).or_default() += 1;
        }
    }
    let features = |s: StateId| -> Vec<f64> {
        if s == sp.state {
            return x.clone();
        }
        let counts = &entering[&s];
        let max = counts.values().max().unwrap();
        let label = counts.iter().find(|(_, c)| *c == max).unwrap().0;
        model.schema.with_activity(&x, label)
    };
    let edge = |s: StateId, t: StateId| -> f64 {
        let succ = ts.successors(s);
        if succ.len() == 1 {
            return 1.0;
        }
        model
            .branch_distribution(s, &features(s))
            .into_iter()
            .find(|(c, _)| *c == t)
            .map_or(0.0, |(_, p)| p)
    };

    let mut finished: Vec<(Vec<StateId>, f64)> = Vec::new();
    let mut stack = vec![(vec![sp.state], 1.0)];
    while let Some((walk, p)) = stack.pop() {
        let s = *walk.last().unwrap();
        if ts.is_accepting(s) {
            finished.push((walk.clone(), p));
        }
        if walk.len() > max_len {
            continue;
        }
        for t in ts.successors(s) {
            let mut w = walk.clone();
            w.push(t);
            stack.push((w, p * edge(s, t)));
        }
    }
    let best = finished.iter().map(|(_, p)| *p).fold(0.0, f64::max);
    let mut best_walks: Vec<Vec<StateId>> =
        finished.iter().filter(|(_, p)| *p >= best - 1e-12).map(|(w, _)| w.clone()).collect();
    best_walks.sort();
    WalkOracle {
        best_probability: best,
        best_walks,
        walks_enumerated: finished.len(),
    }
}
