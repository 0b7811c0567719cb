//! Small hand-made logs used by tests, the CLI smoke checks and the demo.

use crate::abstraction::{AbstractionKind, EventAbstraction, StateAbstraction};
use crate::event_log::{parse_log, AttributeSchema, Event, EventLog, Trace};
use crate::encoding::{EncodingSchema, FeatureKind};
use crate::naive_bayes::NaiveBayes;
use crate::predictors::{DatsModel, NonBranchingRule, Regressor};
use crate::abstraction::StateRepr;
use crate::transition_system::TransitionSystem;

/// Twelve-event help-desk style fragment: three cases, four events each.
pub const TABLE_1: &str = "\
case_id,activity,timestamp,attr:resource:nominal,attr:category:nominal,attr:amount:numeric
65923,A,20-02-2002:11.11,Jack,-,1000
65923,B,20-02-2002:13.31,Jack,Gold,1000
65923,C,21-02-2002:08.40,John,Gold,900
65923,F,22-02-2002:15.51,Joe,Gold,900
65924,A,19-02-2002:09.10,Jack,-,200
65924,B,19-02-2002:13.22,John,Standard,200
65924,D,20-02-2002:17.17,John,Standard,200
65924,F,21-02-2002:10.38,Joe,Standard,200
65925,A,25-02-2002:10.50,Jack,-,850
65925,B,25-02-2002:13.01,John,Gold,850
65925,E,25-02-2002:16.42,Joe,Gold,500
65925,F,26-02-2002:09.30,Joe,Gold,500
";

pub fn table_1() -> EventLog {
    parse_log(TABLE_1.as_bytes()).expect("fixture parses")
}

/// Attribute-free events with one-hour spacing.
pub fn events(labels: &[&str]) -> Vec<Event> {
    labels
        .iter()
        .enumerate()
        .map(|(i, a)| Event::new("q", *a, i as i64 * 3600, Vec::new()))
        .collect()
}

/// `copies` cases of every variant, one-hour spacing, no attributes.
pub fn log_from_variants(variants: &[&[&str]], copies: usize) -> EventLog {
    let mut traces = Vec::new();
    for (v, labels) in variants.iter().enumerate() {
        for c in 0..copies {
            let case_id = format!("{v:03}-{c:04}");
            let events = labels
                .iter()
                .enumerate()
                .map(|(i, a)| Event::new(case_id.clone(), *a, i as i64 * 3600, Vec::new()))
                .collect();
            traces.push(Trace::new(case_id, events));
        }
    }
    EventLog::new(AttributeSchema::default(), traces).expect("fixture is valid")
}

/// One case each of `<A,B,C,F>`, `<A,B,D,F>` and `<A,B,E,F>`.
pub fn three_variants() -> EventLog {
    log_from_variants(&[&["A", "B", "C", "F"], &["A", "B", "D", "F"], &["A", "B", "E", "F"]], 1)
}

pub fn three_variant_set_ts() -> TransitionSystem {
    TransitionSystem::build(&three_variants(), StateAbstraction::set(), EventAbstraction::ActivityName)
}

/// DATS model on [`three_variants`] whose branch at `{B}` has probabilities
/// (0.6, 0.1, 0.3) towards C, D, E and constant estimates 2h, 3h, 1h.
/// Returns the model and the trace `<A, B>`.
pub fn weighted_dats() -> (DatsModel, Vec<Event>) {
    let log = three_variants();
    let ts = TransitionSystem::build(
        &log,
        StateAbstraction::with_horizon(AbstractionKind::Set, 1),
        EventAbstraction::ActivityName,
    );
    let schema = EncodingSchema::fit(&log, None);
    let b = ts.state_id(&StateRepr::set(["B"])).unwrap();
    let mut nb = NaiveBayes::new(vec![FeatureKind::Continuous; schema.dim()], 1.0);
    let x = schema.encode(&events(&["A", "B"]), None);
    let mut regressors = vec![Regressor::Constant { value: 0.0 }; ts.transitions().len()];
    for (label, n, hours) in [("C", 11, 2.0), ("D", 1, 3.0), ("E", 5, 1.0)] {
        let target = ts.state_id(&StateRepr::set([label])).unwrap();
        for _ in 0..n {
            nb.update(&x, target).unwrap();
        }
        let tid = ts.find_transition(b, label, target).unwrap();
        regressors[tid] = Regressor::Constant { value: hours * 3600.0 };
    }
    let model = DatsModel {
        training_sizes: vec![0; regressors.len()],
        classifiers: [(b, nb)].into_iter().collect(),
        regressors,
        ts,
        schema,
        global_mean: 0.0,
        non_branching: NonBranchingRule::Outgoing,
    };
    (model, events(&["A", "B"]))
}
