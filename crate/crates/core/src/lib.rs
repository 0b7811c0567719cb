//! Predictive monitoring of running business process cases.
//!
//! Learns from a historical event log and predicts, for a partial trace, its
//! remaining time and its most likely future activities. Four predictors are
//! available:
//!
//! * `vda`: transition system whose states carry remaining-time measurements;
//! * `svr`: one ε-SVR over the last activity and last attribute values;
//! * `svr_ts`: the same SVR with the (similarity-encoded) transition-system
//!   state appended to the features;
//! * `dats`: transition system with a Naïve Bayes branch classifier per
//!   branching state and an ε-SVR per transition.

pub mod abstraction;
pub mod collections;
pub mod encoding;
pub mod evaluation;
pub mod fixtures;
pub mod naive_bayes;
pub mod path;
pub mod predictors;
pub mod service;
pub mod svr;
pub mod transition_system;
pub mod event_log;

pub use abstraction::{AbstractionKind, EventAbstraction, StateAbstraction, StateRepr};
pub use event_log::{parse_log, read_log, rem, serialize_log, Event, EventLog, Trace};
pub use predictors::{PredictorKind, PredictorModel};
pub use transition_system::TransitionSystem;
