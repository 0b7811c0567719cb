//! Remaining-time predictors behind one interface, plus model archives.
//!
//! * `vda`: states annotated with the remaining times of the log prefixes
//!   that reach them;
//! * `svr` / `svr_ts`: a single regressor over the prefix encoding, the
//!   latter with the state block appended;
//! * `dats`: Naïve Bayes at branching states and one regressor per
//!   transition, combined as Σ p̂(s′)·τ̂(s→s′).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{EventAbstraction, StateAbstraction};
use crate::collections::Multiset;
use crate::encoding::{build_training_set, EncodingSchema, TrainingSet};
use crate::event_log::{rem, AttributeSchema, Event, EventLog};
use crate::naive_bayes::NaiveBayes;
use crate::path::{frequency_probability, most_likely_path, PathError, PathPrediction};
use crate::svr::{self, GridConfig, Kernel, KernelFamily, SvrError, SvrModel, SvrParams};
use crate::transition_system::{StateId, TransitionId, TransitionSystem, START};

pub const ARCHIVE_FORMAT: &str = "ppm-model";
pub const ARCHIVE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("cannot train on an empty log")]
    EmptyLog,
    #[error("regressor for transition {transition}: {source}")]
    Transition { transition: TransitionId, source: SvrError },
    #[error(transparent)]
    Svr(#[from] SvrError),
    #[error("{0} models do not predict paths")]
    NoPath(PredictorKind),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("model archive: {0}")]
    Archive(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    Vda,
    Svr,
    SvrTs,
    Dats,
}

impl PredictorKind {
    pub const ALL: [PredictorKind; 4] = [PredictorKind::Vda, PredictorKind::Svr, PredictorKind::SvrTs, PredictorKind::Dats];

    pub fn name(self) -> &'static str {
        match self {
            PredictorKind::Vda => "vda",
            PredictorKind::Svr => "svr",
            PredictorKind::SvrTs => "svr_ts",
            PredictorKind::Dats => "dats",
        }
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PredictorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "vda" => Ok(PredictorKind::Vda),
            "svr" => Ok(PredictorKind::Svr),
            "svr_ts" | "svr-ts" | "svr+ts" => Ok(PredictorKind::SvrTs),
            "dats" => Ok(PredictorKind::Dats),
            other => Err(format!("unknown predictor '{other}' (expected vda, svr, svr_ts or dats)")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    #[default]
    Mean,
    Median,
}

/// Which regressor a DATS model uses at a state with exactly one successor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonBranchingRule {
    /// The transition that entered the current state. Its regressor was
    /// fitted on remaining times taken one state earlier.
    Incoming,
    /// The transition leaving the current state, i.e. the branching formula
    /// with a single successor.
    #[default]
    Outgoing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrConfig {
    pub family: KernelFamily,
    /// Used when `grid` is `None`.
    pub c: f64,
    pub gamma: f64,
    pub grid: Option<GridConfig>,
    /// Grid search runs on a seeded sample of at most this many examples.
    pub grid_sample: usize,
    /// ε as a fraction of the target standard deviation.
    pub epsilon_fraction: f64,
    /// Train on targets divided by their standard deviation.
    pub scale_targets: bool,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvrConfig {
    fn default() -> Self {
        Self {
            family: KernelFamily::Rbf,
            c: 10.0,
            gamma: 0.1,
            grid: Some(GridConfig::default()),
            grid_sample: 1000,
            epsilon_fraction: 0.01,
            scale_targets: true,
            tol: svr::DEFAULT_TOL,
            max_iter: svr::DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: PredictorKind,
    pub abstraction: StateAbstraction,
    pub statistic: Statistic,
    pub svr: SvrConfig,
    pub nb_alpha: f64,
    pub scale_numeric: bool,
    pub non_branching: NonBranchingRule,
    pub keep_history: bool,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(kind: PredictorKind) -> Self {
        Self {
            kind,
            ..Default::default()
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            kind: PredictorKind::Dats,
            abstraction: StateAbstraction::set(),
            statistic: Statistic::Mean,
            svr: SvrConfig::default(),
            nb_alpha: 1.0,
            scale_numeric: true,
            non_branching: NonBranchingRule::Outgoing,
            keep_history: true,
            seed: 0,
        }
    }
}

/// A fitted remaining-time estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Regressor {
    Constant { value: f64 },
    Svr { model: SvrModel, scale: f64 },
}

impl Regressor {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Regressor::Constant { value } => *value,
            Regressor::Svr { model, scale } => model.predict(x).expect("encoding matches model") * scale,
        }
    }

    pub fn svr(&self) -> Option<&SvrModel> {
        match self {
            Regressor::Svr { model, .. } => Some(model),
            Regressor::Constant { .. } => None,
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Fits a regressor on `tr`; fewer than two examples or constant targets
/// give a constant, empty sets give `fallback`.
pub fn fit_regressor(tr: &TrainingSet, cfg: &SvrConfig, fallback: f64, seed: u64) -> Result<Regressor, SvrError> {
    if tr.is_empty() {
        return Ok(Regressor::Constant { value: fallback });
    }
    let mu = mean(&tr.y);
    if tr.len() < 2 {
        return Ok(Regressor::Constant { value: mu });
    }
    let sd = (tr.y.iter().map(|y| (y - mu) * (y - mu)).sum::<f64>() / tr.len() as f64).sqrt();
    if sd == 0.0 {
        return Ok(Regressor::Constant { value: mu });
    }
    let scale = if cfg.scale_targets { sd } else { 1.0 };
    let scaled = TrainingSet {
        x: tr.x.clone(),
        y: tr.y.iter().map(|y| y / scale).collect(),
    };
    let epsilon = cfg.epsilon_fraction * sd / scale;
    let kernel_of = |gamma: Option<f64>| match (cfg.family, gamma) {
        (KernelFamily::Rbf, Some(gamma)) => Kernel::Rbf { gamma },
        (KernelFamily::Rbf, None) => Kernel::Rbf { gamma: cfg.gamma },
        (KernelFamily::Linear, _) => Kernel::Linear,
    };
    let mut c = cfg.c;
    let mut gamma = None;
    if let Some(grid) = &cfg.grid {
        let sample = if scaled.len() > cfg.grid_sample {
            let mut idx: Vec<usize> = (0..scaled.len()).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            idx.truncate(cfg.grid_sample);
            idx.sort_unstable();
            scaled.subset(&idx)
        } else {
            scaled.clone()
        };
        if sample.len() >= 2 * grid.folds {
            let grid = GridConfig {
                family: cfg.family,
                seed,
                tol: cfg.tol,
                max_iter: cfg.max_iter,
                ..grid.clone()
            };
            let best = svr::grid_search(&sample, epsilon, &grid)?;
            if sample.len() == scaled.len() {
                return Ok(Regressor::Svr { model: best.model, scale });
            }
            c = best.c;
            gamma = best.gamma;
        }
    }
    let params = SvrParams {
        c,
        epsilon,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
    };
    let model = svr::train(&scaled, kernel_of(gamma), params)?;
    Ok(Regressor::Svr { model, scale })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VdaModel {
    pub ts: TransitionSystem,
    /// Remaining-time measurements per state, indexed by state id.
    pub measurements: Vec<Multiset<i64>>,
    pub statistic: Statistic,
    pub global_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrPredictor {
    pub schema: EncodingSchema,
    pub ts: Option<TransitionSystem>,
    pub regressor: Regressor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatsModel {
    pub ts: TransitionSystem,
    pub schema: EncodingSchema,
    /// Classifiers at branching states; classes are successor states.
    #[serde(with = "crate::collections::pairs")]
    pub classifiers: BTreeMap<StateId, NaiveBayes>,
    /// One regressor per transition, indexed by transition id.
    pub regressors: Vec<Regressor>,
    pub training_sizes: Vec<usize>,
    pub global_mean: f64,
    pub non_branching: NonBranchingRule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PredictorModel {
    Vda(VdaModel),
    Svr(SvrPredictor),
    SvrTs(SvrPredictor),
    Dats(DatsModel),
}

/// A remaining-time estimate and how it was obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RemainingPrediction {
    pub seconds: f64,
    /// State the prediction was read from, after the safety mechanism.
    pub state: Option<StateId>,
    /// Trailing events dropped by the safety mechanism.
    pub dropped: usize,
    /// Global mean used because no state estimate was available.
    pub fallback: bool,
}

impl RemainingPrediction {
    fn plain(seconds: f64) -> Self {
        Self {
            seconds: seconds.max(0.0),
            state: None,
            dropped: 0,
            fallback: false,
        }
    }

    pub fn used_safety(&self) -> bool {
        self.dropped > 0 || self.fallback
    }
}

pub fn statistic_of(m: &Multiset<i64>, stat: Statistic) -> Option<f64> {
    let n = m.cardinality();
    if n == 0 {
        return None;
    }
    match stat {
        Statistic::Mean => Some(m.iter().map(|(v, c)| *v as f64 * c as f64).sum::<f64>() / n as f64),
        Statistic::Median => {
            let mut seen = 0;
            let mut lower = None;
            for (v, c) in m.iter() {
                seen += c;
                if lower.is_none() && 2 * seen >= n {
                    if n % 2 == 1 || 2 * seen > n {
                        return Some(*v as f64);
                    }
                    lower = Some(*v);
                } else if let Some(lo) = lower {
                    return Some((lo as f64 + *v as f64) / 2.0);
                }
            }
            lower.map(|v| v as f64)
        }
    }
}

pub fn train_vda(log: &EventLog, abstraction: StateAbstraction, statistic: Statistic) -> VdaModel {
    let ts = TransitionSystem::build(log, abstraction, EventAbstraction::ActivityName);
    let mut measurements = vec![Multiset::new(); ts.state_count()];
    for t in log.traces() {
        for k in 1..=t.len() {
            let s = ts.map_state(t.prefix(k)).state.expect("log prefixes fit their own system");
            measurements[s].insert(rem(&t.events, k));
        }
    }
    VdaModel {
        ts,
        measurements,
        statistic,
        global_mean: log.mean_remaining(),
    }
}

impl VdaModel {
    pub fn predict(&self, events: &[Event]) -> RemainingPrediction {
        let sp = self.ts.safety_prefix(events);
        let dropped = events.len() - sp.prefix_len;
        match statistic_of(&self.measurements[sp.state], self.statistic) {
            Some(v) if !sp.fallback => RemainingPrediction {
                seconds: v.max(0.0),
                state: Some(sp.state),
                dropped,
                fallback: false,
            },
            _ => RemainingPrediction {
                seconds: self.global_mean,
                state: Some(sp.state),
                dropped,
                fallback: true,
            },
        }
    }
}

pub fn train_svr(log: &EventLog, cfg: &TrainConfig, with_state: bool) -> Result<SvrPredictor, PredictorError> {
    if log.is_empty() {
        return Err(PredictorError::EmptyLog);
    }
    let ts = with_state.then(|| TransitionSystem::build(log, cfg.abstraction, EventAbstraction::ActivityName));
    let schema = EncodingSchema::fit_with(log, ts.as_ref(), cfg.scale_numeric);
    let tr = build_training_set(log, &schema, ts.as_ref());
    let regressor = fit_regressor(&tr, &cfg.svr, log.mean_remaining(), cfg.seed)?;
    Ok(SvrPredictor { schema, ts, regressor })
}

impl SvrPredictor {
    pub fn predict(&self, events: &[Event]) -> RemainingPrediction {
        let x = self.schema.encode(events, self.ts.as_ref());
        RemainingPrediction::plain(self.regressor.predict(&x))
    }
}

/// Per-transition training sets: the example for event i + 1 of a trace is
/// attached to the transition it fires, with the encoding of the first i
/// events and rem at event i.
pub fn dats_training_sets(
    log: &EventLog,
    ts: &TransitionSystem,
    schema: &EncodingSchema,
) -> (Vec<TrainingSet>, Vec<(StateId, Vec<f64>, StateId)>) {
    let mut sets = vec![TrainingSet::new(); ts.transitions().len()];
    let mut branch_examples = Vec::new();
    for t in log.traces() {
        let states: Vec<StateId> = (0..=t.len())
            .map(|k| ts.map_state(t.prefix(k)).state.expect("log prefixes fit their own system"))
            .collect();
        for i in 1..t.len() {
            let (s, s2) = (states[i], states[i + 1]);
            let tid = ts
                .find_transition(s, &t.events[i].activity, s2)
                .expect("log steps are transitions");
            let x = schema.encode(t.prefix(i), None);
            sets[tid].push(x.clone(), rem(&t.events, i) as f64);
            if ts.successors(s).len() >= 2 {
                branch_examples.push((s, x, s2));
            }
        }
    }
    (sets, branch_examples)
}

pub fn train_dats(log: &EventLog, cfg: &TrainConfig) -> Result<DatsModel, PredictorError> {
    if log.is_empty() {
        return Err(PredictorError::EmptyLog);
    }
    let ts = TransitionSystem::build(log, cfg.abstraction, EventAbstraction::ActivityName);
    let schema = EncodingSchema::fit_with(log, None, cfg.scale_numeric);
    let global = log.mean_remaining();
    let (sets, branch_examples) = dats_training_sets(log, &ts, &schema);

    let mut classifiers = BTreeMap::new();
    for s in 0..ts.state_count() {
        let succ = ts.successors(s);
        if succ.len() >= 2 {
            let mut nb = NaiveBayes::new(schema.feature_kinds(), cfg.nb_alpha);
            for s2 in succ {
                nb.add_class(s2);
            }
            classifiers.insert(s, nb);
        }
    }
    for (s, x, s2) in &branch_examples {
        classifiers
            .get_mut(s)
            .expect("branching state")
            .update(x, *s2)
            .expect("encoding matches classifier");
    }

    let mut regressors = Vec::with_capacity(sets.len());
    for (tid, set) in sets.iter().enumerate() {
        let r = fit_regressor(set, &cfg.svr, global, cfg.seed.wrapping_add(tid as u64))
            .map_err(|source| PredictorError::Transition { transition: tid, source })?;
        regressors.push(r);
    }
    log::info!(
        "dats: {} states, {} transitions, {} classifiers",
        ts.state_count(),
        regressors.len(),
        classifiers.len()
    );
    Ok(DatsModel {
        training_sizes: sets.iter().map(TrainingSet::len).collect(),
        ts,
        schema,
        classifiers,
        regressors,
        global_mean: global,
        non_branching: cfg.non_branching,
    })
}

impl DatsModel {
    /// Count-weighted mean of the regressors on transitions `s → target`.
    fn tau(&self, s: StateId, target: StateId, x: &[f64]) -> f64 {
        let (mut sum, mut weight) = (0.0, 0.0);
        for &tid in self.ts.outgoing(s) {
            let t = self.ts.transition(tid);
            if t.target == target {
                sum += t.count as f64 * self.regressors[tid].predict(x);
                weight += t.count as f64;
            }
        }
        sum / weight
    }

    /// Probability of each successor of `s`, in successor order.
    pub fn branch_distribution(&self, s: StateId, x: &[f64]) -> Vec<(StateId, f64)> {
        let succ = self.ts.successors(s);
        match self.classifiers.get(&s) {
            Some(nb) if nb.total() > 0 => nb.predict(x).expect("encoding matches classifier"),
            _ => succ.iter().map(|&t| (t, frequency_probability(&self.ts, s, t))).collect(),
        }
    }

    /// Σ p̂·τ̂ at a branching state, before clamping.
    pub fn branch_estimate(&self, s: StateId, x: &[f64]) -> f64 {
        self.branch_distribution(s, x)
            .into_iter()
            .map(|(t, p)| p * self.tau(s, t, x))
            .sum()
    }

    pub fn predict(&self, events: &[Event]) -> RemainingPrediction {
        let sp = self.ts.safety_prefix(events);
        let dropped = events.len() - sp.prefix_len;
        let fallback = RemainingPrediction {
            seconds: self.global_mean,
            state: Some(sp.state),
            dropped,
            fallback: true,
        };
        if sp.fallback || sp.state == START {
            return fallback;
        }
        let prefix = &events[..sp.prefix_len];
        let s = sp.state;
        let x = self.schema.encode(prefix, None);
        let succ = self.ts.successors(s);
        let value = match succ.len() {
            0 => 0.0,
            1 => {
                let incoming = match self.non_branching {
                    NonBranchingRule::Incoming => {
                        let before = &prefix[..prefix.len() - 1];
                        self.ts.map_state(before).state.and_then(|p| {
                            self.ts
                                .find_transition(p, &prefix[prefix.len() - 1].activity, s)
                        })
                    }
                    NonBranchingRule::Outgoing => None,
                };
                match incoming {
                    Some(tid) => self.regressors[tid].predict(&x),
                    None if self.non_branching == NonBranchingRule::Outgoing => self.tau(s, succ[0], &x),
                    None => return fallback,
                }
            }
            _ => self.branch_estimate(s, &x),
        };
        RemainingPrediction {
            seconds: value.max(0.0),
            state: Some(s),
            dropped,
            fallback: false,
        }
    }

    /// Classifiers downstream of the current state see the current attribute
    /// values with the activity that most often enters their state.
    pub fn predict_path(&self, events: &[Event]) -> Result<PathPrediction, PathError> {
        let sp = self.ts.safety_prefix(events);
        let x = self.schema.encode(&events[..sp.prefix_len], None);
        let mut cache: BTreeMap<StateId, Vec<(StateId, f64)>> = BTreeMap::new();
        most_likely_path(&self.ts, sp.state, |s, t| {
            let dist = cache.entry(s).or_insert_with(|| {
                if self.ts.successors(s).len() == 1 {
                    return vec![(t, 1.0)];
                }
                let entering = self
                    .ts
                    .incoming(s)
                    .iter()
                    .map(|&id| self.ts.transition(id))
                    .max_by(|a, b| a.count.cmp(&b.count).then_with(|| b.label.cmp(&a.label)));
                match entering {
                    Some(tr) if s != sp.state => self.branch_distribution(s, &self.schema.with_activity(&x, &tr.label)),
                    _ => self.branch_distribution(s, &x),
                }
            });
            dist.iter().find(|(c, _)| *c == t).map_or(0.0, |(_, p)| *p)
        })
    }
}

pub fn train(log: &EventLog, cfg: &TrainConfig) -> Result<PredictorModel, PredictorError> {
    if log.is_empty() {
        return Err(PredictorError::EmptyLog);
    }
    Ok(match cfg.kind {
        PredictorKind::Vda => PredictorModel::Vda(train_vda(log, cfg.abstraction, cfg.statistic)),
        PredictorKind::Svr => PredictorModel::Svr(train_svr(log, cfg, false)?),
        PredictorKind::SvrTs => PredictorModel::SvrTs(train_svr(log, cfg, true)?),
        PredictorKind::Dats => PredictorModel::Dats(train_dats(log, cfg)?),
    })
}

impl PredictorModel {
    pub fn kind(&self) -> PredictorKind {
        match self {
            PredictorModel::Vda(_) => PredictorKind::Vda,
            PredictorModel::Svr(_) => PredictorKind::Svr,
            PredictorModel::SvrTs(_) => PredictorKind::SvrTs,
            PredictorModel::Dats(_) => PredictorKind::Dats,
        }
    }

    pub fn transition_system(&self) -> Option<&TransitionSystem> {
        match self {
            PredictorModel::Vda(m) => Some(&m.ts),
            PredictorModel::Svr(m) | PredictorModel::SvrTs(m) => m.ts.as_ref(),
            PredictorModel::Dats(m) => Some(&m.ts),
        }
    }

    pub fn predict_remaining(&self, events: &[Event]) -> RemainingPrediction {
        match self {
            PredictorModel::Vda(m) => m.predict(events),
            PredictorModel::Svr(m) | PredictorModel::SvrTs(m) => m.predict(events),
            PredictorModel::Dats(m) => m.predict(events),
        }
    }

    /// Most likely continuation. DATS weighs branches with its classifiers;
    /// other models with a transition system use transition frequencies.
    pub fn predict_path(&self, events: &[Event]) -> Result<PathPrediction, PredictorError> {
        match self {
            PredictorModel::Dats(m) => Ok(m.predict_path(events)?),
            other => {
                let ts = other
                    .transition_system()
                    .ok_or(PredictorError::NoPath(other.kind()))?;
                let state = ts.safety_prefix(events).state;
                Ok(most_likely_path(ts, state, |s, t| frequency_probability(ts, s, t))?)
            }
        }
    }

    /// Every trained SVR inside the model.
    pub fn svr_models(&self) -> Vec<&SvrModel> {
        match self {
            PredictorModel::Vda(_) => Vec::new(),
            PredictorModel::Svr(m) | PredictorModel::SvrTs(m) => m.regressor.svr().into_iter().collect(),
            PredictorModel::Dats(m) => m.regressors.iter().filter_map(Regressor::svr).collect(),
        }
    }
}

/// A historical case kept for similarity lookups.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryTrace {
    pub case_id: String,
    pub activities: Vec<String>,
    /// Seconds since the first event of the case, per event.
    pub offsets: Vec<i64>,
}

impl HistoryTrace {
    pub fn duration(&self) -> i64 {
        self.offsets.last().copied().unwrap_or(0)
    }

    /// rem after the first `k` events.
    pub fn remaining_after(&self, k: usize) -> i64 {
        if k == 0 {
            self.duration()
        } else {
            self.duration() - self.offsets[k - 1]
        }
    }
}

pub fn history_of(log: &EventLog) -> Vec<HistoryTrace> {
    log.traces()
        .iter()
        .map(|t| {
            let t0 = t.events.first().map_or(0, |e| e.timestamp);
            HistoryTrace {
                case_id: t.case_id.clone(),
                activities: t.events.iter().map(|e| e.activity.clone()).collect(),
                offsets: t.events.iter().map(|e| e.timestamp - t0).collect(),
            }
        })
        .collect()
}

/// Self-describing, versioned container for a trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelArchive {
    pub format: String,
    pub version: u32,
    pub config: TrainConfig,
    /// Attribute slots of the training log, used to read query events.
    pub attributes: AttributeSchema,
    pub model: PredictorModel,
    pub history: Vec<HistoryTrace>,
}

impl ModelArchive {
    pub fn new(config: TrainConfig, attributes: AttributeSchema, model: PredictorModel, history: Vec<HistoryTrace>) -> Self {
        Self {
            format: ARCHIVE_FORMAT.to_string(),
            version: ARCHIVE_VERSION,
            config,
            attributes,
            model,
            history,
        }
    }

    pub fn train(log: &EventLog, config: TrainConfig) -> Result<Self, PredictorError> {
        let model = train(log, &config)?;
        let history = if config.keep_history { history_of(log) } else { Vec::new() };
        Ok(Self::new(config, log.schema().clone(), model, history))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("archive serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, PredictorError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| PredictorError::Archive(format!("not JSON: {e}")))?;
        let format = value.get("format").and_then(|v| v.as_str());
        if format != Some(ARCHIVE_FORMAT) {
            return Err(PredictorError::Archive(format!(
                "unrecognized format {format:?}, expected \"{ARCHIVE_FORMAT}\""
            )));
        }
        let version = value.get("version").and_then(|v| v.as_u64());
        if version != Some(u64::from(ARCHIVE_VERSION)) {
            return Err(PredictorError::Archive(format!(
                "unsupported version {version:?}, this build reads version {ARCHIVE_VERSION}"
            )));
        }
        serde_json::from_str(text).map_err(|e| PredictorError::Archive(format!("malformed: {e}")))
    }
}
