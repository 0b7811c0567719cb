//! Error metrics, cross-validation, variant removal, the random path
//! baseline and a seeded synthetic log generator.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::sim_list;
use crate::event_log::{
    rem, variants, AttrKind, AttributeDecl, AttributeSchema, Event, EventLog, Trace, Value,
};
use crate::predictors::{train, PredictorError, PredictorKind, PredictorModel, TrainConfig};
use crate::transition_system::{StateId, TransitionSystem};

pub const PATH_HORIZONS: usize = 5;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("actual and predicted lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no samples with a non-zero actual value")]
    NoSamples,
    #[error("{folds} folds need at least {folds} traces, log has {traces}")]
    TooFewTraces { folds: usize, traces: usize },
    #[error("at least 2 folds are required")]
    TooFewFolds,
    #[error("removal {0} would leave no training traces")]
    EmptiesTraining(String),
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
}

/// A percentage error over the samples whose actual value is non-zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercentageError {
    pub value: f64,
    pub used: usize,
    pub excluded: usize,
}

fn relative_errors(actual: &[f64], predicted: &[f64]) -> Result<(Vec<f64>, usize), EvalError> {
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch(actual.len(), predicted.len()));
    }
    let mut errs = Vec::with_capacity(actual.len());
    let mut excluded = 0;
    for (a, f) in actual.iter().zip(predicted) {
        if *a == 0.0 {
            excluded += 1;
        } else {
            errs.push((a - f).abs() / a.abs());
        }
    }
    if errs.is_empty() {
        return Err(EvalError::NoSamples);
    }
    Ok((errs, excluded))
}

/// Mean absolute percentage error.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<PercentageError, EvalError> {
    let (errs, excluded) = relative_errors(actual, predicted)?;
    Ok(PercentageError {
        value: 100.0 * errs.iter().sum::<f64>() / errs.len() as f64,
        used: errs.len(),
        excluded,
    })
}

/// Root mean square percentage error.
pub fn rmspe(actual: &[f64], predicted: &[f64]) -> Result<PercentageError, EvalError> {
    let (errs, excluded) = relative_errors(actual, predicted)?;
    Ok(PercentageError {
        value: 100.0 * (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt(),
        used: errs.len(),
        excluded,
    })
}

/// Damerau-Levenshtein similarity and common-prefix ratio of the first
/// `horizon` activities of both sequences.
pub fn path_metrics<S: AsRef<str>>(predicted: &[S], actual: &[S], horizon: usize) -> (f64, f64) {
    assert!(horizon >= 1, "horizon must be positive");
    let p: Vec<&str> = predicted.iter().take(horizon).map(AsRef::as_ref).collect();
    let a: Vec<&str> = actual.iter().take(horizon).map(AsRef::as_ref).collect();
    let dam = sim_list(&p, &a);
    let common = p.iter().zip(&a).take_while(|(x, y)| x == y).count();
    (dam, common as f64 / horizon as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, std }
    }
}

/// Trace indices per fold after a seeded shuffle; sizes differ by at most one.
pub fn fold_indices(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    (0..k)
        .map(|f| {
            let mut v: Vec<usize> = order.iter().copied().skip(f).step_by(k).collect();
            v.sort_unstable();
            v
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "by", content = "value", rename_all = "lowercase")]
pub enum RemovalSpec {
    /// Remove the ⌊V·f⌋ least frequent variants (ties: lexicographic order).
    Fraction(f64),
    /// Remove every trace containing the activity.
    Activity(String),
}

impl std::fmt::Display for RemovalSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RemovalSpec::Fraction(x) => write!(f, "fraction {x}"),
            RemovalSpec::Activity(a) => write!(f, "activity '{a}'"),
        }
    }
}

impl RemovalSpec {
    /// Activity sequences this spec removes from `log`.
    pub fn removed_variants(&self, log: &EventLog) -> BTreeSet<Vec<String>> {
        let vars = variants(log);
        match self {
            RemovalSpec::Fraction(f) => {
                let mut by_freq: Vec<(&Vec<String>, usize)> = vars.iter().map(|(v, c)| (v, c.len())).collect();
                by_freq.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));
                let n = ((vars.len() as f64) * f.clamp(0.0, 1.0)).floor() as usize;
                by_freq.into_iter().take(n).map(|(v, _)| v.clone()).collect()
            }
            RemovalSpec::Activity(a) => vars.into_keys().filter(|v| v.contains(a)).collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RemovalReport {
    pub removed_variants: Vec<Vec<String>>,
    pub removed_cases: Vec<String>,
}

/// Training log without the variants selected by `spec`.
pub fn remove_variants(log: &EventLog, spec: &RemovalSpec) -> Result<(EventLog, RemovalReport), EvalError> {
    let removed = spec.removed_variants(log);
    let kept = filter_variants(log, &removed);
    if kept.is_empty() && !log.is_empty() {
        return Err(EvalError::EmptiesTraining(spec.to_string()));
    }
    let removed_cases = log
        .traces()
        .iter()
        .filter(|t| removed.contains(&activity_vec(t)))
        .map(|t| t.case_id.clone())
        .collect();
    Ok((
        kept,
        RemovalReport {
            removed_variants: removed.into_iter().collect(),
            removed_cases,
        },
    ))
}

fn activity_vec(t: &Trace) -> Vec<String> {
    t.events.iter().map(|e| e.activity.clone()).collect()
}

fn filter_variants(log: &EventLog, removed: &BTreeSet<Vec<String>>) -> EventLog {
    if removed.is_empty() {
        return log.clone();
    }
    log.filter(|t| !removed.contains(&activity_vec(t)))
}

/// Samples continuations from transition frequencies; at accepting states
/// the walk stops with the empirical end frequency.
pub struct RandomWalker<'a> {
    ts: &'a TransitionSystem,
    rng: ChaCha8Rng,
}

impl<'a> RandomWalker<'a> {
    pub fn new(ts: &'a TransitionSystem, seed: u64) -> Self {
        Self {
            ts,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Next step from `state`: `None` means stop.
    pub fn step(&mut self, state: StateId) -> Option<(String, StateId)> {
        let out = self.ts.outgoing(state);
        let stop = self.ts.end_count(state);
        let total: usize = stop + out.iter().map(|&t| self.ts.transition(t).count).sum::<usize>();
        if total == 0 {
            return None;
        }
        let mut draw = self.rng.gen_range(0..total);
        if draw < stop {
            return None;
        }
        draw -= stop;
        for &tid in out {
            let t = self.ts.transition(tid);
            if draw < t.count {
                return Some((t.label.clone(), t.target));
            }
            draw -= t.count;
        }
        unreachable!("draw within total")
    }

    pub fn walk(&mut self, from: StateId) -> Vec<String> {
        let cap = 10 * self.ts.state_count();
        let mut state = from;
        let mut out = Vec::new();
        while out.len() < cap {
            match self.step(state) {
                Some((label, next)) => {
                    out.push(label);
                    state = next;
                }
                None => break,
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub horizon: usize,
    pub points: usize,
    pub dam: MeanStd,
    pub pre: MeanStd,
}

/// Rows for horizons 1..=5 plus their average.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathTable {
    pub rows: Vec<PathRow>,
    pub expected_dam: f64,
    pub expected_pre: f64,
}

impl PathTable {
    fn from_folds(per_fold: &[Vec<(f64, f64, usize)>]) -> Self {
        let rows: Vec<PathRow> = (0..PATH_HORIZONS)
            .map(|h| {
                let folds: Vec<&(f64, f64, usize)> = per_fold.iter().map(|f| &f[h]).filter(|r| r.2 > 0).collect();
                PathRow {
                    horizon: h + 1,
                    points: folds.iter().map(|r| r.2).sum(),
                    dam: MeanStd::of(&folds.iter().map(|r| r.0).collect::<Vec<_>>()),
                    pre: MeanStd::of(&folds.iter().map(|r| r.1).collect::<Vec<_>>()),
                }
            })
            .collect();
        let valid: Vec<&PathRow> = rows.iter().filter(|r| r.points > 0).collect();
        let avg = |f: fn(&PathRow) -> f64| valid.iter().map(|r| f(r)).sum::<f64>() / valid.len() as f64;
        Self {
            expected_dam: avg(|r| r.dam.mean),
            expected_pre: avg(|r| r.pre.mean),
            rows,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub train_traces: usize,
    pub test_traces: usize,
    pub mape: f64,
    pub rmspe: f64,
    pub samples: usize,
    pub excluded: usize,
    /// Test predictions that needed the safety mechanism.
    pub safety: usize,
    /// SVR models fitted for this fold and how many of them break the dual constraints.
    #[serde(default)]
    pub svr_models: usize,
    #[serde(default)]
    pub dual_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictorReport {
    pub kind: PredictorKind,
    pub folds: Vec<FoldMetrics>,
    pub mape: MeanStd,
    pub rmspe: MeanStd,
    pub paths: Option<PathTable>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub removal: Option<RemovalSpec>,
    /// Evaluate future paths of DATS models and the random baseline.
    pub paths: bool,
    /// Total random-baseline walks, spread over the evaluation points.
    pub random_draws: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            seed: 0,
            removal: None,
            paths: false,
            random_draws: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub abstraction: String,
    pub folds: usize,
    pub seed: u64,
    pub removal: Option<RemovalSpec>,
    pub removed_variants: usize,
    pub predictors: Vec<PredictorReport>,
    pub random: Option<PathTable>,
}

struct PathAcc {
    sums: Vec<(f64, f64, usize)>,
}

impl PathAcc {
    fn new() -> Self {
        Self {
            sums: vec![(0.0, 0.0, 0); PATH_HORIZONS],
        }
    }

    fn add(&mut self, h: usize, dam: f64, pre: f64, weight: f64) {
        let r = &mut self.sums[h];
        r.0 += dam * weight;
        r.1 += pre * weight;
    }

    fn count(&mut self, h: usize) {
        self.sums[h].2 += 1;
    }

    fn means(&self) -> Vec<(f64, f64, usize)> {
        self.sums
            .iter()
            .map(|(d, p, n)| if *n == 0 { (f64::NAN, f64::NAN, 0) } else { (d / *n as f64, p / *n as f64, *n) })
            .collect()
    }
}

/// Evaluation points for path metrics: (test trace, prefix length) pairs
/// with at least one remaining activity.
fn path_points(test: &[&Trace]) -> Vec<(usize, usize)> {
    let mut pts = Vec::new();
    for (i, t) in test.iter().enumerate() {
        for k in 1..t.len() {
            pts.push((i, k));
        }
    }
    pts
}

/// k-fold cross-validation of several predictors on the same folds.
pub fn cross_validate(
    log: &EventLog,
    kinds: &[PredictorKind],
    train_cfg: &TrainConfig,
    cv: &CvConfig,
) -> Result<EvaluationReport, EvalError> {
    if cv.folds < 2 {
        return Err(EvalError::TooFewFolds);
    }
    if log.len() < cv.folds {
        return Err(EvalError::TooFewTraces {
            folds: cv.folds,
            traces: log.len(),
        });
    }
    let removed = cv
        .removal
        .as_ref()
        .map(|spec| spec.removed_variants(log))
        .unwrap_or_default();
    let folds = fold_indices(log.len(), cv.folds, cv.seed);
    let mut fold_metrics: BTreeMap<PredictorKind, Vec<FoldMetrics>> = BTreeMap::new();
    let mut fold_paths: BTreeMap<PredictorKind, Vec<Vec<(f64, f64, usize)>>> = BTreeMap::new();
    let mut random_paths = Vec::new();

    for (f, test_idx) in folds.iter().enumerate() {
        let test_set: BTreeSet<usize> = test_idx.iter().copied().collect();
        let train_log = log.filter({
            let ids: BTreeSet<&str> = test_idx.iter().map(|&i| log.traces()[i].case_id.as_str()).collect();
            move |t| !ids.contains(t.case_id.as_str())
        });
        let train_log = filter_variants(&train_log, &removed);
        if train_log.is_empty() {
            return Err(EvalError::EmptiesTraining(format!("fold {f}")));
        }
        let test: Vec<&Trace> = log
            .traces()
            .iter()
            .enumerate()
            .filter(|(i, _)| test_set.contains(i))
            .map(|(_, t)| t)
            .collect();
        debug_assert!(test.iter().all(|t| train_log.trace(&t.case_id).is_none()));

        for &kind in kinds {
            let cfg = TrainConfig {
                kind,
                seed: train_cfg.seed.wrapping_add(f as u64),
                ..train_cfg.clone()
            };
            let model = train(&train_log, &cfg)?;
            let (mut actual, mut predicted, mut safety) = (Vec::new(), Vec::new(), 0);
            for t in &test {
                for k in 1..t.len() {
                    let p = model.predict_remaining(t.prefix(k));
                    safety += usize::from(p.used_safety());
                    actual.push(rem(&t.events, k) as f64);
                    predicted.push(p.seconds);
                }
            }
            let m = mape(&actual, &predicted)?;
            let r = rmspe(&actual, &predicted)?;
            let svrs = model.svr_models();
            log::info!("fold {f} {kind}: MAPE {:.2}% RMSPE {:.2}%", m.value, r.value);
            fold_metrics.entry(kind).or_default().push(FoldMetrics {
                fold: f,
                train_traces: train_log.len(),
                test_traces: test.len(),
                mape: m.value,
                rmspe: r.value,
                samples: m.used,
                excluded: m.excluded,
                safety,
                svr_models: svrs.len(),
                dual_violations: svrs.iter().filter(|s| !s.dual_feasible()).count(),
            });
            if cv.paths && kind == PredictorKind::Dats {
                fold_paths.entry(kind).or_default().push(evaluate_paths(&model, &test));
                let ts = model.transition_system().expect("dats has a transition system");
                random_paths.push(evaluate_random(ts, &test, cv, f));
            }
        }
    }

    let predictors = kinds
        .iter()
        .map(|kind| {
            let folds = fold_metrics.remove(kind).unwrap_or_default();
            PredictorReport {
                kind: *kind,
                mape: MeanStd::of(&folds.iter().map(|m| m.mape).collect::<Vec<_>>()),
                rmspe: MeanStd::of(&folds.iter().map(|m| m.rmspe).collect::<Vec<_>>()),
                paths: fold_paths.get(kind).map(|p| PathTable::from_folds(p)),
                folds,
            }
        })
        .collect();
    Ok(EvaluationReport {
        abstraction: train_cfg.abstraction.to_string(),
        folds: cv.folds,
        seed: cv.seed,
        removal: cv.removal.clone(),
        removed_variants: removed.len(),
        predictors,
        random: (!random_paths.is_empty()).then(|| PathTable::from_folds(&random_paths)),
    })
}

fn evaluate_paths(model: &PredictorModel, test: &[&Trace]) -> Vec<(f64, f64, usize)> {
    let mut acc = PathAcc::new();
    for (i, k) in path_points(test) {
        let t = test[i];
        let Ok(path) = model.predict_path(t.prefix(k)) else {
            continue;
        };
        let actual = &t.activities()[k..];
        for h in 0..PATH_HORIZONS.min(actual.len()) {
            let (dam, pre) = path_metrics(&path.activities, &actual.iter().map(|s| s.to_string()).collect::<Vec<_>>(), h + 1);
            acc.add(h, dam, pre, 1.0);
            acc.count(h);
        }
    }
    acc.means()
}

fn evaluate_random(ts: &TransitionSystem, test: &[&Trace], cv: &CvConfig, fold: usize) -> Vec<(f64, f64, usize)> {
    let points = path_points(test);
    let mut acc = PathAcc::new();
    if points.is_empty() {
        return acc.means();
    }
    let per_fold = cv.random_draws.div_ceil(cv.folds);
    let draws = per_fold.div_ceil(points.len()).max(1);
    let mut walker = RandomWalker::new(ts, cv.seed.wrapping_mul(31).wrapping_add(fold as u64));
    for (i, k) in points {
        let t = test[i];
        let state = ts.safety_prefix(t.prefix(k)).state;
        let actual: Vec<String> = t.events[k..].iter().map(|e| e.activity.clone()).collect();
        let horizons = PATH_HORIZONS.min(actual.len());
        for _ in 0..draws {
            let walk = walker.walk(state);
            for h in 0..horizons {
                let (dam, pre) = path_metrics(&walk, &actual, h + 1);
                acc.add(h, dam, pre, 1.0 / draws as f64);
            }
        }
        for h in 0..horizons {
            acc.count(h);
        }
    }
    acc.means()
}

fn fmt_ms(m: &MeanStd, digits: usize) -> String {
    format!("{:.*} ± {:.*}", digits, m.mean, digits, m.std)
}

impl EvaluationReport {
    /// Predictor × metric table.
    pub fn time_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<8} {:>18} {:>18}", "method", "MAPE (%)", "RMSPE (%)");
        for p in &self.predictors {
            let _ = writeln!(s, "{:<8} {:>18} {:>18}", p.kind.name(), fmt_ms(&p.mape, 2), fmt_ms(&p.rmspe, 2));
        }
        s
    }

    /// Horizon rows for the path predictor next to the random baseline.
    pub fn path_table(&self) -> Option<String> {
        let fpp = self.predictors.iter().find_map(|p| p.paths.as_ref())?;
        let mut s = String::new();
        let _ = writeln!(s, "{:<4} {:>16} {:>16} {:>16} {:>16}", "#", "FPP DAM", "FPP PRE", "random DAM", "random PRE");
        let random = self.random.as_ref();
        for (i, row) in fpp.rows.iter().enumerate() {
            let r = random.map(|r| &r.rows[i]);
            let _ = writeln!(
                s,
                "{:<4} {:>16} {:>16} {:>16} {:>16}",
                row.horizon,
                fmt_ms(&row.dam, 4),
                fmt_ms(&row.pre, 4),
                r.map_or("-".into(), |r| fmt_ms(&r.dam, 4)),
                r.map_or("-".into(), |r| fmt_ms(&r.pre, 4)),
            );
        }
        let _ = writeln!(
            s,
            "{:<4} {:>16.4} {:>16.4} {:>16} {:>16}",
            "E#",
            fpp.expected_dam,
            fpp.expected_pre,
            random.map_or("-".into(), |r| format!("{:.4}", r.expected_dam)),
            random.map_or("-".into(), |r| format!("{:.4}", r.expected_pre)),
        );
        Some(s)
    }

    /// Tab-separated horizon/similarity series for plotting.
    pub fn path_series(&self) -> Option<String> {
        let fpp = self.predictors.iter().find_map(|p| p.paths.as_ref())?;
        let mut s = String::from("horizon\tseries\tdam\tpre\n");
        for row in &fpp.rows {
            let _ = writeln!(s, "{}\tfpp\t{}\t{}", row.horizon, row.dam.mean, row.pre.mean);
        }
        if let Some(r) = &self.random {
            for row in &r.rows {
                let _ = writeln!(s, "{}\trandom\t{}\t{}", row.horizon, row.dam.mean, row.pre.mean);
            }
        }
        Some(s)
    }
}

// ---------------------------------------------------------------------------
// synthetic logs

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttributeDist {
    Nominal { values: Vec<String>, weights: Vec<f64> },
    Numeric { min: f64, max: f64, #[serde(default)] integer: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub dist: AttributeDist,
    /// Activity whose event carries the value; the first event when absent.
    #[serde(default)]
    pub reveal_at: Option<String>,
}

/// Multiplies a weight or duration when a nominal attribute has a value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub attribute: String,
    pub value: String,
    pub factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub activities: Vec<String>,
    pub probability: f64,
    /// Attribute-conditioned multipliers of the variant weight.
    #[serde(default)]
    pub affinity: Vec<Factor>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerUnit {
    pub attribute: String,
    pub seconds: f64,
}

/// Time from the previous event (or case start) to this activity's event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DurationSpec {
    pub base: f64,
    /// Relative uniform jitter in [0, 1).
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub factors: Vec<Factor>,
    #[serde(default)]
    pub per_unit: Vec<PerUnit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub cases: usize,
    pub seed: u64,
    /// Epoch seconds of the first case start.
    #[serde(default)]
    pub start: i64,
    /// Seconds between consecutive case starts.
    #[serde(default = "default_gap")]
    pub case_gap: i64,
    #[serde(default)]
    pub attributes: Vec<AttributeSpec>,
    pub variants: Vec<VariantSpec>,
    pub durations: BTreeMap<String, DurationSpec>,
}

fn default_gap() -> i64 {
    3600
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::InvalidSpec(m));
        if self.variants.is_empty() {
            return bad("no variants".into());
        }
        let total: f64 = self.variants.iter().map(|v| v.probability).sum();
        if (total - 1.0).abs() > 1e-9 || self.variants.iter().any(|v| !(v.probability >= 0.0)) {
            return bad(format!("variant probabilities must be non-negative and sum to 1, got {total}"));
        }
        let mut names = BTreeSet::new();
        for a in &self.attributes {
            if !names.insert(a.name.as_str()) {
                return bad(format!("duplicate attribute '{}'", a.name));
            }
            match &a.dist {
                AttributeDist::Nominal { values, weights } => {
                    if values.is_empty() || values.len() != weights.len() || weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
                        return bad(format!("attribute '{}': values and non-negative weights must match", a.name));
                    }
                }
                AttributeDist::Numeric { min, max, .. } => {
                    if !(min <= max) {
                        return bad(format!("attribute '{}': min > max", a.name));
                    }
                }
            }
        }
        for v in &self.variants {
            if v.activities.is_empty() {
                return bad("empty variant".into());
            }
            for a in &v.activities {
                if !self.durations.contains_key(a) {
                    return bad(format!("activity '{a}' has no duration"));
                }
            }
            for f in &v.affinity {
                self.check_factor(f)?;
            }
        }
        for (a, d) in &self.durations {
            if !(d.base > 0.0) || !(0.0..1.0).contains(&d.jitter) {
                return bad(format!("activity '{a}': base must be positive and jitter in [0, 1)"));
            }
            for f in &d.factors {
                self.check_factor(f)?;
            }
            for u in &d.per_unit {
                match self.attributes.iter().find(|x| x.name == u.attribute) {
                    Some(AttributeSpec { dist: AttributeDist::Numeric { .. }, .. }) => {}
                    _ => return bad(format!("per-unit term on unknown numeric attribute '{}'", u.attribute)),
                }
            }
        }
        Ok(())
    }

    fn check_factor(&self, f: &Factor) -> Result<(), EvalError> {
        match self.attributes.iter().find(|x| x.name == f.attribute) {
            Some(AttributeSpec { dist: AttributeDist::Nominal { .. }, .. }) if f.factor > 0.0 => Ok(()),
            _ => Err(EvalError::InvalidSpec(format!(
                "factor on '{}' must name a nominal attribute and be positive",
                f.attribute
            ))),
        }
    }
}

/// Draws a seeded log from `spec`.
pub fn generate_log(spec: &GeneratorSpec) -> Result<EventLog, EvalError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let schema = AttributeSchema::new(
        spec.attributes
            .iter()
            .map(|a| AttributeDecl {
                name: a.name.clone(),
                kind: match a.dist {
                    AttributeDist::Nominal { .. } => AttrKind::Nominal,
                    AttributeDist::Numeric { .. } => AttrKind::Numeric,
                },
            })
            .collect(),
    );
    let nominal_dists: Vec<Option<WeightedIndex<f64>>> = spec
        .attributes
        .iter()
        .map(|a| match &a.dist {
            AttributeDist::Nominal { weights, .. } => Some(WeightedIndex::new(weights).expect("validated")),
            AttributeDist::Numeric { .. } => None,
        })
        .collect();
    let width = (spec.cases.max(1) as f64).log10().floor() as usize + 1;
    let mut traces = Vec::with_capacity(spec.cases);
    for case in 0..spec.cases {
        let values: Vec<Value> = spec
            .attributes
            .iter()
            .zip(&nominal_dists)
            .map(|(a, d)| match &a.dist {
                AttributeDist::Nominal { values, .. } => {
                    Value::Nominal(values[d.as_ref().expect("nominal").sample(&mut rng)].clone())
                }
                AttributeDist::Numeric { min, max, integer } => {
                    let v = if min == max { *min } else { rng.gen_range(*min..=*max) };
                    Value::Numeric(if *integer { v.round() } else { v })
                }
            })
            .collect();
        let nominal = |name: &str| -> Option<&str> {
            let i = spec.attributes.iter().position(|a| a.name == name)?;
            values[i].as_str()
        };
        let apply = |factors: &[Factor]| -> f64 {
            factors
                .iter()
                .filter(|f| nominal(&f.attribute) == Some(f.value.as_str()))
                .map(|f| f.factor)
                .product()
        };
        let weights: Vec<f64> = spec.variants.iter().map(|v| v.probability * apply(&v.affinity)).collect();
        let variant = match WeightedIndex::new(&weights) {
            Ok(d) => &spec.variants[d.sample(&mut rng)],
            Err(_) => return Err(EvalError::InvalidSpec("all variant weights vanish for some case".into())),
        };
        let case_id = format!("case-{case:0width$}");
        let mut ts = spec.start + case as i64 * spec.case_gap;
        let mut events = Vec::with_capacity(variant.activities.len());
        for (pos, activity) in variant.activities.iter().enumerate() {
            let d = &spec.durations[activity];
            let mut secs = d.base * apply(&d.factors);
            for u in &d.per_unit {
                let i = spec.attributes.iter().position(|a| a.name == u.attribute).expect("validated");
                secs += u.seconds * values[i].as_f64().unwrap_or(0.0);
            }
            if d.jitter > 0.0 {
                secs *= 1.0 + rng.gen_range(-d.jitter..d.jitter);
            }
            if pos > 0 {
                ts += secs.round().max(1.0) as i64;
            }
            let attrs = spec
                .attributes
                .iter()
                .zip(&values)
                .map(|(a, v)| {
                    let here = match &a.reveal_at {
                        Some(r) => r == activity && !variant.activities[..pos].contains(r),
                        None => pos == 0,
                    };
                    here.then(|| v.clone())
                })
                .collect();
            events.push(Event::new(case_id.clone(), activity.clone(), ts, attrs));
        }
        traces.push(Trace::new(case_id, events));
    }
    EventLog::new(schema, traces).map_err(|e| EvalError::InvalidSpec(e.to_string()))
}
