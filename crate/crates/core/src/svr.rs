//! ε-insensitive support vector regression trained with SMO.
//!
//! The dual is solved over 2l variables in the LIBSVM formulation
//! (β = [α; α*], y = [+1; −1]) with maximal-violating-pair working-set
//! selection. Kernel rows are cached over the distinct training vectors, which
//! matters because encoded prefixes repeat a lot.

use std::collections::{HashMap, VecDeque};
use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::TrainingSet;
use crate::evaluation::mape;

pub const DEFAULT_C_GRID: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
pub const DEFAULT_GAMMA_GRID: [f64; 3] = [0.01, 0.1, 1.0];
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

const TAU: f64 = 1e-12;
const CACHE_BYTES: usize = 256 << 20;

#[derive(Debug, Error, PartialEq)]
pub enum SvrError {
    #[error("empty training set")]
    Empty,
    #[error("non-finite value in training example {0}")]
    NonFinite(usize),
    #[error("feature vector has dimension {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("training set of {examples} examples cannot be split into {folds} folds")]
    TooFewExamples { examples: usize, folds: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d).exp()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl SvrParams {
    pub fn new(c: f64, epsilon: f64) -> Self {
        Self {
            c,
            epsilon,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    fn validate(&self) -> Result<(), SvrError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(SvrError::InvalidParameter(format!("C must be positive, got {}", self.c)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(SvrError::InvalidParameter(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        if !(self.tol > 0.0) {
            return Err(SvrError::InvalidParameter(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportVector {
    pub x: Vec<f64>,
    /// Net coefficient summed over all training examples equal to `x`.
    pub coef: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub examples: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Final maximal KKT violation.
    pub gap: f64,
    /// Σ(α − α*) over training examples.
    pub coef_sum: f64,
    /// max |α − α*| over training examples.
    pub max_abs_coef: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub kernel: Kernel,
    pub params: SvrParams,
    pub dim: usize,
    pub support: Vec<SupportVector>,
    pub bias: f64,
    pub info: TrainingInfo,
}

impl SvrModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64, SvrError> {
        if x.len() != self.dim {
            return Err(SvrError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self
            .support
            .iter()
            .map(|sv| sv.coef * self.kernel.eval(&sv.x, x))
            .sum::<f64>()
            + self.bias)
    }

    /// Checks the dual constraints recorded at training time.
    pub fn dual_feasible(&self) -> bool {
        self.info.max_abs_coef <= self.params.c * (1.0 + 1e-12)
            && self.info.coef_sum.abs() <= 10.0 * self.params.tol
    }
}

/// Extra output of [`train_detailed`].
#[derive(Clone, Debug, Default)]
pub struct SolverTrace {
    /// Per-example net coefficient α − α*.
    pub coefficients: Vec<f64>,
    /// Dual objective (maximization form) after every iteration, when requested.
    pub objective: Vec<f64>,
}

pub fn train(tr: &TrainingSet, kernel: Kernel, params: SvrParams) -> Result<SvrModel, SvrError> {
    train_detailed(tr, kernel, params, false).map(|(m, _)| m)
}

struct KernelRows<'a> {
    kernel: Kernel,
    points: &'a [&'a [f64]],
    rows: Vec<Option<Rc<[f64]>>>,
    lru: VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelRows<'a> {
    fn new(kernel: Kernel, points: &'a [&'a [f64]]) -> Self {
        let n = points.len().max(1);
        Self {
            kernel,
            points,
            rows: vec![None; points.len()],
            lru: VecDeque::new(),
            capacity: (CACHE_BYTES / (n * 8)).max(2),
        }
    }

    fn row(&mut self, u: usize) -> Rc<[f64]> {
        if let Some(r) = &self.rows[u] {
            return r.clone();
        }
        if self.lru.len() >= self.capacity {
            if let Some(old) = self.lru.pop_front() {
                self.rows[old] = None;
            }
        }
        let p = self.points[u];
        let r: Rc<[f64]> = self.points.iter().map(|q| self.kernel.eval(p, q)).collect();
        self.rows[u] = Some(r.clone());
        self.lru.push_back(u);
        r
    }
}

pub fn train_detailed(
    tr: &TrainingSet,
    kernel: Kernel,
    params: SvrParams,
    record_objective: bool,
) -> Result<(SvrModel, SolverTrace), SvrError> {
    params.validate()?;
    if let Kernel::Rbf { gamma } = kernel {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(SvrError::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
    }
    let l = tr.len();
    if l == 0 {
        return Err(SvrError::Empty);
    }
    let dim = tr.x[0].len();
    for (i, (x, y)) in tr.x.iter().zip(&tr.y).enumerate() {
        if x.len() != dim {
            return Err(SvrError::DimensionMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(SvrError::NonFinite(i));
        }
    }

    // distinct feature vectors
    let mut ids: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut uniq: Vec<&[f64]> = Vec::new();
    let uid: Vec<usize> = tr
        .x
        .iter()
        .map(|x| {
            let key: Vec<u64> = x.iter().map(|v| (v + 0.0).to_bits()).collect();
            *ids.entry(key).or_insert_with(|| {
                uniq.push(x);
                uniq.len() - 1
            })
        })
        .collect();
    let diag: Vec<f64> = uniq.iter().map(|x| kernel.eval(x, x)).collect();
    let mut cache = KernelRows::new(kernel, &uniq);

    let c = params.c;
    let m = 2 * l;
    let sign = |t: usize| if t < l { 1.0 } else { -1.0 };
    let p: Vec<f64> = (0..m)
        .map(|t| if t < l { params.epsilon - tr.y[t] } else { params.epsilon + tr.y[t - l] })
        .collect();
    let mut beta = vec![0.0; m];
    let mut grad = p.clone();
    let mut objective = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut gap = f64::INFINITY;

    while iterations < params.max_iter {
        // i: maximal violator; j: largest second-order gain against i
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..m {
            let yt = sign(t);
            let up = (yt > 0.0 && beta[t] < c) || (yt < 0.0 && beta[t] > 0.0);
            if up && -yt * grad[t] > gmax {
                gmax = -yt * grad[t];
                i = t;
            }
        }
        if i == usize::MAX {
            gap = 0.0;
            converged = true;
            break;
        }
        let ui = uid[i % l];
        let row_i = cache.row(ui);
        let mut gmin = f64::INFINITY;
        let mut best = f64::INFINITY;
        let mut j = usize::MAX;
        for t in 0..m {
            let yt = sign(t);
            let low = (yt > 0.0 && beta[t] > 0.0) || (yt < 0.0 && beta[t] < c);
            if !low {
                continue;
            }
            let v = -yt * grad[t];
            gmin = gmin.min(v);
            let b = gmax - v;
            if b > 0.0 {
                let u = uid[t % l];
                let a = (diag[ui] + diag[u] - 2.0 * row_i[u]).max(TAU);
                if -b * b / a <= best {
                    best = -b * b / a;
                    j = t;
                }
            }
        }
        gap = gmax - gmin;
        if j == usize::MAX || gap < params.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let uj = uid[j % l];
        let row_j = cache.row(uj);
        let (yi, yj) = (sign(i), sign(j));
        let kij = row_i[uj];
        let (old_i, old_j) = (beta[i], beta[j]);

        if yi != yj {
            let quad = (diag[ui] + diag[uj] - 2.0 * kij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = beta[i] - beta[j];
            beta[i] += delta;
            beta[j] += delta;
            if diff > 0.0 {
                if beta[j] < 0.0 {
                    beta[j] = 0.0;
                    beta[i] = diff;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = -diff;
            }
            if diff > 0.0 {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = c - diff;
                }
            } else if beta[j] > c {
                beta[j] = c;
                beta[i] = c + diff;
            }
        } else {
            let quad = (diag[ui] + diag[uj] - 2.0 * kij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = beta[i] + beta[j];
            beta[i] -= delta;
            beta[j] += delta;
            if sum > c {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = sum - c;
                }
            } else if beta[j] < 0.0 {
                beta[j] = 0.0;
                beta[i] = sum;
            }
            if sum > c {
                if beta[j] > c {
                    beta[j] = c;
                    beta[i] = sum - c;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = sum;
            }
        }

        let di = (beta[i] - old_i) * yi;
        let dj = (beta[j] - old_j) * yj;
        for k in 0..l {
            let u = uid[k];
            let d = di * row_i[u] + dj * row_j[u];
            grad[k] += d;
            grad[k + l] -= d;
        }
        if record_objective {
            objective.push(-0.5 * beta.iter().zip(grad.iter().zip(&p)).map(|(b, (g, q))| b * (g + q)).sum::<f64>());
        }
    }
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations with violation {gap:.3e}");
    }

    // bias
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..m {
        let yg = sign(t) * grad[t];
        let upper = beta[t] >= c;
        let lower = beta[t] <= 0.0;
        if upper {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };

    let coefficients: Vec<f64> = (0..l).map(|k| beta[k] - beta[k + l]).collect();
    let mut merged = vec![0.0; uniq.len()];
    for (k, a) in coefficients.iter().enumerate() {
        merged[uid[k]] += a;
    }
    let support = merged
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != 0.0)
        .map(|(u, a)| SupportVector {
            x: uniq[u].to_vec(),
            coef: *a,
        })
        .collect();
    let info = TrainingInfo {
        examples: l,
        iterations,
        converged,
        gap,
        coef_sum: coefficients.iter().sum(),
        max_abs_coef: coefficients.iter().fold(0.0, |acc, a| acc.max(a.abs())),
    };
    let model = SvrModel {
        kernel,
        params,
        dim,
        support,
        bias: -rho,
        info,
    };
    Ok((model, SolverTrace { coefficients, objective }))
}

/// Default ε: 1% of the target standard deviation.
pub fn default_epsilon(y: &[f64]) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    0.01 * var.sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Linear,
    Rbf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub family: KernelFamily,
    pub c_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            family: KernelFamily::Rbf,
            c_grid: DEFAULT_C_GRID.to_vec(),
            gamma_grid: DEFAULT_GAMMA_GRID.to_vec(),
            folds: 3,
            seed: 0,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub c: f64,
    pub gamma: Option<f64>,
    /// Mean validation MAPE of the winner.
    pub score: f64,
    pub model: SvrModel,
}

/// Selects (C, γ) by k-fold validation MAPE and refits on the whole set.
pub fn grid_search(tr: &TrainingSet, epsilon: f64, cfg: &GridConfig) -> Result<GridResult, SvrError> {
    if cfg.folds < 2 {
        return Err(SvrError::InvalidParameter("grid search needs at least 2 folds".into()));
    }
    if cfg.c_grid.is_empty() || (cfg.family == KernelFamily::Rbf && cfg.gamma_grid.is_empty()) {
        return Err(SvrError::InvalidParameter("empty grid".into()));
    }
    if tr.len() < cfg.folds {
        return Err(SvrError::TooFewExamples {
            examples: tr.len(),
            folds: cfg.folds,
        });
    }
    let mut order: Vec<usize> = (0..tr.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let folds: Vec<Vec<usize>> = (0..cfg.folds)
        .map(|f| order.iter().copied().skip(f).step_by(cfg.folds).collect())
        .collect();
    let splits: Vec<(TrainingSet, TrainingSet)> = (0..cfg.folds)
        .map(|f| {
            let train_idx: Vec<usize> = (0..cfg.folds)
                .filter(|g| *g != f)
                .flat_map(|g| folds[g].iter().copied())
                .collect();
            (tr.subset(&train_idx), tr.subset(&folds[f]))
        })
        .collect();

    let mut c_grid = cfg.c_grid.clone();
    c_grid.sort_by(f64::total_cmp);
    let mut gammas: Vec<Option<f64>> = match cfg.family {
        KernelFamily::Linear => vec![None],
        KernelFamily::Rbf => cfg.gamma_grid.iter().map(|g| Some(*g)).collect(),
    };
    gammas.sort_by(|a, b| a.unwrap_or(0.0).total_cmp(&b.unwrap_or(0.0)));
    let kernel_of = |g: Option<f64>| g.map_or(Kernel::Linear, |gamma| Kernel::Rbf { gamma });
    let params_of = |c: f64| SvrParams {
        c,
        epsilon,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
    };

    let mut best: Option<(f64, f64, Option<f64>)> = None;
    for &c in &c_grid {
        for &g in &gammas {
            let mut scores = Vec::new();
            for (train_set, valid) in &splits {
                let model = train(train_set, kernel_of(g), params_of(c))?;
                let pred: Vec<f64> = valid.x.iter().map(|x| model.predict(x).unwrap_or(0.0)).collect();
                if let Ok(m) = mape(&valid.y, &pred) {
                    scores.push(m.value);
                }
            }
            let score = if scores.is_empty() {
                f64::INFINITY
            } else {
                scores.iter().sum::<f64>() / scores.len() as f64
            };
            log::debug!("grid C={c} gamma={g:?}: {score:.4}");
            if best.map_or(true, |(s, _, _)| score < s) {
                best = Some((score, c, g));
            }
        }
    }
    let (score, c, gamma) = best.expect("grid is non-empty");
    let model = train(tr, kernel_of(gamma), params_of(c))?;
    Ok(GridResult { c, gamma, score, model })
}
