//! `ppm` command line: train, predict, evaluate, serve, gen-log.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use ppm_core::evaluation::{cross_validate, generate_log, CvConfig, EvalError, GeneratorSpec, RemovalSpec};
use ppm_core::event_log::{format_timestamp, LogError};
use ppm_core::predictors::{ModelArchive, PredictorError, PredictorModel, Regressor, TrainConfig};
use ppm_core::service::{self, QueryEvent, QueryRequest, QueryResponse, Registry};
use ppm_core::svr::{GridConfig, Kernel};
use ppm_core::{read_log, serialize_log, PredictorKind, StateAbstraction};

pub mod server;

#[derive(Debug, Parser)]
#[command(name = "ppm", version, about = "Remaining-time and future-path prediction for running process cases")]
pub struct Cli {
    /// TOML file with one table per subcommand; keys are the long flag names.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a predictor on a CSV event log and write a model archive.
    Train(TrainArgs),
    /// Predict remaining time and future path of a running case.
    Predict(PredictArgs),
    /// k-fold cross-validation of one or more predictors.
    Evaluate(EvaluateArgs),
    /// Serve model archives over HTTP.
    Serve(ServeArgs),
    /// Generate a synthetic CSV log from a JSON spec.
    GenLog(GenLogArgs),
}

/// Model options shared by `train` and `evaluate`.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ModelArgs {
    /// State abstraction: set, multiset or seq, optionally with a horizon (`set:1`) [default: set]
    #[arg(long)]
    pub abstraction: Option<String>,
    /// VDA statistic: mean or median [default: mean]
    #[arg(long)]
    pub statistic: Option<String>,
    /// SVR kernel: rbf or linear [default: rbf]
    #[arg(long)]
    pub kernel: Option<String>,
    /// Comma-separated C grid [default: 0.1,1,10,100]
    #[arg(long)]
    pub grid_c: Option<String>,
    /// Comma-separated γ grid [default: 0.01,0.1,1]
    #[arg(long)]
    pub grid_gamma: Option<String>,
    /// Skip grid search and use --c / --gamma.
    #[arg(long)]
    pub no_grid: bool,
    /// C without grid search [default: 10]
    #[arg(long)]
    pub c: Option<f64>,
    /// RBF γ without grid search [default: 0.1]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// ε as a fraction of the target standard deviation [default: 0.01]
    #[arg(long)]
    pub epsilon_fraction: Option<f64>,
    /// Fit SVR targets in raw seconds instead of sd units.
    #[arg(long)]
    pub raw_targets: bool,
    /// Naive Bayes smoothing α [default: 1]
    #[arg(long)]
    pub nb_alpha: Option<f64>,
    /// DATS regressor at non-branching states: outgoing or incoming [default: outgoing]
    #[arg(long)]
    pub non_branching: Option<String>,
    /// Do not store training traces in the archive.
    #[arg(long)]
    pub no_history: bool,
    /// Seed for folds, grid subsamples and baselines [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct TrainArgs {
    /// CSV event log.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Archive path [default: model.json]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// vda, svr, svr_ts or dats [default: dats]
    #[arg(long)]
    pub predictor: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct PredictArgs {
    /// Model archive.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Running case: a CSV log (one case, or pick with --case) or a JSON query.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Case id inside a CSV trace file.
    #[arg(long)]
    pub case: Option<String>,
    /// Deadline (ISO-8601); raises the alarm when the predicted completion is later.
    #[arg(long)]
    pub deadline: Option<String>,
    /// human, json or both [default: both]
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct EvaluateArgs {
    /// CSV event log.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Comma-separated predictors [default: vda,svr,svr_ts,dats]
    #[arg(long)]
    pub predictors: Option<String>,
    /// Number of folds [default: 5]
    #[arg(long)]
    pub folds: Option<usize>,
    /// Remove this fraction of the least frequent variants from training folds.
    #[arg(long)]
    pub remove_fraction: Option<f64>,
    /// Remove training traces containing this activity.
    #[arg(long)]
    pub remove_activity: Option<String>,
    /// Also evaluate DATS future paths against the random baseline.
    #[arg(long)]
    pub paths: bool,
    /// Total random-baseline walks [default: 100000]
    #[arg(long)]
    pub random_draws: Option<usize>,
    /// Directory for report.json, tables and path series.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ServeArgs {
    /// Archive to load, as `path` or `id=path`; repeatable. The first is the default model.
    #[arg(long)]
    pub model: Vec<String>,
    /// Listen address [default: 127.0.0.1:8080]
    #[arg(long)]
    pub bind: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct GenLogArgs {
    /// JSON generator spec.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the spec's case count.
    #[arg(long)]
    pub cases: Option<usize>,
    /// Override the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub enum CliError {
    User(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::User(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::User(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

fn user(m: impl Into<String>) -> CliError {
    CliError::User(m.into())
}

impl From<LogError> for CliError {
    fn from(e: LogError) -> Self {
        user(format!("event log: {e}"))
    }
}

impl From<PredictorError> for CliError {
    fn from(e: PredictorError) -> Self {
        match e {
            PredictorError::Svr(_) | PredictorError::Transition { .. } => CliError::Internal(e.to_string()),
            _ => user(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Predictor(p) => p.into(),
            e => user(e.to_string()),
        }
    }
}

/// Overlays the flags given on the command line onto the config-file values.
fn merge<T: Serialize + DeserializeOwned>(cli: &T, file: Option<&T>) -> T {
    let Some(file) = file else {
        return serde_json::from_value(serde_json::to_value(cli).expect("args serialize")).expect("args round trip");
    };
    let mut base = serde_json::to_value(file).expect("args serialize");
    let over = serde_json::to_value(cli).expect("args serialize");
    if let (Some(base), Some(over)) = (base.as_object_mut(), over.as_object()) {
        for (k, v) in over {
            let given = match v {
                serde_json::Value::Null | serde_json::Value::Bool(false) => false,
                serde_json::Value::Array(a) => !a.is_empty(),
                _ => true,
            };
            if given {
                base.insert(k.clone(), v.clone());
            }
        }
    }
    serde_json::from_value(base).expect("args round trip")
}

/// Parsed config file: table name → table.
#[derive(Debug, Default)]
pub struct ConfigFile {
    tables: BTreeMap<String, toml::Value>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| user(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| user(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let value: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
        let mut tables = BTreeMap::new();
        for (k, v) in value {
            match k.as_str() {
                "train" | "predict" | "evaluate" | "serve" | "gen-log" if v.is_table() => {
                    tables.insert(k, v);
                }
                _ => return Err(format!("unknown table `{k}`; expected train, predict, evaluate, serve or gen-log")),
            }
        }
        Ok(Self { tables })
    }

    /// The table for `name`, rejecting keys that are not flags of it.
    pub fn section<T: Serialize + DeserializeOwned + Default>(&self, name: &str) -> Result<Option<T>, CliError> {
        let Some(v) = self.tables.get(name) else {
            return Ok(None);
        };
        let known = serde_json::to_value(T::default()).expect("args serialize");
        let known = known.as_object().expect("args are a struct");
        if let Some(t) = v.as_table() {
            if let Some(k) = t.keys().find(|k| !known.contains_key(k.as_str())) {
                return Err(user(format!("config [{name}]: unknown key `{k}`")));
            }
        }
        v.clone()
            .try_into()
            .map(Some)
            .map_err(|e: toml::de::Error| user(format!("config [{name}]: {e}")))
    }
}

fn parse_enum<T: DeserializeOwned>(what: &str, s: &str) -> Result<T, CliError> {
    serde_json::from_value(serde_json::Value::String(s.trim().to_lowercase()))
        .map_err(|_| user(format!("invalid {what} `{s}`")))
}

fn parse_list(what: &str, s: &str) -> Result<Vec<f64>, CliError> {
    let v: Result<Vec<f64>, _> = s.split(',').map(|x| x.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if !v.is_empty() && v.iter().all(|x| *x > 0.0 && x.is_finite()) => Ok(v),
        _ => Err(user(format!("{what} must be a comma-separated list of positive numbers, got `{s}`"))),
    }
}

fn positive(what: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(user(format!("{what} must be positive, got {v}")))
    }
}

pub fn train_config(kind: PredictorKind, m: &ModelArgs) -> Result<TrainConfig, CliError> {
    let mut cfg = TrainConfig::new(kind);
    if let Some(a) = &m.abstraction {
        cfg.abstraction = a.parse::<StateAbstraction>().map_err(|e| user(e.to_string()))?;
    }
    if let Some(s) = &m.statistic {
        cfg.statistic = parse_enum("statistic", s)?;
    }
    if let Some(k) = &m.kernel {
        cfg.svr.family = parse_enum("kernel", k)?;
    }
    if let Some(c) = m.c {
        cfg.svr.c = positive("c", c)?;
    }
    if let Some(g) = m.gamma {
        cfg.svr.gamma = positive("gamma", g)?;
    }
    if let Some(e) = m.epsilon_fraction {
        if !(e >= 0.0 && e.is_finite()) {
            return Err(user(format!("epsilon-fraction must be non-negative, got {e}")));
        }
        cfg.svr.epsilon_fraction = e;
    }
    cfg.svr.scale_targets = !m.raw_targets;
    if m.no_grid {
        cfg.svr.grid = None;
    } else {
        let mut grid = GridConfig {
            family: cfg.svr.family,
            seed: m.seed.unwrap_or(0),
            ..GridConfig::default()
        };
        if let Some(c) = &m.grid_c {
            grid.c_grid = parse_list("grid-c", c)?;
        }
        if let Some(g) = &m.grid_gamma {
            grid.gamma_grid = parse_list("grid-gamma", g)?;
        }
        cfg.svr.grid = Some(grid);
    }
    if let Some(a) = m.nb_alpha {
        cfg.nb_alpha = positive("nb-alpha", a)?;
    }
    if let Some(n) = &m.non_branching {
        cfg.non_branching = parse_enum("non-branching rule", n)?;
    }
    cfg.keep_history = !m.no_history;
    cfg.seed = m.seed.unwrap_or(0);
    Ok(cfg)
}

fn required<'a, T>(what: &str, v: &'a Option<T>) -> Result<&'a T, CliError> {
    v.as_ref().ok_or_else(|| user(format!("missing --{what}")))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| user(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| user(format!("{}: {e}", path.display())))
}

pub fn load_archive(path: &Path) -> Result<ModelArchive, CliError> {
    let text = fs::read_to_string(path).map_err(|e| user(format!("{}: {e}", path.display())))?;
    ModelArchive::from_json(&text).map_err(|e| user(format!("{}: {e}", path.display())))
}

fn regressor_note(r: &Regressor) -> String {
    match r {
        Regressor::Constant { value } => format!("constant {value:.0}s"),
        Regressor::Svr { model, .. } => match model.kernel {
            Kernel::Rbf { gamma } => format!("svr C={} γ={} sv={}", model.params.c, gamma, model.support.len()),
            Kernel::Linear => format!("svr C={} linear sv={}", model.params.c, model.support.len()),
        },
    }
}

/// Human summary of a trained model.
pub fn summary(archive: &ModelArchive) -> String {
    let mut out = String::new();
    let model = &archive.model;
    out.push_str(&format!("predictor: {}\n", model.kind()));
    if let Some(ts) = model.transition_system() {
        out.push_str(&format!(
            "abstraction: {}\nstates: {}\ntransitions: {}\naccepting states: {}\n",
            archive.config.abstraction,
            ts.state_count(),
            ts.transitions().len(),
            ts.accepting_states().len(),
        ));
    }
    match model {
        PredictorModel::Dats(m) => {
            out.push_str(&format!("branching states with a classifier: {}\n", m.classifiers.len()));
            for (id, t) in m.ts.transitions().iter().enumerate() {
                out.push_str(&format!(
                    "  {} -[{}]-> {}: {} examples, {}\n",
                    m.ts.state(t.source),
                    t.label,
                    m.ts.state(t.target),
                    m.training_sizes[id],
                    regressor_note(&m.regressors[id])
                ));
            }
        }
        PredictorModel::Svr(m) | PredictorModel::SvrTs(m) => {
            out.push_str(&format!("features: {}\nregressor: {}\n", m.schema.dim(), regressor_note(&m.regressor)));
        }
        PredictorModel::Vda(_) => {}
    }
    out.push_str(&format!("history traces: {}\n", archive.history.len()));
    out
}

fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let log_path = required("log", &args.log)?;
    let kind: PredictorKind = match &args.predictor {
        Some(p) => p.parse().map_err(|e: String| user(e))?,
        None => PredictorKind::Dats,
    };
    let cfg = train_config(kind, &args.model)?;
    let log = read_log(log_path)?;
    let archive = ModelArchive::train(&log, cfg)?;
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("model.json"));
    write_file(&out, &archive.to_json())?;
    print!("{}", summary(&archive));
    println!("archive: {}", out.display());
    Ok(())
}

/// Reads a running case from a JSON query or a CSV log.
pub fn load_query(path: &Path, case: Option<&str>, deadline: Option<&str>) -> Result<QueryRequest, CliError> {
    let text = fs::read_to_string(path).map_err(|e| user(format!("{}: {e}", path.display())))?;
    let mut req = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str::<QueryRequest>(&text).map_err(|e| user(format!("{}: {e}", path.display())))?
    } else {
        let log = ppm_core::parse_log(text.as_bytes())?;
        let trace = match case {
            Some(id) => log.trace(id).ok_or_else(|| user(format!("case `{id}` not in {}", path.display())))?,
            None if log.len() == 1 => &log.traces()[0],
            None => return Err(user(format!("{} holds {} cases; pick one with --case", path.display(), log.len()))),
        };
        let schema = log.schema();
        QueryRequest {
            events: trace
                .events
                .iter()
                .map(|e| QueryEvent {
                    activity: e.activity.clone(),
                    timestamp: format_timestamp(e.timestamp),
                    attributes: schema
                        .attributes
                        .iter()
                        .zip(&e.attributes)
                        .filter_map(|(d, v)| {
                            v.as_ref().map(|v| {
                                let j = match v {
                                    ppm_core::event_log::Value::Numeric(x) => serde_json::json!(x),
                                    ppm_core::event_log::Value::Nominal(s) => serde_json::json!(s),
                                };
                                (d.name.clone(), j)
                            })
                        })
                        .collect(),
                })
                .collect(),
            deadline: None,
            model: None,
        }
    };
    if let Some(d) = deadline {
        req.deadline = Some(d.to_string());
    }
    Ok(req)
}

fn hours(s: i64) -> String {
    format!("{:.2} h", s as f64 / 3600.0)
}

pub fn human_report(r: &QueryResponse) -> String {
    let mut out = format!(
        "remaining time: {} ({} s)\npredicted completion: {}\n",
        hours(r.remaining_seconds),
        r.remaining_seconds,
        r.predicted_completion
    );
    if r.alarm {
        out.push_str("ALARM: predicted completion is after the deadline\n");
    }
    if r.path.activities.is_empty() {
        out.push_str("predicted path: (case complete)\n");
    } else {
        out.push_str(&format!(
            "predicted path: {} (p = {:.4})\n",
            r.path.activities.join(" → "),
            r.path.probability
        ));
    }
    if r.safety.dropped_events > 0 || r.safety.global_fallback {
        out.push_str(&format!(
            "note: trace does not fit the model; safety mechanism dropped {} event(s){}\n",
            r.safety.dropped_events,
            if r.safety.global_fallback { " and fell back to the global mean" } else { "" }
        ));
    }
    for s in &r.similar {
        out.push_str(&format!(
            "similar ({}): case {} {} remaining {}\n",
            serde_json::to_value(s.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
            s.case_id,
            s.activities.join(","),
            hours(s.remaining_seconds)
        ));
    }
    out
}

fn cmd_predict(args: &PredictArgs) -> Result<(), CliError> {
    let archive = load_archive(required("model", &args.model)?)?;
    let req = load_query(required("trace", &args.trace)?, args.case.as_deref(), args.deadline.as_deref())?;
    let id = args
        .model
        .as_deref()
        .and_then(Path::file_stem)
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let response = service::answer(&id, &archive, &req).map_err(|e| user(e.to_string()))?;
    let json = serde_json::to_string(&response).expect("response serializes");
    match args.format.as_deref().unwrap_or("both") {
        "human" => print!("{}", human_report(&response)),
        "json" => println!("{json}"),
        "both" => {
            print!("{}", human_report(&response));
            println!("{json}");
        }
        other => return Err(user(format!("invalid format `{other}`; expected human, json or both"))),
    }
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let log = read_log(required("log", &args.log)?)?;
    let kinds: Vec<PredictorKind> = match &args.predictors {
        Some(list) => list
            .split(',')
            .map(|s| s.trim().parse::<PredictorKind>().map_err(user))
            .collect::<Result<_, _>>()?,
        None => PredictorKind::ALL.to_vec(),
    };
    if kinds.is_empty() {
        return Err(user("no predictors selected"));
    }
    let removal = match (args.remove_fraction, &args.remove_activity) {
        (Some(_), Some(_)) => return Err(user("use either --remove-fraction or --remove-activity")),
        (Some(f), None) if (0.0..=1.0).contains(&f) => Some(RemovalSpec::Fraction(f)),
        (Some(f), None) => return Err(user(format!("remove-fraction must be in [0, 1], got {f}"))),
        (None, Some(a)) => Some(RemovalSpec::Activity(a.clone())),
        (None, None) => None,
    };
    let cfg = train_config(PredictorKind::Dats, &args.model)?;
    let cv = CvConfig {
        folds: args.folds.unwrap_or(5),
        seed: args.model.seed.unwrap_or(0),
        removal,
        paths: args.paths,
        random_draws: args.random_draws.unwrap_or(100_000),
    };
    let report = cross_validate(&log, &kinds, &cfg, &cv)?;
    let table = report.time_table();
    println!("abstraction {}, {} folds, seed {}", report.abstraction, report.folds, report.seed);
    if let Some(r) = &report.removal {
        println!("removed from training: {r} ({} variants)", report.removed_variants);
    }
    print!("{table}");
    let paths = report.path_table();
    if let Some(p) = &paths {
        println!();
        print!("{p}");
    }
    if let Some(dir) = &args.out_dir {
        write_file(&dir.join("report.json"), &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
        write_file(&dir.join("time.txt"), &table)?;
        if let Some(p) = &paths {
            write_file(&dir.join("paths.txt"), p)?;
        }
        if let Some(series) = report.path_series() {
            write_file(&dir.join("paths.tsv"), &series)?;
        }
    }
    Ok(())
}

/// Parses `id=path` or `path` (id = file stem).
pub fn model_spec(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((id, path)) if !id.is_empty() => (id.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(spec);
            let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| spec.to_string());
            (id, path)
        }
    }
}

pub fn load_registry(models: &[String]) -> Result<Registry, CliError> {
    if models.is_empty() {
        return Err(user("missing --model"));
    }
    let mut registry = Registry::new();
    for spec in models {
        let (id, path) = model_spec(spec);
        registry.insert(id, load_archive(&path)?);
    }
    Ok(registry)
}

fn cmd_serve(args: &ServeArgs) -> Result<(), CliError> {
    let registry = Arc::new(load_registry(&args.model)?);
    let bind = args.bind.clone().unwrap_or_else(|| "127.0.0.1:8080".to_string());
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(&bind)
            .await
            .map_err(|e| user(format!("cannot bind {bind}: {e}")))?;
        log::info!("listening on {bind}");
        eprintln!("serving {} model(s) on http://{bind}", registry.models().len());
        axum::serve(listener, server::router(registry))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::Internal(e.to_string()))
    })
}

fn cmd_gen_log(args: &GenLogArgs) -> Result<(), CliError> {
    let path = required("spec", &args.spec)?;
    let text = fs::read_to_string(path).map_err(|e| user(format!("{}: {e}", path.display())))?;
    let mut spec: GeneratorSpec = serde_json::from_str(&text).map_err(|e| user(format!("{}: {e}", path.display())))?;
    if let Some(n) = args.cases {
        spec.cases = n;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    let log = generate_log(&spec)?;
    let csv = serialize_log(&log);
    match &args.out {
        Some(out) => {
            write_file(out, &csv)?;
            eprintln!("{} cases, {} events → {}", log.len(), log.event_count(), out.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match &cli.command {
        Command::Train(a) => cmd_train(&merge(a, file.section("train")?.as_ref())),
        Command::Predict(a) => cmd_predict(&merge(a, file.section("predict")?.as_ref())),
        Command::Evaluate(a) => cmd_evaluate(&merge(a, file.section("evaluate")?.as_ref())),
        Command::Serve(a) => cmd_serve(&merge(a, file.section("serve")?.as_ref())),
        Command::GenLog(a) => cmd_gen_log(&merge(a, file.section("gen-log")?.as_ref())),
    }
}

/// Entry point: 0 on success, 1 on user errors, 2 on internal errors.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match std::panic::catch_unwind(|| execute(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(2)
        }
    }
}
