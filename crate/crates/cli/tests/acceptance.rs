//! One PASS/FAIL line per acceptance criterion. Runs without the test
//! harness so the report is always printed; exits non-zero when a criterion
//! fails, except those listed in `KNOWN_FAILURES` (kept visible as FAIL lines).

mod common;
#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ppm_cli::server::router;
use ppm_core::encoding::{FeatureKind, TrainingSet};
use ppm_core::evaluation::{
    cross_validate, generate_log, mape, path_metrics, rmspe, CvConfig, EvaluationReport, GeneratorSpec, RemovalSpec,
};
use ppm_core::fixtures;
use ppm_core::naive_bayes::NaiveBayes;
use ppm_core::predictors::{train, train_vda, PredictorModel, Statistic, TrainConfig};
use ppm_core::svr::{self, Kernel, SvrModel, SvrParams};
use ppm_core::{EventAbstraction, PredictorKind, StateAbstraction, StateRepr, TransitionSystem};

/// The printed ⟨A,D⟩ vector has components summing to 2.9, not the stated
/// denominator 2.4, so that sub-check cannot pass.
const KNOWN_FAILURES: &[&str] = &["worked examples"];

static SVR_CHECKED: AtomicUsize = AtomicUsize::new(0);
static SVR_VIOLATIONS: AtomicUsize = AtomicUsize::new(0);

fn record_svr(models: &[&SvrModel]) {
    SVR_CHECKED.fetch_add(models.len(), Ordering::Relaxed);
    let bad = models
        .iter()
        .filter(|m| m.info.coef_sum.abs() > 1e-2 || m.info.max_abs_coef > m.params.c * (1.0 + 1e-12))
        .count();
    SVR_VIOLATIONS.fetch_add(bad, Ordering::Relaxed);
}

fn record_report(r: &EvaluationReport) {
    for p in &r.predictors {
        for f in &p.folds {
            SVR_CHECKED.fetch_add(f.svr_models, Ordering::Relaxed);
            SVR_VIOLATIONS.fetch_add(f.dual_violations, Ordering::Relaxed);
        }
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(ok: bool, failures: &mut Vec<String>, what: impl Into<String>) {
    if !ok {
        failures.push(what.into());
    }
}

fn outcome(failures: Vec<String>, detail: String) -> Outcome {
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() { detail } else { format!("{detail}; failed: {}", failures.join("; ")) },
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn worked_examples() -> Outcome {
    let mut f = Vec::new();
    let log = fixtures::three_variants();
    let ts = TransitionSystem::build(&log, StateAbstraction::set(), EventAbstraction::ActivityName);
    let v = ts.encode_state(&fixtures::events(&["A", "D"]), ts.abstraction().similarity());
    let order = [
        vec!["A"],
        vec!["A", "B"],
        vec!["A", "B", "C"],
        vec!["A", "B", "D"],
        vec!["A", "B", "E"],
        vec!["A", "B", "C", "F"],
        vec!["A", "B", "D", "F"],
        vec!["A", "B", "E", "F"],
    ];
    let listed = [0.5, 1.0 / 3.0, 0.25, 2.0 / 3.0, 0.25, 0.2, 0.5, 0.2];
    let sum: f64 = listed.iter().sum();
    let mut raw = Vec::new();
    for (set, want) in order.iter().zip(listed) {
        let id = ts.state_id(&StateRepr::set(set.iter().copied())).unwrap();
        raw.push(v.values[id - 1] * sum);
        check(close(v.values[id - 1], want / sum, 1e-9), &mut f, format!("component {set:?}"));
    }
    check(raw.iter().zip(listed).all(|(r, l)| close(*r, l, 1e-9)), &mut f, "raw components");
    check(
        close(sum, 2.4, 1e-9),
        &mut f,
        format!("denominator 2.4 (listed components sum to {sum:.1}; vector normalized by {sum:.1})"),
    );

    let (model, events) = fixtures::weighted_dats();
    let p = model.predict(&events).seconds;
    check(close(p, 1.8 * 3600.0, 1e-9), &mut f, format!("DATS {p} s"));

    let last = TransitionSystem::build(
        &log,
        StateAbstraction::with_horizon(ppm_core::AbstractionKind::Set, 1),
        EventAbstraction::ActivityName,
    );
    check(last.state_count() == 7 && last.transitions().len() == 8, &mut f, "last-event set 7/8");
    check(ts.state_count() == 9 && ts.accepting_states().len() == 3, &mut f, "full set 9/3");
    outcome(
        f,
        format!(
            "components {:?}, DATS {:.4} h, last-event {}/{}, full set {}/{}",
            raw.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>(),
            p / 3600.0,
            last.state_count(),
            last.transitions().len(),
            ts.state_count(),
            ts.accepting_states().len()
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut f = Vec::new();
    // naive Bayes: every input of 3 binary features, 2 classes
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut nb_inputs = 0;
    for _ in 0..10 {
        let data: Vec<(Vec<u8>, usize)> = (0..rng.gen_range(2..30))
            .map(|_| ((0..3).map(|_| rng.gen_range(0..2)).collect(), rng.gen_range(0..2)))
            .collect();
        let mut nb = NaiveBayes::new(vec![FeatureKind::Binary; 3], 1.0);
        nb.add_class(0);
        nb.add_class(1);
        for (x, y) in &data {
            nb.update(&x.iter().map(|&v| v as f64).collect::<Vec<_>>(), *y).unwrap();
        }
        for bits in 0..8u8 {
            let x: Vec<u8> = (0..3).map(|j| (bits >> j) & 1).collect();
            let want = oracle::nb_posterior(&data, 2, &x, 1.0);
            let got = nb.predict(&x.iter().map(|&v| v as f64).collect::<Vec<_>>()).unwrap();
            nb_inputs += 1;
            if !got.iter().all(|(c, p)| close(*p, want[*c], 1e-12)) {
                f.push(format!("NB input {x:?}"));
            }
        }
    }

    // best-first path search against exhaustive walks
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut queries, mut unique, mut max_states) = (0, 0, 0);
    for i in 0..25 {
        let log = oracle::random_log(&mut rng, 30);
        let PredictorModel::Dats(model) = train(&log, &oracle::quick_dats_config()).unwrap() else {
            unreachable!()
        };
        record_svr(&model.regressors.iter().filter_map(|r| r.svr()).collect::<Vec<_>>());
        max_states = max_states.max(model.ts.state_count());
        for t in log.traces().iter().take(8) {
            for k in 0..=t.len() {
                let o = oracle::enumerate_walks(&model, &log, t.prefix(k), 8);
                let got = model.predict_path(t.prefix(k)).unwrap();
                queries += 1;
                unique += usize::from(o.best_walks.len() == 1);
                if !o.best_walks.contains(&got.states) || !close(got.probability, o.best_probability, 1e-9) {
                    f.push(format!("path on system {i}, prefix {k}"));
                }
            }
        }
    }
    check(max_states <= 10, &mut f, format!("systems up to {max_states} states"));

    // VDA against prefix scan on Table 1
    let table = fixtures::table_1();
    let vda = train_vda(&table, StateAbstraction::set(), Statistic::Mean);
    let scan = oracle::vda_prefix_scan(&table);
    for (set, values) in &scan {
        let id = vda.ts.state_id(&StateRepr::set(set.iter().cloned())).unwrap();
        let mut got: Vec<i64> = vda.measurements[id].iter().flat_map(|(v, n)| std::iter::repeat(*v).take(n)).collect();
        let mut want = values.clone();
        got.sort();
        want.sort();
        check(got == want, &mut f, format!("VDA state {set:?}"));
    }
    f.truncate(5);
    outcome(
        f,
        format!(
            "NB {nb_inputs} inputs, paths {queries} queries on 25 systems (≤{max_states} states, {unique} unique optima), VDA {} states",
            scan.len()
        ),
    )
}

fn svr_line() -> Outcome {
    let mut f = Vec::new();
    let mut tr = TrainingSet::new();
    for i in 0..200 {
        let x = i as f64 / 199.0;
        tr.push(vec![x], 2.0 * x + 1.0);
    }
    let m = svr::train(&tr, Kernel::Linear, SvrParams::new(100.0, 0.01)).unwrap();
    record_svr(&[&m]);
    let worst = tr
        .x
        .iter()
        .zip(&tr.y)
        .map(|(x, y)| (m.predict(x).unwrap() - y).abs())
        .fold(0.0, f64::max);
    check(worst <= 0.01 + 1e-3, &mut f, format!("max residual {worst}"));
    outcome(f, format!("max residual {worst:.5}, {} iterations", m.info.iterations))
}

fn dual_constraints() -> Outcome {
    let checked = SVR_CHECKED.load(Ordering::Relaxed);
    let bad = SVR_VIOLATIONS.load(Ordering::Relaxed);
    let mut f = Vec::new();
    check(bad == 0, &mut f, format!("{bad} models violate"));
    check(checked > 0, &mut f, "no models checked");
    outcome(f, format!("|Σα| ≤ 1e-2 and 0 ≤ α ≤ C on {checked} trained models"))
}

fn spec(name: &str) -> GeneratorSpec {
    serde_json::from_str(&std::fs::read_to_string(common::data(name)).unwrap()).unwrap()
}

fn mape_of(r: &EvaluationReport, kind: PredictorKind) -> f64 {
    r.predictors.iter().find(|p| p.kind == kind).unwrap().mape.mean
}

fn safety_of(r: &EvaluationReport, kind: PredictorKind) -> usize {
    r.predictors.iter().find(|p| p.kind == kind).unwrap().folds.iter().map(|f| f.safety).sum()
}

fn stationary() -> Outcome {
    let mut f = Vec::new();
    let log = generate_log(&spec("stationary.json")).unwrap();
    let kinds = [PredictorKind::Vda, PredictorKind::SvrTs, PredictorKind::Dats];
    let r = cross_validate(&log, &kinds, &TrainConfig::default(), &CvConfig::default()).unwrap();
    record_report(&r);
    let (vda, svr_ts, dats) = (
        mape_of(&r, PredictorKind::Vda),
        mape_of(&r, PredictorKind::SvrTs),
        mape_of(&r, PredictorKind::Dats),
    );
    check(log.len() >= 2000, &mut f, "log size");
    check(dats <= 0.9 * vda, &mut f, "DATS margin");
    check(svr_ts <= 0.9 * vda, &mut f, "SVR+TS margin");
    outcome(
        f,
        format!("{} cases, 5-fold MAPE: VDA {vda:.2}%, SVR+TS {svr_ts:.2}%, DATS {dats:.2}%", log.len()),
    )
}

fn drift() -> Outcome {
    let mut f = Vec::new();
    let log = generate_log(&spec("drift.json")).unwrap();
    let kinds = [PredictorKind::Vda, PredictorKind::SvrTs, PredictorKind::Dats];
    let cv = CvConfig {
        removal: Some(RemovalSpec::Fraction(0.5)),
        ..CvConfig::default()
    };
    let r = cross_validate(&log, &kinds, &TrainConfig::default(), &cv).unwrap();
    record_report(&r);
    let (vda, svr_ts, dats) = (
        mape_of(&r, PredictorKind::Vda),
        mape_of(&r, PredictorKind::SvrTs),
        mape_of(&r, PredictorKind::Dats),
    );
    let (sv, sd) = (safety_of(&r, PredictorKind::Vda), safety_of(&r, PredictorKind::Dats));
    check(svr_ts <= 0.95 * vda.min(dats), &mut f, "SVR+TS margin");
    check(sv > 0 && sd > 0, &mut f, "safety mechanism did not fire");
    outcome(
        f,
        format!(
            "{} of {} variants removed from training; MAPE: VDA {vda:.2}%, DATS {dats:.2}%, SVR+TS {svr_ts:.2}%; safety used {sv} (VDA) / {sd} (DATS) times",
            r.removed_variants,
            ppm_core::event_log::variants(&log).len()
        ),
    )
}

fn paths() -> Outcome {
    let mut f = Vec::new();
    let log = generate_log(&spec("paths.json")).unwrap();
    let cfg = TrainConfig {
        abstraction: "set:1".parse().unwrap(),
        ..TrainConfig::default()
    };
    let cv = CvConfig {
        paths: true,
        random_draws: 100_000,
        ..CvConfig::default()
    };
    let r = cross_validate(&log, &[PredictorKind::Dats], &cfg, &cv).unwrap();
    record_report(&r);
    let fpp = r.predictors[0].paths.as_ref().unwrap();
    let random = r.random.as_ref().unwrap();
    check(fpp.expected_dam > random.expected_dam, &mut f, "E DAM");
    check(fpp.expected_pre > random.expected_pre, &mut f, "E PRE");
    let dam: Vec<f64> = fpp.rows.iter().map(|r| r.dam.mean).collect();
    let pre: Vec<f64> = fpp.rows.iter().map(|r| r.pre.mean).collect();
    check(dam.len() == 5, &mut f, "five horizons");
    check(dam.windows(2).all(|w| w[1] <= w[0] + 1e-12), &mut f, "DAM increases with horizon");
    check(pre.windows(2).all(|w| w[1] <= w[0] + 1e-12), &mut f, "PRE increases with horizon");
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    outcome(
        f,
        format!(
            "E DAM {:.4} vs random {:.4}, E PRE {:.4} vs random {:.4}; DAM by horizon [{}], PRE [{}]",
            fpp.expected_dam,
            random.expected_dam,
            fpp.expected_pre,
            random.expected_pre,
            fmt(&dam),
            fmt(&pre)
        ),
    )
}

fn metric_units() -> Outcome {
    let mut f = Vec::new();
    let exact = |x: f64, y: f64| close(x, y, 1e-12);
    check(mape(&[100.0, 200.0], &[100.0, 200.0]).unwrap().value == 0.0, &mut f, "mape A=F");
    check(exact(mape(&[100.0, 200.0], &[110.0, 180.0]).unwrap().value, 10.0), &mut f, "mape 10%");
    check(exact(mape(&[50.0], &[100.0]).unwrap().value, 100.0), &mut f, "mape 100%");
    check(rmspe(&[100.0, 200.0], &[100.0, 200.0]).unwrap().value == 0.0, &mut f, "rmspe A=F");
    check(exact(rmspe(&[100.0, 200.0], &[110.0, 180.0]).unwrap().value, 10.0), &mut f, "rmspe 10%");
    check(path_metrics(&["a", "b", "c"], &["a", "b", "c"], 3) == (1.0, 1.0), &mut f, "identical paths");
    let (dam, pre) = path_metrics(&["a", "b", "c"], &["a", "c", "b"], 3);
    check(exact(dam, 2.0 / 3.0) && exact(pre, 1.0 / 3.0), &mut f, "transposed paths");
    check(path_metrics(&["a", "b"], &["x", "y"], 2) == (0.0, 0.0), &mut f, "disjoint paths");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut held = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..30);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..1e6)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2e6)).collect();
        held += usize::from(rmspe(&a, &p).unwrap().value >= mape(&a, &p).unwrap().value - 1e-9);
    }
    check(held == 1000, &mut f, format!("RMSPE ≥ MAPE on {held}/1000"));
    outcome(f, format!("8 worked examples, RMSPE ≥ MAPE on {held}/1000 random samples"))
}

fn service_contract() -> Outcome {
    let mut f = Vec::new();
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(8).enable_all().build().unwrap();
    let (golden, concurrent) = rt.block_on(async {
        let app = router(common::registry());
        (common::run_golden(app.clone(), false).await, common::concurrent_identical(app).await)
    });
    let detail = match &golden {
        Ok((n, alarms)) => {
            check(*alarms == [true, true], &mut f, "alarm true and false not both covered");
            format!("{n} golden cases, 64 concurrent queries identical: {concurrent}")
        }
        Err(e) => {
            f.push(e.clone());
            format!("64 concurrent queries identical: {concurrent}")
        }
    };
    check(concurrent, &mut f, "concurrent bodies differ");
    outcome(f, detail)
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let secs = Duration::from_secs;
    // the dual-constraint line runs last so it sees every model trained above
    let criteria: [Criterion; 9] = [
        ("worked examples", worked_examples, secs(1)),
        ("oracle equivalence", oracle_equivalence, secs(30)),
        ("svr line fit", svr_line, secs(10)),
        ("stationary scenario", stationary, secs(300)),
        ("drift scenario", drift, secs(300)),
        ("path dominance", paths, secs(180)),
        ("metric units", metric_units, secs(10)),
        ("service contract", service_contract, secs(10)),
        ("svr dual constraints", dual_constraints, secs(1)),
    ];
    let mut failed = Vec::new();
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run));
        let took = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) if took <= limit => (o.pass, o.detail),
            Ok(o) => (false, format!("{}; took {took:.1?} (limit {limit:?})", o.detail)),
            Err(_) => (false, "panicked".to_string()),
        };
        println!("{} {name} [{took:.2?}]: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass && !KNOWN_FAILURES.contains(&name) {
            failed.push(name);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
