//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero when
//! any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wecs_core::gfs::Term;
use wecs_core::mlp::{self, MlpNetwork, Pattern};
use wecs_core::rbf;
use wecs_core::simloop::{run, Controller, SimConfig, TraceRecord};
use wecs_core::turbine::{find_cp_max, power_coefficient};
use wecs_core::{
    aerodynamic_power, build_training_set, compute_metrics, evolve, generate_wind, optimal_pitch,
    required_cp, ArmaParams, GaConfig, LambdaIForm, MlpTrainConfig, RbfTrainConfig,
    ReferenceDataset, TurbineParams, WindConfig, WindSeries,
};

struct Verdict {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn timed(id: u32, title: &'static str, body: impl FnOnce() -> (bool, String)) -> Verdict {
    let start = Instant::now();
    let (pass, detail) = body();
    Verdict {
        id,
        title,
        pass,
        detail,
        elapsed: start.elapsed(),
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

const SEEDS: std::ops::RangeInclusive<u64> = 1..=10;

fn dataset(p: &TurbineParams) -> ReferenceDataset {
    build_training_set(p, p.v_cutin, p.v_cutout, 0.5).expect("reference dataset")
}

/// Exhaustive lambda grid at step 0.001.
fn grid_cp_max(beta: f64) -> (f64, f64) {
    (100..=15000)
        .map(|i| {
            let l = i as f64 * 1e-3;
            (power_coefficient(l, beta, LambdaIForm::Corrected), l)
        })
        .fold(
            (f64::NEG_INFINITY, 0.0),
            |a, b| if b.0 > a.0 { b } else { a },
        )
}

fn cp_surface() -> (bool, String) {
    let start = Instant::now();
    let found = find_cp_max(0.0, LambdaIForm::Corrected);
    let runtime = start.elapsed().as_secs_f64();
    let (oracle_cp, oracle_l) = grid_cp_max(0.0);
    let pass = (found.cp_max - 0.48).abs() <= 0.005
        && (found.lambda_star - 8.1).abs() <= 0.1
        && (found.cp_max - oracle_cp).abs() <= 1e-6
        && (found.lambda_star - oracle_l).abs() <= 2e-3
        && runtime < 1.0;
    (
        pass,
        format!(
            "cp_max {:.4} at lambda* {:.3} (grid oracle {:.4} at {:.3}), search {:.4} s",
            found.cp_max, found.lambda_star, oracle_cp, oracle_l, runtime
        ),
    )
}

fn rated_power(p: &TurbineParams) -> (bool, String) {
    let req = required_cp(12.0, p);
    let cp_max = find_cp_max(0.0, LambdaIForm::Corrected).cp_max;
    (
        (req - 0.4277).abs() <= 5e-4 && req < cp_max,
        format!("required_cp(12) {req:.5}, cp_max {cp_max:.4}"),
    )
}

fn optimal_pitch_closure(p: &TurbineParams) -> (bool, String) {
    let start = Instant::now();
    let omega = p.rated_point().omega_rated;
    let mut worst = (0.0_f64, 0.0);
    let mut failing = Vec::new();
    for v in 13..=25 {
        let v = v as f64;
        let err = optimal_pitch(v, omega, p)
            .and_then(|sol| aerodynamic_power(v, omega, sol.beta, p))
            .map(|aero| (aero.power - p.p_rated).abs() / p.p_rated)
            .unwrap_or(f64::INFINITY);
        if err > 1e-3 {
            failing.push(format!("{v} m/s ({:.2}%)", 100.0 * err));
        }
        if err > worst.0 {
            worst = (err, v);
        }
    }
    let runtime = start.elapsed().as_secs_f64();
    let detail = format!(
        "worst |P - P_rated| {:.4}% at {} m/s; over 0.1%: [{}]; {:.3} s",
        100.0 * worst.0,
        worst.1,
        failing.join(", "),
        runtime
    );
    (failing.is_empty() && runtime < 1.0, detail)
}

fn wind_statistics() -> (bool, String) {
    let cfg = WindConfig {
        v_mean: 12.0,
        dt: 0.1,
        duration: 1.0e4,
        ..WindConfig::default()
    };
    let w = generate_wind(&cfg, &ArmaParams::default()).expect("wind");
    let n = w.len() as f64;
    let mean = w.speeds().iter().sum::<f64>() / n;
    let var = w.speeds().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    let target_std = cfg.turbulence_intensity * cfg.v_mean;
    (
        (std - target_std).abs() <= 0.1 * target_std && (mean - 12.0).abs() <= 0.02 * 12.0,
        format!(
            "mean {mean:.4} m/s, std {std:.4} m/s (target 1.92), {} samples",
            w.len()
        ),
    )
}

/// Backprop against central differences of the total error.
fn mlp_gradient_check() -> (bool, String) {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for net_seed in 0..5 {
        let net = MlpNetwork::random(&[2, 5, 1], 1.0, 100 + net_seed).expect("net");
        let mut rng = ChaCha8Rng::seed_from_u64(200 + net_seed);
        for _ in 0..10 {
            let pat = vec![Pattern {
                input: vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)],
                target: vec![rng.random_range(0.0..1.0)],
            }];
            // The gradient holds the descent direction -1/2 d(eps)/d(theta).
            let g = net.gradient(&pat).expect("gradient");
            let eps = |n: &MlpNetwork| n.total_error(&pat).expect("error");
            let mut compare = |analytic: f64, numeric: f64| {
                let scale = analytic.abs().max(numeric.abs());
                if scale > 1e-7 {
                    worst = worst.max((analytic - numeric).abs() / scale);
                }
            };
            for l in 0..net.weights().len() {
                for k in 0..net.weights()[l].len() {
                    let (mut up, mut down) = (net.clone(), net.clone());
                    up.weights_mut()[l][k] += h;
                    down.weights_mut()[l][k] -= h;
                    compare(-2.0 * g.weights[l][k], (eps(&up) - eps(&down)) / (2.0 * h));
                }
                for k in 0..net.thresholds()[l].len() {
                    let (mut up, mut down) = (net.clone(), net.clone());
                    up.thresholds_mut()[l][k] += h;
                    down.thresholds_mut()[l][k] -= h;
                    compare(
                        -2.0 * g.thresholds[l][k],
                        (eps(&up) - eps(&down)) / (2.0 * h),
                    );
                }
            }
        }
    }
    (
        worst <= 1e-4,
        format!("max relative error {worst:.2e} over 5 nets x 10 samples"),
    )
}

fn mlp_training(p: &TurbineParams, ds: &ReferenceDataset) -> (bool, String) {
    let start = Instant::now();
    let (train, held_out) = ds.holdout_split();
    let cfg = MlpTrainConfig::default();
    let out = mlp::train_pitch_controller(p, &train, &cfg).expect("mlp training");
    let runtime = start.elapsed().as_secs_f64();
    let rmse = held_out.pitch_rmse(|s| out.net.predict_pitch(s.v, s.p_pu));
    (
        rmse <= 0.5 && out.history.len() <= 20000 && runtime < 30.0,
        format!(
            "held-out RMSE {rmse:.4} deg after {} epochs, {runtime:.2} s",
            out.history.len()
        ),
    )
}

fn rbf_training(p: &TurbineParams, ds: &ReferenceDataset) -> (bool, String) {
    let (train, held_out) = ds.holdout_split();
    let cfg = RbfTrainConfig::default();
    let out = rbf::train_pitch_controller(p, &train, &cfg).expect("rbf training");
    let rmse = held_out.pitch_rmse(|s| out.net.predict_pitch(s.v, s.p_pu, s.omega_pu));
    let patterns = out.net.patterns(&train).expect("patterns");
    let bound = out.net.lms_stability_bound(&patterns).expect("bound");
    let increases = out.history.windows(2).filter(|w| w[1] > w[0]).count();
    (
        rmse <= 0.8 && increases == 0 && cfg.learning_rate <= bound,
        format!(
            "held-out RMSE {rmse:.4} deg (H = {}), alpha {} <= bound {bound:.3}, {increases} error increases over {} epochs",
            out.net.hidden_units(),
            cfg.learning_rate,
            out.history.len()
        ),
    )
}

struct GaRun {
    monotone: bool,
    elitist: bool,
    ordered: bool,
    code: String,
    seconds: f64,
}

fn ga_runs(p: &TurbineParams, ds: &ReferenceDataset) -> Vec<GaRun> {
    thread::scope(|s| {
        let handles: Vec<_> = SEEDS
            .map(|seed| {
                s.spawn(move || {
                    let start = Instant::now();
                    let cfg = GaConfig {
                        seed,
                        ..GaConfig::default()
                    };
                    let evo = evolve(&cfg, ds, p).expect("evolution");
                    let seconds = start.elapsed().as_secs_f64();
                    let rb = &evo.rule_base;
                    let idx = |t| rb.consequent_of(t).map(Term::index);
                    let ordered = matches!(
                        (idx(Term::Large), idx(Term::MediumLarge), idx(Term::Medium)),
                        (Some(l), Some(ml), Some(m)) if l >= ml && ml >= m
                    );
                    GaRun {
                        monotone: rb.is_monotone(),
                        elitist: evo.history.windows(2).all(|w| w[1].best >= w[0].best),
                        ordered,
                        code: rb
                            .rules()
                            .iter()
                            .map(|r| r.encode())
                            .collect::<Vec<_>>()
                            .join(" "),
                        seconds,
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("GA thread"))
            .collect()
    })
}

fn gfs_evolution(runs: &[GaRun]) -> (bool, String) {
    let monotone = runs.iter().filter(|r| r.monotone).count();
    let elitist = runs.iter().all(|r| r.elitist);
    let slowest = runs.iter().map(|r| r.seconds).fold(0.0, f64::max);
    (
        monotone >= 8 && elitist && slowest < 60.0,
        format!(
            "{monotone}/10 monotone, best fitness non-decreasing in {}/10, slowest run {slowest:.2} s",
            runs.iter().filter(|r| r.elitist).count()
        ),
    )
}

fn rule_ordering(runs: &[GaRun]) -> (bool, String) {
    let ordered = runs.iter().filter(|r| r.ordered).count();
    let codes: Vec<&str> = runs.iter().map(|r| r.code.as_str()).collect();
    (
        ordered >= 8,
        format!(
            "L >= ML >= M in {ordered}/10 seeds; bases [{}]",
            codes.join(" | ")
        ),
    )
}

struct Trained {
    controllers: Vec<Controller>,
    fixed: Controller,
}

fn trained(p: &TurbineParams, ds: &ReferenceDataset) -> Trained {
    let (train, _) = ds.holdout_split();
    let mlp = mlp::train_pitch_controller(p, &train, &MlpTrainConfig::default())
        .expect("mlp")
        .net;
    let rbf = rbf::train_pitch_controller(p, &train, &RbfTrainConfig::default())
        .expect("rbf")
        .net;
    let gfs = evolve(&GaConfig::default(), ds, p).expect("gfs").rule_base;
    let beta16 = optimal_pitch(16.0, p.rated_point().omega_rated, p)
        .expect("beta*(16)")
        .beta;
    Trained {
        controllers: vec![
            Controller::Mlp(mlp),
            Controller::Rbf(rbf),
            Controller::Gfs(gfs),
        ],
        fixed: Controller::FixedPitch(beta16),
    }
}

fn steady_regulation(
    p: &TurbineParams,
    t: &Trained,
    traces: &mut Vec<Vec<TraceRecord>>,
) -> (bool, String) {
    let wind = WindSeries::constant(16.0, 1.0, 120.0).expect("wind");
    let cfg = SimConfig {
        duration: 120.0,
        ..SimConfig::default()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for ctrl in &t.controllers {
        let trace = run(&wind, p, ctrl, &cfg).expect("simulation");
        let worst = trace
            .iter()
            .filter(|r| r.t >= 60.0 - 1e-9)
            .map(|r| (r.p_pu - 1.0).abs())
            .fold(0.0, f64::max);
        pass &= worst <= 0.02;
        parts.push(format!(
            "{} final {:.4} (max |p - 1| after 60 s {:.4})",
            ctrl.name(),
            trace.last().unwrap().p_pu,
            worst
        ));
        traces.push(trace);
    }
    (pass, parts.join("; "))
}

fn turbulence_rejection(
    p: &TurbineParams,
    t: &Trained,
    traces: &mut Vec<Vec<TraceRecord>>,
) -> (bool, String) {
    let cfg = SimConfig::default();
    let all: Vec<&Controller> = t.controllers.iter().chain([&t.fixed]).collect();
    let per_seed: Vec<Vec<Vec<TraceRecord>>> = thread::scope(|s| {
        let handles: Vec<_> = SEEDS
            .map(|seed| {
                let all = &all;
                let cfg = &cfg;
                s.spawn(move || {
                    let wind_cfg = WindConfig {
                        v_mean: 16.0,
                        turbulence_intensity: 0.16,
                        duration: 600.0,
                        seed,
                        ..WindConfig::default()
                    };
                    let wind = generate_wind(&wind_cfg, &ArmaParams::default()).expect("wind");
                    all.iter()
                        .map(|c| run(&wind, p, c, cfg).expect("simulation"))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sim thread"))
            .collect()
    });

    let mut stds: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut mins: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for seed_traces in &per_seed {
        for (i, trace) in seed_traces.iter().enumerate() {
            let m = compute_metrics(trace, cfg.settle_time).expect("metrics");
            stds.entry(i).or_default().push(m.std_p_pu);
            mins.entry(i).or_default().push(m.min_p_pu);
        }
    }
    let fixed_std = median(stds[&(all.len() - 1)].clone());
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, ctrl) in t.controllers.iter().enumerate() {
        let ratio = median(stds[&i].clone()) / fixed_std;
        let min = median(mins[&i].clone());
        pass &= ratio <= 0.5 && min >= 0.7;
        parts.push(format!("{} std ratio {ratio:.3} min {min:.3}", ctrl.name()));
    }
    parts.push(format!("fixed_pitch median std {fixed_std:.3}"));
    traces.extend(per_seed.into_iter().flatten());
    (pass, parts.join("; "))
}

fn below_rated_tracking(
    p: &TurbineParams,
    t: &Trained,
    traces: &mut Vec<Vec<TraceRecord>>,
) -> (bool, String) {
    let lambda_star = find_cp_max(p.effective_pitch(p.beta_min), p.lambda_i_form).lambda_star;
    let wind = WindSeries::constant(10.0, 1.0, 300.0).expect("wind");
    let cfg = SimConfig {
        duration: 300.0,
        ..SimConfig::default()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for ctrl in t.controllers.iter().chain([&Controller::None]) {
        let trace = run(&wind, p, ctrl, &cfg).expect("simulation");
        let lambda = trace.last().unwrap().lambda;
        let rel = (lambda - lambda_star).abs() / lambda_star;
        pass &= rel <= 0.02;
        parts.push(format!(
            "{} lambda {lambda:.4} ({:.3}%)",
            ctrl.name(),
            100.0 * rel
        ));
        traces.push(trace);
    }
    (
        pass,
        format!("lambda* {lambda_star:.4}; {}", parts.join("; ")),
    )
}

fn actuator_safety(p: &TurbineParams, traces: &[Vec<TraceRecord>]) -> (bool, String) {
    let tol = 1e-9;
    let mut range_violations = 0usize;
    let mut rate_violations = 0usize;
    let mut max_rate: f64 = 0.0;
    let mut steps = 0usize;
    for trace in traces {
        for r in trace {
            if r.beta < p.beta_min - tol || r.beta > p.beta_max + tol {
                range_violations += 1;
            }
        }
        for w in trace.windows(2) {
            let rate = (w[1].beta - w[0].beta).abs() / (w[1].t - w[0].t);
            max_rate = max_rate.max(rate);
            if rate > p.beta_rate_max + tol {
                rate_violations += 1;
            }
            steps += 1;
        }
    }
    (
        range_violations == 0 && rate_violations == 0,
        format!(
            "{} traces, {steps} steps: {range_violations} range and {rate_violations} rate violations, max |dbeta/dt| {max_rate:.4} deg/s",
            traces.len()
        ),
    )
}

fn csv_files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).expect("read_dir") {
            let path = entry.expect("entry").path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                out.insert(rel, fs::read(&path).expect("read"));
            }
        }
    }
    out
}

fn repro_determinism() -> (bool, String) {
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let dir = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_wecs"))
            .args([
                "repro",
                "--seed",
                "7",
                "--seeds",
                "2",
                "--duration",
                "120",
                "--out",
            ])
            .arg(&dir)
            .output()
            .expect("wecs runs");
        if !status.status.success() {
            return (
                false,
                format!(
                    "repro failed: {}",
                    String::from_utf8_lossy(&status.stderr).trim()
                ),
            );
        }
        outputs.push(csv_files(&dir));
    }
    let (a, b) = (&outputs[0], &outputs[1]);
    let differing: Vec<String> = a
        .keys()
        .chain(b.keys())
        .filter(|k| a.get(*k) != b.get(*k))
        .map(|k| k.display().to_string())
        .collect();
    (
        !a.is_empty() && differing.is_empty(),
        format!(
            "{} CSV artifacts per run (repro --seeds 2 --duration 120), {} differ",
            a.len(),
            differing.len()
        ),
    )
}

fn main() {
    let p = TurbineParams::default();
    let ds = dataset(&p);
    let mut verdicts = Vec::new();
    let mut traces = Vec::new();

    verdicts.push(timed(1, "Cp surface closure", cp_surface));
    verdicts.push(timed(2, "Rated-power consistency", || rated_power(&p)));
    verdicts.push(timed(3, "Optimal-pitch closure", || {
        optimal_pitch_closure(&p)
    }));
    verdicts.push(timed(4, "Wind statistics", wind_statistics));
    verdicts.push(timed(5, "MLP gradient check", mlp_gradient_check));
    verdicts.push(timed(6, "MLP training", || mlp_training(&p, &ds)));
    verdicts.push(timed(7, "RBF training", || rbf_training(&p, &ds)));
    let mut runs = Vec::new();
    verdicts.push(timed(8, "GFS evolution", || {
        runs = ga_runs(&p, &ds);
        gfs_evolution(&runs)
    }));
    verdicts.push(timed(9, "Rule-base ordering", || rule_ordering(&runs)));
    let t = trained(&p, &ds);
    verdicts.push(timed(10, "Steady-wind regulation", || {
        steady_regulation(&p, &t, &mut traces)
    }));
    verdicts.push(timed(11, "Turbulence rejection", || {
        turbulence_rejection(&p, &t, &mut traces)
    }));
    verdicts.push(timed(12, "Below-rated tracking", || {
        below_rated_tracking(&p, &t, &mut traces)
    }));
    verdicts.push(timed(13, "Actuator safety", || {
        actuator_safety(&p, &traces)
    }));
    verdicts.push(timed(14, "Repro determinism", repro_determinism));

    println!("acceptance criteria");
    for v in &verdicts {
        println!(
            "{} #{:<2} {:<24} {} [{:.2} s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.id,
            v.title,
            v.detail,
            v.elapsed.as_secs_f64()
        );
    }
    let passed = verdicts.iter().filter(|v| v.pass).count();
    println!("{passed}/{} criteria passed", verdicts.len());
    if passed != verdicts.len() {
        std::process::exit(1);
    }
}
