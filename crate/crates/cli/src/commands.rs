use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::thread;

use anyhow::{anyhow, Context, Result};
use wecs_core::gfs::write_history_csv;
use wecs_core::netfile::{load_model, save_model};
use wecs_core::simloop::{read_trace_csv, run, write_trace_csv, Comparison, TraceRecord};
use wecs_core::{
    build_training_set, compare, compute_metrics, evolve, generate_wind, mlp, optimal_pitch, rbf,
    Controller, Metrics, NetworkModel, ReferenceDataset, RuleBase, TurbineParams, WindSeries,
};

use crate::args::{Cli, Command, ControllerKind, NetKind, WindArgs};
use crate::files::{open, sibling, with_suffix, write_atomic, write_text};
use crate::lab::LabConfig;
use crate::manifest::RunManifest;
use crate::plot::{Chart, Series};
use crate::UsageError;

/// Executes one parsed command line, writing the human-readable report to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let mut lab = match &cli.config {
        Some(path) => {
            LabConfig::load(path).with_context(|| format!("loading {}", path.display()))?
        }
        None => LabConfig::default(),
    };
    if let Some(seed) = cli.seed {
        lab.seed = seed;
    }
    let config = cli.config.as_deref();
    match cli.command {
        Command::Wind { wind, out: path } => cmd_wind(&lab, &wind, &path, out),
        Command::Refgen {
            v_min,
            v_max,
            step,
            out: path,
        } => {
            lab.dataset_v_min = v_min.unwrap_or(lab.dataset_v_min);
            lab.dataset_v_max = v_max.unwrap_or(lab.dataset_v_max);
            lab.dataset_step = step.unwrap_or(lab.dataset_step);
            cmd_refgen(&lab, &path, out)
        }
        Command::Train {
            kind,
            dataset,
            out: path,
        } => cmd_train(&lab, kind, &dataset, &path, out),
        Command::Evolve {
            dataset,
            iterations,
            out: path,
        } => {
            lab.ga_iterations = iterations.unwrap_or(lab.ga_iterations);
            cmd_evolve(&lab, &dataset, &path, out)
        }
        Command::Simulate {
            controller,
            model,
            wind,
            fixed_pitch,
            wind_args,
            out: prefix,
        } => {
            let req = SimulateRequest {
                controller,
                model,
                wind,
                fixed_pitch,
                wind_args,
            };
            cmd_simulate(&lab, config, &req, &prefix, out)
        }
        Command::Compare { traces, out: path } => cmd_compare(&lab, &traces, &path, out),
        Command::Repro {
            seeds,
            wind,
            out: dir,
        } => {
            lab.repro_seeds = seeds.unwrap_or(lab.repro_seeds);
            cmd_repro(&lab, config, &wind, &dir, out)
        }
    }
}

fn apply_wind_args(lab: &mut LabConfig, args: &WindArgs, dt_is_sim: bool) {
    if let Some(ti) = args.ti {
        lab.wind_turbulence_intensity = ti;
    }
    if let Some(v) = args.v_mean {
        lab.wind_v_mean = v;
    }
    if let Some(d) = args.duration {
        lab.wind_duration = d;
        lab.sim_duration = d;
    }
    if let Some(dt) = args.dt {
        if dt_is_sim {
            lab.sim_dt = dt;
        } else {
            lab.wind_dt = dt;
        }
    }
}

pub fn cmd_wind(lab: &LabConfig, args: &WindArgs, path: &Path, out: &mut dyn Write) -> Result<()> {
    let mut lab = lab.clone();
    apply_wind_args(&mut lab, args, false);
    let series = generate_wind(&lab.wind(), &lab.arma())?;
    write_atomic(path, |w| Ok(series.write_csv(w)?))?;
    let s = series.stats();
    writeln!(
        out,
        "wrote {} samples to {}\nmean {:.4} m/s  std {:.4} m/s  min {:.4} m/s  max {:.4} m/s",
        series.len(),
        path.display(),
        s.mean,
        s.std,
        s.min,
        s.max
    )?;
    Ok(())
}

pub fn cmd_refgen(lab: &LabConfig, path: &Path, out: &mut dyn Write) -> Result<()> {
    let ds = build_training_set(
        &lab.turbine(),
        lab.dataset_v_min,
        lab.dataset_v_max,
        lab.dataset_step,
    )?;
    write_atomic(path, |w| Ok(ds.write_csv(w)?))?;
    let saturated = ds.samples().iter().filter(|s| s.saturated).count();
    writeln!(out, "wrote {} rows to {}", ds.len(), path.display())?;
    if saturated > 0 {
        writeln!(
            out,
            "{saturated} row(s) at maximum pitch still exceed rated power"
        )?;
    }
    Ok(())
}

fn read_dataset(path: &Path) -> Result<ReferenceDataset> {
    let ds = ReferenceDataset::read_csv(open(path)?)
        .with_context(|| format!("reading dataset {}", path.display()))?;
    if ds.is_empty() {
        return Err(UsageError(format!("dataset {} has no rows", path.display())).into());
    }
    Ok(ds)
}

/// Network fit to the training split plus the pitch RMSE on both splits.
pub struct TrainReport {
    pub model: NetworkModel,
    pub history: Vec<f64>,
    pub train_rmse: f64,
    pub heldout_rmse: Option<f64>,
}

pub fn train_network(lab: &LabConfig, kind: NetKind, ds: &ReferenceDataset) -> Result<TrainReport> {
    let params = lab.turbine();
    let (train, test) = ds.holdout_split();
    let (train, test) = if test.is_empty() || train.is_empty() {
        (ds.clone(), None)
    } else {
        (train, Some(test))
    };
    let (model, history) = match kind {
        NetKind::Mlp => {
            let o = mlp::train_pitch_controller(&params, &train, &lab.mlp())?;
            (NetworkModel::Mlp(o.net), o.history)
        }
        NetKind::Rbf => {
            let o = rbf::train_pitch_controller(&params, &train, &lab.rbf())?;
            (NetworkModel::Rbf(o.net), o.history)
        }
    };
    let predict = |s: &wecs_core::ReferenceSample| match &model {
        NetworkModel::Mlp(n) => n.predict_pitch(s.v, s.p_pu),
        NetworkModel::Rbf(n) => n.predict_pitch(s.v, s.p_pu, s.omega_pu),
    };
    let train_rmse = train.pitch_rmse(predict);
    let heldout_rmse = test.map(|t| t.pitch_rmse(predict));
    Ok(TrainReport {
        model,
        history,
        train_rmse,
        heldout_rmse,
    })
}

fn write_error_history(path: &Path, history: &[f64]) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "epoch,error")?;
        for (i, e) in history.iter().enumerate() {
            writeln!(w, "{},{e:?}", i + 1)?;
        }
        Ok(())
    })
}

fn save_network(path: &Path, report: &TrainReport) -> Result<PathBuf> {
    write_atomic(path, |w| Ok(save_model(&report.model, w)?))?;
    let hist = sibling(path, ".history.csv");
    write_error_history(&hist, &report.history)?;
    Ok(hist)
}

pub fn cmd_train(
    lab: &LabConfig,
    kind: NetKind,
    dataset: &Path,
    path: &Path,
    out: &mut dyn Write,
) -> Result<()> {
    let ds = read_dataset(dataset)?;
    let report = train_network(lab, kind, &ds)?;
    let hist = save_network(path, &report)?;
    writeln!(
        out,
        "trained {} network for {} epochs; model {} history {}",
        report.model.kind(),
        report.history.len(),
        path.display(),
        hist.display()
    )?;
    match report.heldout_rmse {
        Some(r) => writeln!(
            out,
            "held-out RMSE {r:.4} deg (training RMSE {:.4} deg)",
            report.train_rmse
        )?,
        None => writeln!(
            out,
            "training RMSE {:.4} deg (dataset too small to hold out rows)",
            report.train_rmse
        )?,
    }
    Ok(())
}

pub fn cmd_evolve(lab: &LabConfig, dataset: &Path, path: &Path, out: &mut dyn Write) -> Result<()> {
    let ds = read_dataset(dataset)?;
    let evo = evolve(&lab.ga(), &ds, &lab.turbine())?;
    write_text(path, &evo.rule_base.to_text())?;
    let hist = sibling(path, ".history.csv");
    write_atomic(&hist, |w| Ok(write_history_csv(&evo.history, w)?))?;
    let best = evo.history.last().map_or(f64::NAN, |g| g.best);
    writeln!(
        out,
        "evolved {} rule(s) over {} generation(s), best fitness {best:.4}; rules {} history {}",
        evo.rule_base.len(),
        evo.history.len() - 1,
        path.display(),
        hist.display()
    )?;
    for r in evo.rule_base.rules() {
        writeln!(out, "  {}  {}", r.encode(), r.describe())?;
    }
    if !evo.rule_base.is_monotone() {
        writeln!(out, "note: consequents are not monotone in the antecedent")?;
    }
    Ok(())
}

/// Pitch angle the fixed-pitch baseline holds: the optimal pitch at `v` and
/// rated rotor speed, or minimum pitch at or below rated wind.
pub fn baseline_pitch(params: &TurbineParams, v: f64) -> Result<f64> {
    if v <= params.v_rated {
        return Ok(params.beta_min);
    }
    let v = v.min(params.v_cutout);
    Ok(optimal_pitch(v, params.rated_point().omega_rated, params)?.beta)
}

pub struct SimulateRequest {
    pub controller: ControllerKind,
    pub model: Option<PathBuf>,
    pub wind: Option<PathBuf>,
    pub fixed_pitch: Option<f64>,
    pub wind_args: WindArgs,
}

fn load_controller(
    kind: ControllerKind,
    model: Option<&Path>,
    fixed_pitch: Option<f64>,
    params: &TurbineParams,
    wind_mean: f64,
) -> Result<Controller> {
    let need_model = || -> Result<&Path> {
        model.ok_or_else(|| {
            UsageError(format!("--controller {} needs --model", kind_name(kind))).into()
        })
    };
    Ok(match kind {
        ControllerKind::Mlp | ControllerKind::Rbf => {
            let path = need_model()?;
            let net = load_model(open(path)?)
                .with_context(|| format!("reading model {}", path.display()))?;
            match (kind, net) {
                (ControllerKind::Mlp, NetworkModel::Mlp(n)) => Controller::Mlp(n),
                (ControllerKind::Rbf, NetworkModel::Rbf(n)) => Controller::Rbf(n),
                (_, other) => {
                    return Err(UsageError(format!(
                        "model {} holds an {} network but --controller is {}",
                        path.display(),
                        other.kind(),
                        kind_name(kind)
                    ))
                    .into())
                }
            }
        }
        ControllerKind::Gfs => {
            let path = need_model()?;
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Controller::Gfs(
                RuleBase::from_text(&text)
                    .with_context(|| format!("parsing rule base {}", path.display()))?,
            )
        }
        ControllerKind::FixedPitch => Controller::FixedPitch(match fixed_pitch {
            Some(b) => b,
            None => baseline_pitch(params, wind_mean)?,
        }),
        ControllerKind::None => Controller::None,
    })
}

fn kind_name(kind: ControllerKind) -> &'static str {
    match kind {
        ControllerKind::Mlp => "mlp",
        ControllerKind::Rbf => "rbf",
        ControllerKind::Gfs => "gfs",
        ControllerKind::FixedPitch => "fixed_pitch",
        ControllerKind::None => "none",
    }
}

/// Writes the four panels `<prefix>.{wind,pitch,omega,power}.svg`.
pub fn write_panels(prefix: &Path, trace: &[TraceRecord], label: &str) -> Result<Vec<PathBuf>> {
    let t: Vec<f64> = trace.iter().map(|r| r.t).collect();
    let col = |f: fn(&TraceRecord) -> f64| trace.iter().map(f).collect::<Vec<f64>>();
    let (v, beta, cmd, omega, p) = (
        col(|r| r.v_w),
        col(|r| r.beta),
        col(|r| r.beta_cmd),
        col(|r| r.omega),
        col(|r| r.p_pu),
    );
    let panels = [
        (
            "wind",
            Chart {
                title: "Wind speed",
                x_label: "time (s)",
                y_label: "wind speed (m/s)",
                xs: &t,
                series: vec![Series { label: "v", ys: &v }],
                y_include: None,
            },
        ),
        (
            "pitch",
            Chart {
                title: &format!("Pitch angle ({label})"),
                x_label: "time (s)",
                y_label: "pitch (deg)",
                xs: &t,
                series: vec![
                    Series {
                        label: "actual",
                        ys: &beta,
                    },
                    Series {
                        label: "commanded",
                        ys: &cmd,
                    },
                ],
                y_include: None,
            },
        ),
        (
            "omega",
            Chart {
                title: &format!("Rotor speed ({label})"),
                x_label: "time (s)",
                y_label: "rotor speed (rad/s)",
                xs: &t,
                series: vec![Series {
                    label: "omega",
                    ys: &omega,
                }],
                y_include: None,
            },
        ),
        (
            "power",
            Chart {
                title: &format!("Output power ({label})"),
                x_label: "time (s)",
                y_label: "power (pu)",
                xs: &t,
                series: vec![Series { label: "p", ys: &p }],
                y_include: Some((0.0, 1.1)),
            },
        ),
    ];
    let mut written = Vec::with_capacity(panels.len());
    for (name, chart) in panels {
        let path = with_suffix(prefix, &format!(".{name}.svg"));
        write_text(&path, &chart.render())?;
        written.push(path);
    }
    Ok(written)
}

fn write_metrics(path: &Path, m: &Metrics) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(m)? + "\n"))
}

pub fn cmd_simulate(
    lab: &LabConfig,
    config: Option<&Path>,
    req: &SimulateRequest,
    prefix: &Path,
    out: &mut dyn Write,
) -> Result<()> {
    let mut lab = lab.clone();
    apply_wind_args(&mut lab, &req.wind_args, true);
    let params = lab.turbine();
    let mut manifest = RunManifest::new("simulate", config, vec![lab.seed]);

    let wind = match &req.wind {
        Some(path) => {
            let w = WindSeries::read_csv(open(path)?)
                .with_context(|| format!("reading wind {}", path.display()))?;
            if req.wind_args.duration.is_none() {
                lab.sim_duration = w.duration();
            }
            manifest.add(path);
            w
        }
        None => {
            let w = generate_wind(&lab.wind(), &lab.arma())?;
            let path = with_suffix(prefix, ".wind.csv");
            write_atomic(&path, |out| Ok(w.write_csv(out)?))?;
            manifest.add(path);
            w
        }
    };
    let mean = match &req.wind {
        Some(_) => wind.stats().mean,
        None => lab.wind_v_mean,
    };
    let ctrl = load_controller(
        req.controller,
        req.model.as_deref(),
        req.fixed_pitch,
        &params,
        mean,
    )?;
    if let Some(m) = &req.model {
        manifest.add(m);
    }
    let sim = lab.sim();
    let trace = run(&wind, &params, &ctrl, &sim)?;
    let metrics = compute_metrics(&trace, sim.settle_time)?;

    let trace_path = with_suffix(prefix, ".trace.csv");
    write_atomic(&trace_path, |w| Ok(write_trace_csv(&trace, w)?))?;
    let metrics_path = with_suffix(prefix, ".metrics.json");
    write_metrics(&metrics_path, &metrics)?;
    manifest.add(&trace_path);
    manifest.add(&metrics_path);
    for p in write_panels(prefix, &trace, ctrl.name())? {
        manifest.add(p);
    }
    manifest.save(&with_suffix(prefix, ".manifest.json"))?;

    writeln!(
        out,
        "{}: {} records, trace {}\nmean {:.4} pu  std {:.4} pu  min {:.4} pu  max {:.4} pu  pitch travel {:.1} deg  time below 0.9 pu {:.1}%",
        ctrl.name(),
        trace.len(),
        trace_path.display(),
        metrics.mean_p_pu,
        metrics.std_p_pu,
        metrics.min_p_pu,
        metrics.max_p_pu,
        metrics.pitch_travel_deg,
        100.0 * metrics.frac_time_below_0_9pu
    )?;
    Ok(())
}

/// `NAME=PATH`, or a bare path named after its file (`mlp.trace.csv` -> `mlp`).
pub fn parse_trace_arg(arg: &str) -> (String, PathBuf) {
    if let Some((name, path)) = arg.split_once('=') {
        if !name.is_empty() && !path.is_empty() {
            return (name.to_string(), PathBuf::from(path));
        }
    }
    let path = PathBuf::from(arg);
    let file = path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = file.split('.').next().unwrap_or_default().to_string();
    (name, path)
}

fn print_comparison(report: &Comparison, out: &mut dyn Write) -> Result<()> {
    writeln!(
        out,
        "{:<12} {:>9} {:>9} {:>9} {:>9} {:>12}  (baseline {})",
        "controller", "mean", "std", "min", "max", "std vs base", report.baseline
    )?;
    for r in &report.rows {
        writeln!(
            out,
            "{:<12} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>11.1}%",
            r.controller,
            r.mean_p_pu,
            r.std_p_pu,
            r.min_p_pu,
            r.max_p_pu,
            -100.0 * r.rel_std_reduction
        )?;
    }
    Ok(())
}

pub fn cmd_compare(
    lab: &LabConfig,
    args: &[String],
    path: &Path,
    out: &mut dyn Write,
) -> Result<()> {
    let mut traces = Vec::with_capacity(args.len());
    for arg in args {
        let (name, p) = parse_trace_arg(arg);
        let trace =
            read_trace_csv(open(&p)?).with_context(|| format!("reading trace {}", p.display()))?;
        traces.push((name, trace));
    }
    let report = compare(&traces, lab.sim_settle_time)?;
    write_atomic(path, |w| Ok(report.write_csv(w)?))?;
    print_comparison(&report, out)?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Per-seed artifacts of `repro`.
struct SeedRun {
    seed: u64,
    files: Vec<PathBuf>,
    report: Comparison,
}

fn repro_seed(
    lab: &LabConfig,
    seed: u64,
    controllers: &[Controller],
    dir: &Path,
    with_plots: bool,
) -> Result<SeedRun> {
    let params = lab.turbine();
    let sim = lab.sim();
    let seed_dir = dir.join(format!("seed{seed}"));
    let mut files = Vec::new();
    let wind_cfg = wecs_core::WindConfig { seed, ..lab.wind() };
    let wind = generate_wind(&wind_cfg, &lab.arma())?;
    let wind_path = seed_dir.join("wind.csv");
    write_atomic(&wind_path, |w| Ok(wind.write_csv(w)?))?;
    files.push(wind_path);

    let mut traces = Vec::with_capacity(controllers.len());
    for ctrl in controllers {
        let trace = run(&wind, &params, ctrl, &sim)?;
        let prefix = seed_dir.join(ctrl.name());
        let path = with_suffix(&prefix, ".trace.csv");
        write_atomic(&path, |w| Ok(write_trace_csv(&trace, w)?))?;
        files.push(path);
        let metrics_path = with_suffix(&prefix, ".metrics.json");
        write_metrics(&metrics_path, &compute_metrics(&trace, sim.settle_time)?)?;
        files.push(metrics_path);
        if with_plots {
            files.extend(write_panels(&prefix, &trace, ctrl.name())?);
        }
        traces.push((ctrl.name().to_string(), trace));
    }
    let report = compare(&traces, sim.settle_time)?;
    let cmp_path = seed_dir.join("comparison.csv");
    write_atomic(&cmp_path, |w| Ok(report.write_csv(w)?))?;
    files.push(cmp_path);
    Ok(SeedRun {
        seed,
        files,
        report,
    })
}

pub fn cmd_repro(
    lab: &LabConfig,
    config: Option<&Path>,
    args: &WindArgs,
    dir: &Path,
    out: &mut dyn Write,
) -> Result<()> {
    let mut lab = lab.clone();
    apply_wind_args(&mut lab, args, true);
    if lab.repro_seeds == 0 {
        return Err(UsageError("repro needs at least one seed".into()).into());
    }
    let params = lab.turbine();
    params.validate()?;
    lab.sim().validate()?;
    lab.ga().validate()?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let seeds: Vec<u64> = (0..lab.repro_seeds as u64)
        .map(|k| lab.seed.wrapping_add(k))
        .collect();
    let mut manifest = RunManifest::new("repro", config, seeds.clone());

    let ds = build_training_set(
        &params,
        lab.dataset_v_min,
        lab.dataset_v_max,
        lab.dataset_step,
    )?;
    let ds_path = dir.join("dataset.csv");
    write_atomic(&ds_path, |w| Ok(ds.write_csv(w)?))?;
    manifest.add(&ds_path);

    let (mlp_report, rbf_report, evo) = thread::scope(|s| {
        let m = s.spawn(|| train_network(&lab, NetKind::Mlp, &ds));
        let r = s.spawn(|| train_network(&lab, NetKind::Rbf, &ds));
        let g = s.spawn(|| evolve(&lab.ga(), &ds, &params).map_err(anyhow::Error::from));
        let panicked = |_| anyhow!("worker panicked");
        Ok::<_, anyhow::Error>((
            m.join().map_err(panicked)??,
            r.join().map_err(panicked)??,
            g.join().map_err(panicked)??,
        ))
    })?;

    for (name, report) in [("mlp", &mlp_report), ("rbf", &rbf_report)] {
        let path = dir.join(format!("{name}.json"));
        manifest.add(save_network(&path, report)?);
        manifest.add(path);
    }
    let rules_path = dir.join("gfs.rules");
    write_text(&rules_path, &evo.rule_base.to_text())?;
    let gfs_hist = dir.join("gfs.history.csv");
    write_atomic(&gfs_hist, |w| Ok(write_history_csv(&evo.history, w)?))?;
    manifest.add(&rules_path);
    manifest.add(&gfs_hist);

    let as_controller = |m: &NetworkModel| match m {
        NetworkModel::Mlp(n) => Controller::Mlp(n.clone()),
        NetworkModel::Rbf(n) => Controller::Rbf(n.clone()),
    };
    let controllers = vec![
        as_controller(&mlp_report.model),
        as_controller(&rbf_report.model),
        Controller::Gfs(evo.rule_base.clone()),
        Controller::FixedPitch(baseline_pitch(&params, lab.wind_v_mean)?),
    ];

    let runs: Vec<SeedRun> = thread::scope(|s| {
        let handles: Vec<_> = seeds
            .iter()
            .enumerate()
            .map(|(k, &seed)| {
                let (lab, controllers) = (&lab, &controllers);
                s.spawn(move || repro_seed(lab, seed, controllers, dir, k == 0))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().map_err(|_| anyhow!("worker panicked"))?)
            .collect::<Result<Vec<_>>>()
    })?;

    let names: Vec<&str> = controllers.iter().map(Controller::name).collect();
    let summary_path = dir.join("summary.csv");
    let mut summary = Vec::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        let pick = |f: fn(&wecs_core::simloop::ComparisonRow) -> f64| {
            let mut xs: Vec<f64> = runs.iter().map(|r| f(&r.report.rows[i])).collect();
            median(&mut xs)
        };
        summary.push((
            *name,
            pick(|r| r.mean_p_pu),
            pick(|r| r.std_p_pu),
            pick(|r| r.min_p_pu),
            pick(|r| r.frac_time_below_0_9pu),
        ));
    }
    let base_std = summary
        .iter()
        .find(|s| s.0 == "fixed_pitch")
        .map_or(f64::NAN, |s| s.2);
    write_atomic(&summary_path, |w| {
        writeln!(
            w,
            "controller,median_mean_p_pu,median_std_p_pu,median_min_p_pu,median_frac_time_below_0_9pu,std_ratio_vs_fixed_pitch"
        )?;
        for (name, mean, std, min, below) in &summary {
            writeln!(
                w,
                "{name},{mean:?},{std:?},{min:?},{below:?},{:?}",
                std / base_std
            )?;
        }
        Ok(())
    })?;

    for run in &runs {
        for f in &run.files {
            manifest.add(f);
        }
    }
    manifest.add(&summary_path);
    manifest.save(&dir.join("manifest.json"))?;

    let rmse = |r: &TrainReport| r.heldout_rmse.unwrap_or(r.train_rmse);
    writeln!(
        out,
        "dataset {} rows; mlp held-out RMSE {:.4} deg; rbf held-out RMSE {:.4} deg; gfs rules {}",
        ds.len(),
        rmse(&mlp_report),
        rmse(&rbf_report),
        evo.rule_base
            .rules()
            .iter()
            .map(|r| r.encode())
            .collect::<Vec<_>>()
            .join(" ")
    )?;
    writeln!(
        out,
        "{} seed(s) from {} at v_mean {} m/s, TI {}; medians:",
        runs.len(),
        runs[0].seed,
        lab.wind_v_mean,
        lab.wind_turbulence_intensity
    )?;
    writeln!(
        out,
        "{:<12} {:>9} {:>9} {:>9} {:>12}",
        "controller", "mean", "std", "min", "std/fixed"
    )?;
    for (name, mean, std, min, _) in &summary {
        writeln!(
            out,
            "{name:<12} {mean:>9.4} {std:>9.4} {min:>9.4} {:>12.3}",
            std / base_std
        )?;
    }
    writeln!(out, "artifacts in {}", dir.display())?;
    Ok(())
}
