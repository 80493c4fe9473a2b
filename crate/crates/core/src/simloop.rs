//! Closed-loop simulation: wind, controller, pitch actuator, rotor, metrics.
//!
//! Each step measures the plant, asks the controller for a pitch, records,
//! then advances the actuator and the rotor by one explicit Euler step.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gfs::{infer_pitch, RuleBase};
use crate::mlp::MlpNetwork;
use crate::rbf::RbfNetwork;
use crate::refgen::equilibrium_omega;
use crate::turbine::{
    aerodynamic_power, control_torque, pitch_actuator_step, step_rotor, RotorState, TurbineParams,
};
use crate::wind::WindSeries;

/// Plant quantities a controller may look at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// Instantaneous wind speed, m/s.
    pub v: f64,
    /// Measured aerodynamic power, per unit.
    pub p_pu: f64,
    /// Rotor speed, per unit of rated speed.
    pub omega_pu: f64,
}

/// Per-unit power and speed reach the controllers saturated at this value,
/// the top of the range the reference schedule spans.
pub const OBSERVATION_CEILING: f64 = 1.0;

// One controller per simulation; boxing the rule base buys nothing.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum Controller {
    Mlp(MlpNetwork),
    Rbf(RbfNetwork),
    Gfs(RuleBase),
    /// Constant pitch command everywhere inside the operating envelope.
    FixedPitch(f64),
    /// No pitch regulation: minimum pitch everywhere inside the envelope.
    None,
}

impl Controller {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Mlp(_) => "mlp",
            Self::Rbf(_) => "rbf",
            Self::Gfs(_) => "gfs",
            Self::FixedPitch(_) => "fixed_pitch",
            Self::None => "none",
        }
    }

    /// Rejects networks whose input layout does not match the observation.
    pub fn validate(&self) -> Result<()> {
        let dim = |expected: usize, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(Error::Dimension { expected, got })
            }
        };
        match self {
            Self::Mlp(net) => {
                net.validate()?;
                dim(2, net.input_dim())?;
                dim(1, net.output_dim())
            }
            Self::Rbf(net) => {
                net.validate()?;
                dim(3, net.input_dim())?;
                dim(1, net.out_weights().len())
            }
            Self::FixedPitch(b) if !b.is_finite() => {
                Err(invalid("fixed_pitch_deg", "must be finite"))
            }
            _ => Ok(()),
        }
    }

    /// Pitch command above rated wind.
    pub fn command(&self, obs: &Observation, params: &TurbineParams) -> f64 {
        let raw = match self {
            Self::Mlp(net) => net.predict_pitch(obs.v, obs.p_pu),
            Self::Rbf(net) => net.predict_pitch(obs.v, obs.p_pu, obs.omega_pu),
            Self::Gfs(rb) => infer_pitch(rb, obs.v),
            Self::FixedPitch(b) => *b,
            Self::None => params.beta_min,
        };
        params.clamp_pitch(raw)
    }

    /// Whether the controller also sets pitch below rated wind.
    fn overrides_below_rated(&self) -> bool {
        matches!(self, Self::FixedPitch(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TorqueMode {
    /// `K omega^2`, capped at rated torque above rated wind.
    #[default]
    KOmegaSqCapped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    pub torque_mode: TorqueMode,
    pub record_every: usize,
    /// Full width of the switching band centred on rated wind speed, m/s.
    pub hysteresis_band: f64,
    /// Samples before this time are excluded from metrics, s.
    pub settle_time: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            duration: 600.0,
            torque_mode: TorqueMode::KOmegaSqCapped,
            record_every: 1,
            hysteresis_band: 0.2,
            settle_time: 30.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", "must be positive"));
        }
        if !(self.duration >= self.dt) {
            return Err(invalid("duration", "must be at least dt"));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every", "must be at least 1"));
        }
        if !(self.hysteresis_band >= 0.0) {
            return Err(invalid("hysteresis_band", "must be non-negative"));
        }
        if !(self.settle_time >= 0.0 && self.settle_time < self.duration) {
            return Err(invalid("settle_time", "must lie in [0, duration)"));
        }
        Ok(())
    }

    pub fn step_count(&self) -> usize {
        (self.duration / self.dt + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub v_w: f64,
    pub beta_cmd: f64,
    pub beta: f64,
    pub omega: f64,
    pub lambda: f64,
    pub cp: f64,
    pub p_pu: f64,
    pub torque_pu: f64,
}

pub const TRACE_HEADER: [&str; 9] = [
    "t",
    "v_w",
    "beta_cmd",
    "beta",
    "omega",
    "lambda",
    "cp",
    "p_pu",
    "torque_pu",
];

/// Simulates `cfg.duration` seconds. Records are taken at t = 0 and every
/// `record_every` steps after that.
pub fn run(
    wind: &WindSeries,
    params: &TurbineParams,
    ctrl: &Controller,
    cfg: &SimConfig,
) -> Result<Vec<TraceRecord>> {
    params.validate()?;
    cfg.validate()?;
    ctrl.validate()?;
    if wind.duration() + 1e-9 < cfg.duration {
        return Err(invalid(
            "duration",
            format!(
                "wind covers {} s but {} s were requested",
                wind.duration(),
                cfg.duration
            ),
        ));
    }
    let rated = params.rated_point();
    let half_band = 0.5 * cfg.hysteresis_band;
    let in_envelope = |v: f64| v >= params.v_cutin && v <= params.v_cutout;

    let v0 = wind.at(0.0);
    let mut state = RotorState {
        omega: equilibrium_omega(v0, params),
        beta: params.beta_min,
    };
    let mut above = v0 > params.v_rated;
    let steps = cfg.step_count();
    let mut trace = Vec::with_capacity(steps / cfg.record_every + 1);

    for i in 0..=steps {
        let t = i as f64 * cfg.dt;
        let v = wind.at(t);
        if above && v < params.v_rated - half_band {
            above = false;
        } else if !above && v > params.v_rated + half_band {
            above = true;
        }

        let (beta_cmd, gamma_c, aero_torque, lambda, cp, power) = if in_envelope(v) {
            let aero = aerodynamic_power(v, state.omega, state.beta, params)?;
            let obs = Observation {
                v,
                p_pu: (aero.power / params.p_rated).min(OBSERVATION_CEILING),
                omega_pu: (state.omega / rated.omega_rated).min(OBSERVATION_CEILING),
            };
            let k_torque = control_torque(state.omega, rated.k_gain);
            let (beta_cmd, gamma_c) = if above {
                (ctrl.command(&obs, params), k_torque.min(rated.torque_rated))
            } else if ctrl.overrides_below_rated() {
                (ctrl.command(&obs, params), k_torque)
            } else {
                (params.beta_min, k_torque)
            };
            (
                beta_cmd,
                gamma_c,
                aero.torque,
                aero.lambda,
                aero.cp,
                aero.power,
            )
        } else {
            let lambda = if v > 0.0 {
                state.omega * params.radius / v
            } else {
                0.0
            };
            (
                params.beta_max,
                control_torque(state.omega, rated.k_gain),
                0.0,
                lambda,
                0.0,
                0.0,
            )
        };

        if i % cfg.record_every == 0 {
            trace.push(TraceRecord {
                t,
                v_w: v,
                beta_cmd,
                beta: state.beta,
                omega: state.omega,
                lambda,
                cp,
                p_pu: power / params.p_rated,
                torque_pu: gamma_c / rated.torque_rated,
            });
        }
        if i < steps {
            let beta = pitch_actuator_step(state.beta, beta_cmd, params, cfg.dt);
            state = step_rotor(state, aero_torque, gamma_c, params, cfg.dt);
            state.beta = beta;
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mean_p_pu: f64,
    pub std_p_pu: f64,
    pub min_p_pu: f64,
    pub max_p_pu: f64,
    pub pitch_travel_deg: f64,
    pub frac_time_below_0_9pu: f64,
    pub max_abs_pitch_rate: f64,
}

/// Single-pass accumulator over consecutive trace records. Two accumulators
/// over adjacent pieces of a trace merge into the accumulator of the whole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsAccumulator {
    n: usize,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
    below: usize,
    travel: f64,
    max_rate: f64,
    first: Option<(f64, f64)>,
    last: Option<(f64, f64)>,
}

impl Default for MetricsAccumulator {
    fn default() -> Self {
        Self {
            n: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            below: 0,
            travel: 0.0,
            max_rate: 0.0,
            first: None,
            last: None,
        }
    }
}

impl MetricsAccumulator {
    pub fn push(&mut self, r: &TraceRecord) {
        self.n += 1;
        let d = r.p_pu - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (r.p_pu - self.mean);
        self.min = self.min.min(r.p_pu);
        self.max = self.max.max(r.p_pu);
        if r.p_pu < 0.9 {
            self.below += 1;
        }
        if let Some(prev) = self.last {
            self.add_pitch_step(prev, (r.t, r.beta));
        } else {
            self.first = Some((r.t, r.beta));
        }
        self.last = Some((r.t, r.beta));
    }

    fn add_pitch_step(&mut self, (t0, b0): (f64, f64), (t1, b1): (f64, f64)) {
        let db = (b1 - b0).abs();
        self.travel += db;
        if t1 > t0 {
            self.max_rate = self.max_rate.max(db / (t1 - t0));
        }
    }

    /// Appends `later`, which must cover the records right after `self`.
    pub fn merge(&mut self, later: &Self) {
        if later.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *later;
            return;
        }
        let (na, nb) = (self.n as f64, later.n as f64);
        let n = na + nb;
        let delta = later.mean - self.mean;
        self.mean += delta * nb / n;
        self.m2 += later.m2 + delta * delta * na * nb / n;
        self.n += later.n;
        self.min = self.min.min(later.min);
        self.max = self.max.max(later.max);
        self.below += later.below;
        if let (Some(a), Some(b)) = (self.last, later.first) {
            self.add_pitch_step(a, b);
        }
        self.travel += later.travel;
        self.max_rate = self.max_rate.max(later.max_rate);
        self.last = later.last;
    }

    pub fn finish(&self) -> Result<Metrics> {
        if self.n == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(Metrics {
            mean_p_pu: self.mean,
            std_p_pu: (self.m2 / self.n as f64).max(0.0).sqrt(),
            min_p_pu: self.min,
            max_p_pu: self.max,
            pitch_travel_deg: self.travel,
            frac_time_below_0_9pu: self.below as f64 / self.n as f64,
            max_abs_pitch_rate: self.max_rate,
        })
    }
}

/// Metrics over records with `t >= settle_time`.
pub fn compute_metrics(trace: &[TraceRecord], settle_time: f64) -> Result<Metrics> {
    let mut acc = MetricsAccumulator::default();
    trace
        .iter()
        .filter(|r| r.t >= settle_time)
        .for_each(|r| acc.push(r));
    acc.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub controller: String,
    pub mean_p_pu: f64,
    pub std_p_pu: f64,
    pub min_p_pu: f64,
    pub max_p_pu: f64,
    pub pitch_travel_deg: f64,
    pub frac_time_below_0_9pu: f64,
    pub max_abs_pitch_rate: f64,
    /// `1 - std / std_baseline`; positive means steadier than the baseline.
    pub rel_std_reduction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: String,
    pub rows: Vec<ComparisonRow>,
}

/// Metrics side by side. The baseline is the trace named `fixed_pitch` if
/// present, otherwise the first one. All traces must share their wind input.
pub fn compare(traces: &[(String, Vec<TraceRecord>)], settle_time: f64) -> Result<Comparison> {
    if traces.len() < 2 {
        return Err(invalid("traces", "need at least two traces"));
    }
    let (ref_name, ref_trace) = &traces[0];
    for (name, trace) in &traces[1..] {
        let same = trace.len() == ref_trace.len()
            && trace
                .iter()
                .zip(ref_trace)
                .all(|(a, b)| a.t == b.t && a.v_w == b.v_w);
        if !same {
            return Err(Error::WindMismatch {
                reference: ref_name.clone(),
                other: name.clone(),
            });
        }
    }
    let metrics = traces
        .iter()
        .map(|(_, t)| compute_metrics(t, settle_time))
        .collect::<Result<Vec<_>>>()?;
    let base_idx = traces
        .iter()
        .position(|(n, _)| n == "fixed_pitch")
        .unwrap_or(0);
    let base_std = metrics[base_idx].std_p_pu;
    let rows = traces
        .iter()
        .zip(&metrics)
        .map(|((name, _), m)| ComparisonRow {
            controller: name.clone(),
            mean_p_pu: m.mean_p_pu,
            std_p_pu: m.std_p_pu,
            min_p_pu: m.min_p_pu,
            max_p_pu: m.max_p_pu,
            pitch_travel_deg: m.pitch_travel_deg,
            frac_time_below_0_9pu: m.frac_time_below_0_9pu,
            max_abs_pitch_rate: m.max_abs_pitch_rate,
            rel_std_reduction: if base_std > 0.0 {
                1.0 - m.std_p_pu / base_std
            } else {
                0.0
            },
        })
        .collect();
    Ok(Comparison {
        baseline: traces[base_idx].0.clone(),
        rows,
    })
}

impl Comparison {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if trace.is_empty() {
        w.write_record(TRACE_HEADER)?;
    }
    for r in trace {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let headers: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if headers != TRACE_HEADER {
        return Err(Error::Parse(format!(
            "trace header must be `{}`, got `{}`",
            TRACE_HEADER.join(","),
            headers.join(",")
        )));
    }
    Ok(r.deserialize()
        .collect::<std::result::Result<Vec<TraceRecord>, _>>()?)
}
