//! Aerodynamic and mechanical plant of a 2 MW pitch-regulated rotor.
//!
//! Angles are degrees throughout. The power coefficient surface is the
//! empirical `Cp(lambda, beta)` model with exponential `lambda_i` decay.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config;
use crate::error::{invalid, Error, Result};

/// Betz limit, 16/27.
pub const BETZ_LIMIT: f64 = 16.0 / 27.0;

/// Which reading of the `lambda_i` expression to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaIForm {
    /// `1/lambda_i = 1/(lambda + 0.08 beta) - 0.035/(beta^3 + 1)`
    #[default]
    Corrected,
    /// `lambda_i = 1/(lambda + 0.8 beta) - 0.035/(beta^3 + 1)`, exactly as printed.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TurbineParams {
    /// Air density, kg/m^3.
    pub rho: f64,
    /// Blade radius, m.
    pub radius: f64,
    /// Rated power, W.
    pub p_rated: f64,
    pub v_rated: f64,
    pub v_cutin: f64,
    pub v_cutout: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    /// Pitch rate limit, deg/s.
    pub beta_rate_max: f64,
    /// Rotor inertia, kg m^2.
    pub inertia: f64,
    pub lambda_i_form: LambdaIForm,
    /// Lowest pitch fed to the Cp surface. The empirical surface is singular at
    /// beta = -1 deg and meaningless below zero, so commanded pitch below this
    /// floor is aerodynamically equivalent to the floor.
    pub cp_pitch_floor: f64,
}

impl Default for TurbineParams {
    fn default() -> Self {
        Self {
            rho: 1.225,
            radius: 37.5,
            p_rated: 2.0e6,
            v_rated: 12.0,
            v_cutin: 4.0,
            v_cutout: 25.0,
            beta_min: -2.0,
            beta_max: 30.0,
            beta_rate_max: 8.0,
            inertia: 6.0e6,
            lambda_i_form: LambdaIForm::Corrected,
            cp_pitch_floor: 0.0,
        }
    }
}

impl TurbineParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho", self.rho),
            ("radius", self.radius),
            ("p_rated", self.p_rated),
            ("beta_rate_max", self.beta_rate_max),
            ("inertia", self.inertia),
        ];
        for (name, x) in positive {
            if !(x > 0.0 && x.is_finite()) {
                return Err(invalid(name, "must be positive and finite"));
            }
        }
        if !(self.v_cutin < self.v_rated && self.v_rated < self.v_cutout) {
            return Err(invalid("v_rated", "need v_cutin < v_rated < v_cutout"));
        }
        if !(self.beta_min < self.beta_max) {
            return Err(invalid("beta_min", "need beta_min < beta_max"));
        }
        if !self.cp_pitch_floor.is_finite() {
            return Err(invalid("cp_pitch_floor", "must be finite"));
        }
        Ok(())
    }

    pub fn from_config_str(text: &str) -> Result<Self> {
        let p: Self = config::from_flat_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let p: Self = config::load_flat(path)?;
        p.validate()?;
        Ok(p)
    }

    pub fn swept_area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }

    /// Power in the wind crossing the rotor disc, `1/2 rho pi R^2 v^3`.
    pub fn wind_power(&self, v: f64) -> f64 {
        0.5 * self.rho * self.swept_area() * v.powi(3)
    }

    pub fn effective_pitch(&self, beta: f64) -> f64 {
        beta.max(self.cp_pitch_floor)
    }

    /// Cp as seen by the plant (pitch floor applied).
    pub fn cp(&self, lambda: f64, beta: f64) -> f64 {
        power_coefficient(lambda, self.effective_pitch(beta), self.lambda_i_form)
    }

    pub fn clamp_pitch(&self, beta: f64) -> f64 {
        beta.clamp(self.beta_min, self.beta_max)
    }

    /// Optimal-tracking constants at minimum pitch.
    pub fn rated_point(&self) -> RatedPoint {
        let opt = find_cp_max(self.effective_pitch(self.beta_min), self.lambda_i_form);
        let omega_rated = opt.lambda_star * self.v_rated / self.radius;
        RatedPoint {
            cp_max: opt.cp_max,
            lambda_star: opt.lambda_star,
            omega_rated,
            k_gain: torque_gain(self, opt.cp_max, opt.lambda_star),
            torque_rated: self.p_rated / omega_rated,
        }
    }
}

/// Quantities derived once from the Cp surface and used as per-unit bases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatedPoint {
    pub cp_max: f64,
    pub lambda_star: f64,
    /// `lambda* v_rated / R`, rad/s.
    pub omega_rated: f64,
    /// Gain of the `K omega^2` torque law.
    pub k_gain: f64,
    /// `p_rated / omega_rated`, N m.
    pub torque_rated: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotorState {
    /// Rotor speed, rad/s.
    pub omega: f64,
    /// Actual blade pitch, deg.
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeroOutput {
    pub cp: f64,
    pub lambda: f64,
    /// W
    pub power: f64,
    /// `power / omega`, N m. Zero when the rotor is stopped.
    pub torque: f64,
    /// `lambda_i` was singular and Cp was forced to zero.
    pub singular: bool,
    /// Rotor at rest with positive power; torque reported as zero.
    pub stalled: bool,
}

pub fn tip_speed_ratio(omega: f64, v: f64, radius: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::Domain(format!(
            "tip-speed ratio needs positive wind speed, got {v}"
        )));
    }
    Ok(omega * radius / v)
}

pub fn lambda_i(lambda: f64, beta: f64, form: LambdaIForm) -> Result<f64> {
    let cube = beta.powi(3) + 1.0;
    if cube == 0.0 {
        return Err(Error::Singular(format!("beta^3 + 1 = 0 at beta = {beta}")));
    }
    match form {
        LambdaIForm::Corrected => {
            let base = lambda + 0.08 * beta;
            if base == 0.0 {
                return Err(Error::Singular("lambda + 0.08 beta = 0".into()));
            }
            let inv = 1.0 / base - 0.035 / cube;
            if !(inv > 0.0) || !inv.is_finite() {
                return Err(Error::Singular(format!(
                    "1/lambda_i = {inv} at lambda = {lambda}, beta = {beta}"
                )));
            }
            Ok(1.0 / inv)
        }
        LambdaIForm::Literal => {
            let base = lambda + 0.8 * beta;
            if base == 0.0 {
                return Err(Error::Singular("lambda + 0.8 beta = 0".into()));
            }
            let li = 1.0 / base - 0.035 / cube;
            if !(li > 0.0) || !li.is_finite() {
                return Err(Error::Singular(format!(
                    "lambda_i = {li} at lambda = {lambda}, beta = {beta}"
                )));
            }
            Ok(li)
        }
    }
}

/// Cp and whether `lambda_i` was singular.
fn cp_with_flag(lambda: f64, beta: f64, form: LambdaIForm) -> (f64, bool) {
    match lambda_i(lambda, beta, form) {
        Ok(li) => {
            let raw =
                0.5176 * (116.0 / li - 0.4 * beta - 5.0) * (-21.0 / li).exp() + 0.0068 * lambda;
            (raw.max(0.0), false)
        }
        Err(_) => (0.0, true),
    }
}

/// Power coefficient, clamped below at zero. Singular `lambda_i` gives zero.
pub fn power_coefficient(lambda: f64, beta: f64, form: LambdaIForm) -> f64 {
    cp_with_flag(lambda, beta, form).0
}

/// Aerodynamic power and torque at wind speed `v`, rotor speed `omega` and
/// actual pitch `beta`. Cut-in/cut-out gating is the caller's job.
pub fn aerodynamic_power(
    v: f64,
    omega: f64,
    beta: f64,
    params: &TurbineParams,
) -> Result<AeroOutput> {
    let lambda = tip_speed_ratio(omega, v, params.radius)?;
    let (cp, singular) = cp_with_flag(lambda, params.effective_pitch(beta), params.lambda_i_form);
    let power = params.wind_power(v) * cp;
    let stalled = omega <= 0.0 && power > 0.0;
    let torque = if omega > 0.0 { power / omega } else { 0.0 };
    Ok(AeroOutput {
        cp,
        lambda,
        power,
        torque,
        singular,
        stalled,
    })
}

/// `K omega^2`.
pub fn control_torque(omega: f64, k_gain: f64) -> f64 {
    k_gain * omega * omega
}

/// `K = 1/2 rho A R^3 Cp_max / lambda*^3` with `A = pi R^2`.
pub fn torque_gain(params: &TurbineParams, cp_max: f64, lambda_star: f64) -> f64 {
    0.5 * params.rho * params.swept_area() * params.radius.powi(3) * cp_max / lambda_star.powi(3)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpMax {
    pub cp_max: f64,
    pub lambda_star: f64,
}

const LAMBDA_GRID_LO: f64 = 0.1;
const LAMBDA_GRID_HI: f64 = 15.0;
const LAMBDA_GRID_STEP: f64 = 0.01;

/// Maximises Cp over lambda at fixed pitch: coarse grid then golden-section
/// refinement inside the neighbouring grid cells.
pub fn find_cp_max(beta: f64, form: LambdaIForm) -> CpMax {
    let cp = |l: f64| power_coefficient(l, beta, form);
    let n = ((LAMBDA_GRID_HI - LAMBDA_GRID_LO) / LAMBDA_GRID_STEP).round() as usize;
    let (mut best_i, mut best_cp) = (0, f64::NEG_INFINITY);
    for i in 0..=n {
        let c = cp(LAMBDA_GRID_LO + i as f64 * LAMBDA_GRID_STEP);
        if c > best_cp {
            best_i = i;
            best_cp = c;
        }
    }
    let grid_best = LAMBDA_GRID_LO + best_i as f64 * LAMBDA_GRID_STEP;
    if best_cp <= 0.0 {
        return CpMax {
            cp_max: 0.0,
            lambda_star: grid_best,
        };
    }

    let mut a = (grid_best - LAMBDA_GRID_STEP).max(LAMBDA_GRID_LO);
    let mut b = (grid_best + LAMBDA_GRID_STEP).min(LAMBDA_GRID_HI);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (cp(x1), cp(x2));
    while b - a >= 1e-6 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = cp(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = cp(x1);
        }
    }
    let mid = 0.5 * (a + b);
    let (lambda_star, cp_max) = [(mid, cp(mid)), (grid_best, best_cp)].into_iter().fold(
        (mid, f64::NEG_INFINITY),
        |acc, (l, c)| if c > acc.1 { (l, c) } else { acc },
    );
    CpMax {
        cp_max,
        lambda_star,
    }
}

/// Rigid single-mass drivetrain, explicit Euler: `J domega/dt = aero - control`.
pub fn step_rotor(
    state: RotorState,
    gamma_aero: f64,
    gamma_c: f64,
    params: &TurbineParams,
    dt: f64,
) -> RotorState {
    let omega = (state.omega + dt * (gamma_aero - gamma_c) / params.inertia).max(0.0);
    RotorState { omega, ..state }
}

/// Rate-limited, saturating pitch actuator.
pub fn pitch_actuator_step(
    beta_actual: f64,
    beta_cmd: f64,
    params: &TurbineParams,
    dt: f64,
) -> f64 {
    let max_move = params.beta_rate_max * dt;
    let moved = beta_actual + (beta_cmd - beta_actual).clamp(-max_move, max_move);
    params.clamp_pitch(moved)
}
