//! The flat laboratory configuration shared by every command.
//!
//! Turbine keys keep their plain names; the other groups carry a prefix
//! (`wind_`, `sim_`, `mlp_`, `rbf_`, `ga_`, `dataset_`, `repro_`).

use std::path::Path;

use serde::{Deserialize, Serialize};
use wecs_core::config::{from_flat_str, to_flat_string};
use wecs_core::gfs::FitnessMode;
use wecs_core::simloop::TorqueMode;
use wecs_core::{
    ArmaParams, CenterStrategy, GaConfig, LambdaIForm, MlpTrainConfig, RbfTrainConfig, SimConfig,
    TurbineParams, WindConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabConfig {
    /// Seed for wind, network initialization and evolution.
    pub seed: u64,

    pub rho: f64,
    pub radius: f64,
    pub p_rated: f64,
    pub v_rated: f64,
    pub v_cutin: f64,
    pub v_cutout: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_rate_max: f64,
    pub inertia: f64,
    pub lambda_i_form: LambdaIForm,
    pub cp_pitch_floor: f64,

    pub wind_v_mean: f64,
    pub wind_turbulence_intensity: f64,
    pub wind_dt: f64,
    pub wind_duration: f64,
    pub wind_ar_coeffs: Vec<f64>,
    pub wind_ma_coeffs: Vec<f64>,
    pub wind_noise_std: f64,

    pub sim_dt: f64,
    pub sim_duration: f64,
    pub sim_record_every: usize,
    pub sim_hysteresis_band: f64,
    pub sim_settle_time: f64,
    pub sim_torque_mode: TorqueMode,

    pub dataset_v_min: f64,
    pub dataset_v_max: f64,
    pub dataset_step: f64,

    pub mlp_learning_rate: f64,
    pub mlp_max_epochs: usize,
    pub mlp_target_error: f64,
    pub mlp_init_scale: f64,
    pub mlp_hidden_units: usize,

    pub rbf_learning_rate: f64,
    pub rbf_max_epochs: usize,
    pub rbf_target_error: f64,
    pub rbf_hidden_units: usize,
    pub rbf_center_strategy: CenterStrategy,

    pub ga_population_size: usize,
    pub ga_iterations: usize,
    pub ga_p_crossover: f64,
    pub ga_p_mutation: f64,
    pub ga_replacement_count: usize,
    pub ga_fitness_w_coverage: f64,
    pub ga_fitness_w_regulation: f64,
    pub ga_max_rules: usize,
    pub ga_fitness_mode: FitnessMode,

    /// Number of turbulent wind seeds `repro` simulates.
    pub repro_seeds: usize,
}

impl Default for LabConfig {
    fn default() -> Self {
        let t = TurbineParams::default();
        let w = WindConfig::default();
        let a = ArmaParams::default();
        let s = SimConfig::default();
        let m = MlpTrainConfig::default();
        let r = RbfTrainConfig::default();
        let g = GaConfig::default();
        Self {
            seed: 1,
            rho: t.rho,
            radius: t.radius,
            p_rated: t.p_rated,
            v_rated: t.v_rated,
            v_cutin: t.v_cutin,
            v_cutout: t.v_cutout,
            beta_min: t.beta_min,
            beta_max: t.beta_max,
            beta_rate_max: t.beta_rate_max,
            inertia: t.inertia,
            lambda_i_form: t.lambda_i_form,
            cp_pitch_floor: t.cp_pitch_floor,
            wind_v_mean: w.v_mean,
            wind_turbulence_intensity: w.turbulence_intensity,
            wind_dt: w.dt,
            wind_duration: w.duration,
            wind_ar_coeffs: a.ar_coeffs,
            wind_ma_coeffs: a.ma_coeffs,
            wind_noise_std: a.noise_std,
            sim_dt: s.dt,
            sim_duration: s.duration,
            sim_record_every: s.record_every,
            sim_hysteresis_band: s.hysteresis_band,
            sim_settle_time: s.settle_time,
            sim_torque_mode: s.torque_mode,
            dataset_v_min: t.v_cutin,
            dataset_v_max: t.v_cutout,
            dataset_step: 0.5,
            mlp_learning_rate: m.learning_rate,
            mlp_max_epochs: m.max_epochs,
            mlp_target_error: m.target_error,
            mlp_init_scale: m.init_scale,
            mlp_hidden_units: m.hidden_units,
            rbf_learning_rate: r.learning_rate,
            rbf_max_epochs: r.max_epochs,
            rbf_target_error: r.target_error,
            rbf_hidden_units: r.hidden_units,
            rbf_center_strategy: r.center_strategy,
            ga_population_size: g.population_size,
            ga_iterations: g.iterations,
            ga_p_crossover: g.p_crossover,
            ga_p_mutation: g.p_mutation,
            ga_replacement_count: g.replacement_count,
            ga_fitness_w_coverage: g.fitness_w_coverage,
            ga_fitness_w_regulation: g.fitness_w_regulation,
            ga_max_rules: g.max_rules,
            ga_fitness_mode: g.fitness_mode,
            repro_seeds: 10,
        }
    }
}

impl LabConfig {
    pub fn from_text(text: &str) -> wecs_core::Result<Self> {
        from_flat_str(text)
    }

    pub fn load(path: &Path) -> wecs_core::Result<Self> {
        wecs_core::config::load_flat(path)
    }

    pub fn to_text(&self) -> wecs_core::Result<String> {
        to_flat_string(self)
    }

    pub fn turbine(&self) -> TurbineParams {
        TurbineParams {
            rho: self.rho,
            radius: self.radius,
            p_rated: self.p_rated,
            v_rated: self.v_rated,
            v_cutin: self.v_cutin,
            v_cutout: self.v_cutout,
            beta_min: self.beta_min,
            beta_max: self.beta_max,
            beta_rate_max: self.beta_rate_max,
            inertia: self.inertia,
            lambda_i_form: self.lambda_i_form,
            cp_pitch_floor: self.cp_pitch_floor,
        }
    }

    /// Wind settings with `self.seed` as the generator seed.
    pub fn wind(&self) -> WindConfig {
        WindConfig {
            v_mean: self.wind_v_mean,
            turbulence_intensity: self.wind_turbulence_intensity,
            dt: self.wind_dt,
            duration: self.wind_duration,
            seed: self.seed,
        }
    }

    pub fn arma(&self) -> ArmaParams {
        ArmaParams {
            ar_coeffs: self.wind_ar_coeffs.clone(),
            ma_coeffs: self.wind_ma_coeffs.clone(),
            noise_std: self.wind_noise_std,
        }
    }

    pub fn sim(&self) -> SimConfig {
        SimConfig {
            dt: self.sim_dt,
            duration: self.sim_duration,
            torque_mode: self.sim_torque_mode,
            record_every: self.sim_record_every,
            hysteresis_band: self.sim_hysteresis_band,
            settle_time: self.sim_settle_time,
        }
    }

    pub fn mlp(&self) -> MlpTrainConfig {
        MlpTrainConfig {
            learning_rate: self.mlp_learning_rate,
            max_epochs: self.mlp_max_epochs,
            target_error: self.mlp_target_error,
            seed: self.seed,
            init_scale: self.mlp_init_scale,
            hidden_units: self.mlp_hidden_units,
        }
    }

    pub fn rbf(&self) -> RbfTrainConfig {
        RbfTrainConfig {
            learning_rate: self.rbf_learning_rate,
            max_epochs: self.rbf_max_epochs,
            target_error: self.rbf_target_error,
            seed: self.seed,
            center_strategy: self.rbf_center_strategy,
            hidden_units: self.rbf_hidden_units,
        }
    }

    pub fn ga(&self) -> GaConfig {
        GaConfig {
            population_size: self.ga_population_size,
            iterations: self.ga_iterations,
            p_crossover: self.ga_p_crossover,
            p_mutation: self.ga_p_mutation,
            replacement_count: self.ga_replacement_count,
            fitness_w_coverage: self.ga_fitness_w_coverage,
            fitness_w_regulation: self.ga_fitness_w_regulation,
            seed: self.seed,
            max_rules: self.ga_max_rules,
            fitness_mode: self.ga_fitness_mode,
        }
    }
}
