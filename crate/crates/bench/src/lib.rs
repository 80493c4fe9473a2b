//! Shared fixtures for the benchmarks.

use wecs_core::gfs::RuleBase;
use wecs_core::simloop::Controller;
use wecs_core::{
    build_training_set, generate_wind, optimal_pitch, ArmaParams, ReferenceDataset, TurbineParams,
    WindConfig, WindSeries,
};

pub fn plant() -> TurbineParams {
    TurbineParams::default()
}

/// The default reference dataset over the operating envelope at 0.5 m/s.
pub fn dataset(params: &TurbineParams) -> ReferenceDataset {
    build_training_set(params, params.v_cutin, params.v_cutout, 0.5)
        .expect("default dataset builds")
}

/// 600 s of turbulent wind at 16 m/s mean, TI 0.16.
pub fn turbulent_wind(seed: u64) -> WindSeries {
    let cfg = WindConfig {
        v_mean: 16.0,
        seed,
        ..WindConfig::default()
    };
    generate_wind(&cfg, &ArmaParams::default()).expect("default wind generates")
}

/// Controllers that need no training: the five-rule reference fuzzy base
/// and a fixed pitch at the optimal angle for 16 m/s.
pub fn untrained_controllers(params: &TurbineParams) -> Vec<Controller> {
    let beta16 = optimal_pitch(16.0, params.rated_point().omega_rated, params)
        .expect("16 m/s is inside the envelope")
        .beta;
    vec![
        Controller::Gfs(RuleBase::reference(params).expect("reference rule base")),
        Controller::FixedPitch(beta16),
    ]
}
