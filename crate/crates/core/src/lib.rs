//! Pitch-control laboratory for a 2 MW variable-speed wind turbine.
//!
//! The crate covers turbulent wind generation, the aerodynamic and rotor
//! plant, a reference pitch schedule, three trainable pitch controllers (MLP,
//! RBF network, genetic fuzzy system) and a closed-loop simulator with
//! comparison metrics.

// Validation uses `!(x > lo)` so that NaN fails every range check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod gfs;
pub mod mlp;
pub mod netfile;
pub mod norm;
pub mod rbf;
pub mod refgen;
pub mod simloop;
pub mod turbine;
pub mod wind;

pub use error::{Error, Result};
pub use gfs::{evolve, infer_pitch, FuzzyRule, GaConfig, LinguisticScale, RuleBase, Term};
pub use mlp::{MlpNetwork, MlpTrainConfig};
pub use netfile::NetworkModel;
pub use rbf::{CenterStrategy, RbfNetwork, RbfTrainConfig};
pub use refgen::{
    build_training_set, optimal_pitch, required_cp, ReferenceDataset, ReferenceSample,
};
pub use simloop::{compare, compute_metrics, Controller, Metrics, SimConfig, TraceRecord};
pub use turbine::{
    aerodynamic_power, AeroOutput, LambdaIForm, RatedPoint, RotorState, TurbineParams,
};
pub use wind::{generate_wind, ArmaParams, WindConfig, WindSeries};
