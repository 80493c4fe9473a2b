use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Pitch-control laboratory for a 2 MW variable-speed wind turbine.
#[derive(Debug, Parser)]
#[command(name = "wecs", version, about)]
pub struct Cli {
    /// Flat `key = value` configuration file; absent keys keep their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Overrides the configured seed for every randomized step.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a turbulent wind series (CSV `t,v_w`) and print its statistics.
    Wind {
        #[command(flatten)]
        wind: WindArgs,
        /// Output CSV.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Build the optimal-pitch reference dataset (CSV `v,p_pu,omega_pu,beta_star`).
    Refgen {
        #[arg(long, value_name = "M/S")]
        v_min: Option<f64>,
        #[arg(long, value_name = "M/S")]
        v_max: Option<f64>,
        #[arg(long, value_name = "M/S")]
        step: Option<f64>,
        /// Output CSV.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Train a neural pitch controller on 80% of a dataset and report the
    /// held-out pitch RMSE. Also writes `<out stem>.history.csv`.
    Train {
        #[arg(value_enum)]
        kind: NetKind,
        #[arg(long, value_name = "PATH")]
        dataset: PathBuf,
        /// Output model file (JSON).
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Evolve a fuzzy rule base. Also writes `<out stem>.history.csv`.
    Evolve {
        #[arg(long, value_name = "PATH")]
        dataset: PathBuf,
        /// Overrides `ga_iterations`.
        #[arg(long, value_name = "N")]
        iterations: Option<usize>,
        /// Output rule-base text file.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Run one closed-loop simulation and write the trace, metrics and plots.
    Simulate {
        #[arg(long, value_enum)]
        controller: ControllerKind,
        /// Network file for mlp/rbf, rule-base file for gfs.
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
        /// Wind CSV; generated from the configuration when absent.
        #[arg(long, value_name = "PATH")]
        wind: Option<PathBuf>,
        /// Angle for the fixed_pitch controller [default: optimal pitch at
        /// the mean wind speed and rated rotor speed].
        #[arg(long, value_name = "DEG", allow_negative_numbers = true)]
        fixed_pitch: Option<f64>,
        #[command(flatten)]
        wind_args: WindArgs,
        /// Output prefix: `<out>.trace.csv`, `<out>.metrics.json`, four SVG panels.
        #[arg(long, value_name = "PREFIX")]
        out: PathBuf,
    },
    /// Tabulate metrics of traces simulated on the same wind.
    Compare {
        /// Traces as `NAME=PATH`, or `PATH` to name a trace after its file.
        #[arg(required = true, num_args = 2..)]
        traces: Vec<String>,
        /// Output CSV.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Regenerate every artifact: dataset, trained and evolved controllers,
    /// closed-loop runs on several wind seeds, comparisons and plots.
    Repro {
        /// Number of wind seeds (overrides `repro_seeds`).
        #[arg(long, value_name = "N")]
        seeds: Option<usize>,
        #[command(flatten)]
        wind: WindArgs,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

/// Overrides for the generated wind and the simulation length.
#[derive(Debug, Clone, Default, Args)]
pub struct WindArgs {
    /// Turbulence intensity (standard deviation over mean).
    #[arg(long, value_name = "FRAC", allow_negative_numbers = true)]
    pub ti: Option<f64>,
    #[arg(long, value_name = "M/S", allow_negative_numbers = true)]
    pub v_mean: Option<f64>,
    /// Length of the wind series and of any simulation, s.
    #[arg(long, value_name = "S")]
    pub duration: Option<f64>,
    /// Time step, s: the wind sample interval for `wind`, the integration
    /// step for `simulate` and `repro`.
    #[arg(long, value_name = "S")]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NetKind {
    Mlp,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ControllerKind {
    Mlp,
    Rbf,
    Gfs,
    FixedPitch,
    None,
}
