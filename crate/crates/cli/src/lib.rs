//! Command-line front end: wind generation, reference datasets, controller
//! training and evolution, closed-loop simulation, comparison and plots.

pub mod args;
pub mod commands;
pub mod files;
pub mod lab;
pub mod manifest;
pub mod plot;

use std::fmt;

pub use args::Cli;
pub use lab::LabConfig;
pub use manifest::RunManifest;

/// Exit status for failures.
pub const EXIT_FAILURE: i32 = 1;
/// Exit status for bad invocations and invalid inputs or settings.
pub const EXIT_USAGE: i32 = 2;

/// A request the command cannot act on as given.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// `EXIT_USAGE` for invalid settings or inputs anywhere in the chain,
/// `EXIT_FAILURE` otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use wecs_core::Error as E;
    let usage = err.chain().any(|cause| {
        cause.is::<UsageError>()
            || matches!(
                cause.downcast_ref::<E>(),
                Some(
                    E::InvalidParam { .. }
                        | E::Config(_)
                        | E::EmptyDataset
                        | E::NonStationary(_)
                        | E::TooFewSamples { .. }
                )
            )
    });
    if usage {
        EXIT_USAGE
    } else {
        EXIT_FAILURE
    }
}

/// The whole error chain on one line.
pub fn diagnostic(err: &anyhow::Error) -> String {
    format!("error: {err:#}").replace(['\n', '\r'], " ")
}
