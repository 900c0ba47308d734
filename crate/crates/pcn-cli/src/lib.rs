//! Experiment runner for predictive-coding networks.
//!
//! Everything here is orchestration around the `pcn` library: a versioned
//! TOML configuration schema ([`config`]), deterministic CSV and
//! gnuplot-compatible artifact writers ([`artifacts`]), dataset resolution
//! with an on-disk cache directory ([`datasets`]), and one runner per
//! experiment family ([`commands`]) — classification accuracy grids,
//! generative energy traces, training-loss-versus-SMM efficiency curves,
//! operation-count audits with wall-clock benchmarks, and calibration
//! studies under input corruption.
//!
//! Runners are plain functions over a validated [`config::Resolved`]
//! configuration so tests can call them directly; the `pcn` binary is a
//! thin clap wrapper that maps [`CliError`] onto the documented exit
//! codes. Every artifact embeds the configuration hash, the seed, and the
//! library version, and a rerun with identical inputs writes byte-identical
//! files.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod datasets;

use std::fmt;

use pcn::PcnError;

/// Exit code for configuration, schema, and usage errors.
pub const EXIT_CONFIG: u8 = 2;
/// Exit code when at least one training cell diverged.
pub const EXIT_DIVERGED: u8 = 3;
/// Exit code when the operation-count audit found a mismatch.
pub const EXIT_AUDIT: u8 = 4;
/// Exit code for everything else that fails (I/O, internal errors).
pub const EXIT_FAILURE: u8 = 1;

/// Runner-level error. The variants exist so the binary can keep the
/// documented exit-code contract: configuration problems, divergence, and
/// audit mismatches each get their own code.
#[derive(Debug)]
pub enum CliError {
    /// Configuration, schema, or usage problem, detected before any compute.
    Config(String),
    /// At least one training cell diverged. Artifacts for the whole grid,
    /// including the divergent cells, have already been written.
    Diverged(String),
    /// The operation-count audit found a mismatch between predicted and
    /// observed totals. The full audit table has already been written.
    Audit(String),
    /// Failure inside the training library after setup.
    Pcn(PcnError),
    /// Underlying I/O failure.
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Diverged(_) => EXIT_DIVERGED,
            CliError::Audit(_) => EXIT_AUDIT,
            CliError::Pcn(_) | CliError::Io(_) => EXIT_FAILURE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(what) => write!(f, "configuration error: {what}"),
            CliError::Diverged(what) => write!(f, "divergence: {what}"),
            CliError::Audit(what) => write!(f, "audit failure: {what}"),
            CliError::Pcn(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CliError::Pcn(e) => Some(e),
            CliError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<PcnError> for CliError {
    fn from(e: PcnError) -> Self {
        match e {
            // The library flags pre-compute usage problems with this
            // variant; keep them on the configuration exit code.
            PcnError::InvalidConfig(what) => CliError::Config(what),
            PcnError::Io(io) => CliError::Io(io),
            other => CliError::Pcn(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
