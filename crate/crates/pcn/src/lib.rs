//! Hierarchical predictive-coding networks.
//!
//! A network of `L` weight matrices generates top-down predictions
//! `mu[l] = w[l] * f(x[l+1])` for layer values `x[0] .. x[L]`, where layer
//! `L` is the top of the hierarchy and layer 0 is the generated end. The
//! mismatch `eps[l] = x[l] - mu[l]` defines the energy
//! `F = 1/2 * sum_l ||eps[l]||^2`, and everything in this crate is some way
//! of descending it:
//!
//! * [`schedules`] implements the training schedules — classic predictive
//!   coding (settle values, then one weight update), incremental predictive
//!   coding (values and weights step together every iteration), the
//!   zero-divergence schedule (one weight commit per layer on a feedforward
//!   start, exactly reproducing backprop), and a plain backprop baseline.
//! * [`engine`] executes schedule steps either serially or with one worker
//!   per layer, and accounts for matrix multiplications both individually
//!   and as synchronous parallel phases (SMMs).
//! * [`numerics`] is the deterministic dense-matrix substrate; [`model`]
//!   holds the network and its value/error state; [`data`] and [`metrics`]
//!   cover dataset ingestion, corruption studies, and calibration metrics.
//!
//! Serial and parallel execution share the same per-layer kernels and
//! produce bit-identical trajectories; see `engine` for the contract.

pub mod data;
pub mod engine;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod schedules;

use std::fmt;

/// Library version, embedded in artifacts and checkpoints.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Crate-wide error type.
#[derive(Debug)]
pub enum PcnError {
    /// Operand dimensions are incompatible.
    ShapeMismatch(String),
    /// A configuration or usage constraint was violated before any math ran.
    InvalidConfig(String),
    /// A computation produced a non-finite value. `layer` is set when the
    /// failure is attributable to one layer of a network.
    Divergence {
        layer: Option<usize>,
        context: String,
    },
    /// Malformed serialized input (IDX tensor, checkpoint, ...). `offset` is
    /// the byte position at which the input stopped making sense.
    Format { offset: u64, what: String },
    /// Underlying I/O failure.
    Io(std::io::Error),
}

impl fmt::Display for PcnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PcnError::ShapeMismatch(what) => write!(f, "shape mismatch: {what}"),
            PcnError::InvalidConfig(what) => write!(f, "invalid config: {what}"),
            PcnError::Divergence { layer: Some(l), context } => {
                write!(f, "divergence at layer {l}: {context}")
            }
            PcnError::Divergence { layer: None, context } => {
                write!(f, "divergence: {context}")
            }
            PcnError::Format { offset, what } => {
                write!(f, "malformed input at byte {offset}: {what}")
            }
            PcnError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for PcnError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            PcnError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for PcnError {
    fn from(e: std::io::Error) -> Self {
        PcnError::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, PcnError>;
