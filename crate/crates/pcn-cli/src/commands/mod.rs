//! Experiment runners.
//!
//! One public function per experiment family, each taking a validated
//! [`crate::config::Resolved`] and returning a typed outcome (so tests
//! can assert on results directly) while writing the CSV/plot artifacts
//! as a side effect. Runners print a one-line progress note per grid cell to
//! stderr and their headline numbers to stdout; artifacts carry everything
//! machine-readable.
//!
//! Grid runs never stop at a divergent cell: the cell is recorded, the
//! rest of the grid runs, and the whole command reports the divergence
//! afterwards through [`CliError::Diverged`] so the exit code is distinct.

pub mod bench;
pub mod calibrate;
pub mod classify;
pub mod efficiency;
pub mod generate;

use pcn::engine::{Engine, EngineKind};
use pcn::model::PcNetwork;
use pcn::numerics::{InitScheme, Rng};

use crate::config::{EngineChoice, ExperimentConfig, NetworkSpec};
use crate::{CliError, Result};

/// Substream tag for network initialization, so the per-seed weight draw
/// is decoupled from every other consumer of the seed.
const NET_INIT_STREAM: u64 = 0x99E7;

/// The engine a config asks for.
pub fn build_engine(cfg: &ExperimentConfig) -> Engine {
    match cfg.engine {
        EngineChoice::Serial => Engine::serial(),
        EngineChoice::Parallel => Engine::new(EngineKind::LayerParallel { workers: cfg.workers }),
    }
}

/// A fresh network for one grid cell, drawn from the cell's seed.
pub fn build_net(spec: &NetworkSpec, seed: u64) -> Result<PcNetwork> {
    let mut rng = Rng::substream(seed, NET_INIT_STREAM);
    Ok(PcNetwork::new(&spec.dims, spec.activation()?, &mut rng, InitScheme::UniformFanIn)?)
}

/// Create the artifact directory.
pub fn ensure_out_dir(cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    Ok(())
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("medians are taken over finite values"));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}

/// Cross-check the configured network shape against the data that actually
/// loaded (`validate` already covered the shapes knowable up front).
pub fn check_network_against_data(
    spec: &NetworkSpec,
    features: usize,
    classes: Option<usize>,
) -> Result<()> {
    match classes {
        Some(c) => {
            if spec.dims[0] != c {
                return Err(CliError::Config(format!(
                    "network dims[0] = {} but the dataset has {c} classes",
                    spec.dims[0]
                )));
            }
            if *spec.dims.last().expect("validated") != features {
                return Err(CliError::Config(format!(
                    "network input dim {} but the data has {features} features",
                    spec.dims.last().expect("validated")
                )));
            }
        }
        None => {
            if spec.dims[0] != features {
                return Err(CliError::Config(format!(
                    "network dims[0] = {} but the data has {features} features",
                    spec.dims[0]
                )));
            }
        }
    }
    Ok(())
}
