//! Wall-clock cost of one weight update, per schedule and engine.

use std::time::Instant;

use crate::model::NetworkState;
use crate::model::PcNetwork;
use crate::numerics::{Activation, InitScheme, Matrix, Rng};
use crate::schedules::{self, Algorithm, ScheduleConfig};
use crate::{PcnError, Result};

use super::{Engine, EngineKind};

/// One benchmarked cell.
#[derive(Debug, Clone)]
pub struct BenchRow {
    /// "bp", "ipc-serial", or "ipc-parallel".
    pub schedule: String,
    pub depth: usize,
    pub width: usize,
    /// Worker threads (1 for serial rows and for backprop).
    pub workers: usize,
    pub median_ns_per_update: u64,
    pub smm_per_update: f64,
    /// Median update time divided by backprop's median at the same shape.
    pub ratio_vs_bp: f64,
}

/// Measure the median wall time of one weight update for backprop and for
/// incremental PC (serial and layer-parallel), on square networks of the
/// given depths and widths at batch size 1.
///
/// Timings exclude state setup: the supervised state is clamped once and
/// incremental updates continue from it, mirroring how the schedule is
/// actually run. `repeats` must be odd so the median is one sample.
pub fn bench_update_ratio(
    depths: &[usize],
    widths: &[usize],
    parallel_workers: usize,
    repeats: usize,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    if repeats == 0 || repeats % 2 == 0 {
        return Err(PcnError::InvalidConfig(format!(
            "repeats must be odd and positive, got {repeats}"
        )));
    }
    let warmup = 3;
    let mut rows = Vec::new();
    for &depth in depths {
        if depth < 2 {
            return Err(PcnError::InvalidConfig("bench depths start at 2".into()));
        }
        for &width in widths {
            let dims = vec![width; depth + 1];
            let mut rng = Rng::new(seed ^ ((depth as u64) << 16) ^ width as u64);
            let net = PcNetwork::new(&dims, Activation::Tanh, &mut rng, InitScheme::UniformFanIn)?;
            let inputs =
                Matrix::from_vec(width, 1, (0..width).map(|_| rng.uniform(0.0, 1.0)).collect())?;
            let mut targets = Matrix::zeros(width, 1);
            targets.as_mut_slice()[(rng.next_u64() % width as u64) as usize] = 1.0;

            let mut cfg = ScheduleConfig::for_algorithm(Algorithm::Ipc);
            cfg.alpha = 1e-4;
            cfg.seed = seed;

            let bp_ns = {
                let mut engine = Engine::serial();
                let mut n = net.clone();
                let mut samples = Vec::with_capacity(repeats);
                for i in 0..warmup + repeats {
                    let start = Instant::now();
                    n = schedules::bp_update(&mut engine, &n, &inputs, &targets, cfg.alpha, 0.0)?;
                    let ns = start.elapsed().as_nanos() as u64;
                    if i >= warmup {
                        samples.push(ns);
                    }
                }
                median(&mut samples)
            };
            let (_, bp_smm) = super::predicted_per_update(Algorithm::Bp, depth, 1);
            rows.push(BenchRow {
                schedule: "bp".into(),
                depth,
                width,
                workers: 1,
                median_ns_per_update: bp_ns,
                smm_per_update: bp_smm as f64,
                ratio_vs_bp: 1.0,
            });

            for (label, kind) in [
                ("ipc-serial", EngineKind::Serial),
                ("ipc-parallel", EngineKind::LayerParallel { workers: parallel_workers }),
            ] {
                let mut engine = Engine::new(kind);
                let mut n = net.clone();
                let mut state = NetworkState::feedforward_init(&n, &inputs)?;
                state.clamp_output(&n, &targets)?;
                let mut samples = Vec::with_capacity(repeats);
                for i in 0..warmup + repeats {
                    let start = Instant::now();
                    let (n2, s2) = schedules::ipc_update(&mut engine, &n, &state, &cfg)?;
                    let ns = start.elapsed().as_nanos() as u64;
                    n = n2;
                    state = s2;
                    if i >= warmup {
                        samples.push(ns);
                    }
                }
                let ns = median(&mut samples);
                let workers = match kind {
                    EngineKind::Serial => 1,
                    EngineKind::LayerParallel { workers } => workers,
                };
                rows.push(BenchRow {
                    schedule: label.into(),
                    depth,
                    width,
                    workers,
                    median_ns_per_update: ns,
                    smm_per_update: 2.0,
                    ratio_vs_bp: ns as f64 / bp_ns as f64,
                });
            }
        }
    }
    Ok(rows)
}

fn median(samples: &mut [u64]) -> u64 {
    samples.sort_unstable();
    samples[samples.len() / 2]
}
