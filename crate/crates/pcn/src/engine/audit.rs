//! Exact accounting audit: run real updates, compare ledger totals against
//! the closed-form per-update costs.

use crate::model::{NetworkState, PcNetwork};
use crate::numerics::{Activation, InitScheme, Matrix, Rng};
use crate::schedules::{self, Algorithm, ScheduleConfig};
use crate::{PcnError, Result};

use super::{Engine, EngineKind};

/// Closed-form counted-MM and SMM cost of one weight update, per schedule.
/// `t_steps` matters only for classic PC. Derivations assume supervised
/// clamping (input and target both pinned), the regime audits run in.
pub fn predicted_per_update(algorithm: Algorithm, depth: usize, t_steps: usize) -> (u64, u64) {
    let d = depth as u64;
    let t = t_steps as u64;
    match algorithm {
        // T inference steps, each one value phase (d-1 products) plus one
        // refresh phase (d products); the weight commit rides along free.
        Algorithm::Pc => ((2 * d - 1) * t, 2 * t),
        // One such step per update.
        Algorithm::Ipc => (2 * d - 1, 2),
        // d-1 inference steps; the last commit is weight-only and free.
        Algorithm::Zil => ((2 * d - 1) * (d - 1), 2 * (d - 1)),
        // d forward products and d-1 backward products, each its own
        // sequential phase.
        Algorithm::Bp => (2 * d - 1, 2 * d - 1),
    }
}

/// One audited grid cell.
#[derive(Debug, Clone)]
pub struct AuditRow {
    pub algorithm: Algorithm,
    pub depth: usize,
    /// Inference steps per update (classic PC only; 0 elsewhere).
    pub t_steps: usize,
    pub updates: u64,
    pub predicted_mm: u64,
    pub predicted_smm: u64,
    /// Observed ledger totals divided by updates; fractional values mean
    /// the totals did not even divide evenly.
    pub observed_mm: f64,
    pub observed_smm: f64,
    pub pass: bool,
}

impl AuditRow {
    fn new(
        algorithm: Algorithm,
        depth: usize,
        t_steps: usize,
        updates: u64,
        ledger: &super::StepLedger,
    ) -> AuditRow {
        let (predicted_mm, predicted_smm) = predicted_per_update(algorithm, depth, t_steps);
        let observed_mm = ledger.mm_count as f64 / updates as f64;
        let observed_smm = ledger.smm_count as f64 / updates as f64;
        let pass = ledger.weight_updates == updates
            && ledger.mm_count == predicted_mm * updates
            && ledger.smm_count == predicted_smm * updates;
        AuditRow {
            algorithm,
            depth,
            t_steps,
            updates,
            predicted_mm,
            predicted_smm,
            observed_mm,
            observed_smm,
            pass,
        }
    }
}

/// Train small supervised networks for a few updates per grid cell and
/// check that the ledger matches the closed forms exactly.
pub fn count_audit(
    depths: &[usize],
    pc_t_steps: &[usize],
    updates: u64,
    seed: u64,
) -> Result<Vec<AuditRow>> {
    if updates == 0 {
        return Err(PcnError::InvalidConfig("audit needs at least one update".into()));
    }
    if depths.iter().any(|&d| d < 2) {
        return Err(PcnError::InvalidConfig(
            "audit depths start at 2; a depth-1 supervised network has no free layers".into(),
        ));
    }
    let mut rows = Vec::new();
    for &depth in depths {
        let mut dims = vec![6usize; depth + 1];
        dims[0] = 3;
        *dims.last_mut().unwrap() = 5;
        let mut rng = Rng::new(seed ^ depth as u64);
        let net = PcNetwork::new(&dims, Activation::Tanh, &mut rng, InitScheme::UniformFanIn)?;
        let batch = 4;
        let inputs_data: Vec<f64> = (0..dims[depth] * batch).map(|_| rng.uniform(0.0, 1.0)).collect();
        let inputs = Matrix::from_vec(dims[depth], batch, inputs_data)?;
        let mut targets = Matrix::zeros(dims[0], batch);
        for b in 0..batch {
            let class = (rng.next_u64() % dims[0] as u64) as usize;
            targets.as_mut_slice()[class * batch + b] = 1.0;
        }

        for algorithm in [Algorithm::Pc, Algorithm::Ipc, Algorithm::Zil, Algorithm::Bp] {
            let ts: &[usize] = match algorithm {
                Algorithm::Pc => pc_t_steps,
                _ => &[1],
            };
            for &t in ts {
                let mut cfg = ScheduleConfig::for_algorithm(algorithm);
                cfg.t_steps = t;
                cfg.seed = seed;
                let mut engine = Engine::new(EngineKind::Serial);
                let mut n = net.clone();
                match algorithm {
                    Algorithm::Pc => {
                        for _ in 0..updates {
                            let mut state = NetworkState::feedforward_init(&n, &inputs)?;
                            state.clamp_output(&n, &targets)?;
                            let (n2, _) = schedules::pc_update(&mut engine, &n, &state, &cfg)?;
                            n = n2;
                        }
                    }
                    Algorithm::Ipc => {
                        let mut state = NetworkState::feedforward_init(&n, &inputs)?;
                        state.clamp_output(&n, &targets)?;
                        for _ in 0..updates {
                            let (n2, s2) = schedules::ipc_update(&mut engine, &n, &state, &cfg)?;
                            n = n2;
                            state = s2;
                        }
                    }
                    Algorithm::Zil => {
                        for _ in 0..updates {
                            n = schedules::zil_update(&mut engine, &n, &inputs, &targets, &cfg)?;
                        }
                    }
                    Algorithm::Bp => {
                        for _ in 0..updates {
                            n = schedules::bp_update(&mut engine, &n, &inputs, &targets, cfg.alpha, 0.0)?;
                        }
                    }
                }
                let t_recorded = if algorithm == Algorithm::Pc { t } else { 0 };
                rows.push(AuditRow::new(algorithm, depth, t_recorded, updates, &engine.ledger));
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predictions_match_published_table() {
        // Depth 4, T = 16: classic PC costs 112 MMs / 32 SMMs per update.
        assert_eq!(predicted_per_update(Algorithm::Pc, 4, 16), (112, 32));
        assert_eq!(predicted_per_update(Algorithm::Ipc, 4, 1), (7, 2));
        assert_eq!(predicted_per_update(Algorithm::Zil, 4, 1), (21, 6));
        assert_eq!(predicted_per_update(Algorithm::Bp, 4, 1), (7, 7));
        // Incremental updates cost 2 SMMs at any depth.
        assert_eq!(predicted_per_update(Algorithm::Ipc, 16, 1).1, 2);
    }
}
