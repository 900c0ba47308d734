//! Step execution: serial or with one worker per layer.
//!
//! A training step is a short sequence of *phases*. Phase one applies
//! value updates to every unclamped layer and, depending on the schedule,
//! commits weight updates in the same breath; the final phase recomputes
//! predictions, errors, and cached activations under the freshly written
//! values and weights. (The sequential-reading variant splits the commits
//! into their own middle phase; see [`StepSpec::sequential_weights`].)
//! Within a phase every per-layer task reads only the immutable pre-phase
//! snapshot and writes a buffer no other task touches (Jacobi semantics),
//! which yields two guarantees:
//!
//! * the serial executor and the layer-parallel executor produce
//!   bit-identical trajectories, because both run the same kernels on the
//!   same snapshots and merely schedule them differently;
//! * no task can observe a value written in the current phase — the
//!   snapshot is immutable by construction, so the classic barrier hazard
//!   is ruled out by the type system rather than by discipline.
//!
//! The [`StepLedger`] records each phase: a value phase counts one matrix
//! multiplication per unclamped non-output layer, a refresh phase one per
//! layer, and weight commits are uncounted (see `ledger` for why).

mod audit;
mod bench;
mod ledger;
mod parallel;

pub use audit::{count_audit, predicted_per_update, AuditRow};
pub use bench::{bench_update_ratio, BenchRow};
pub use ledger::{PhaseKind, StepLedger};

use std::sync::Arc;
use std::time::Instant;

use crate::model::{at_layer, kernels, NetworkState, PcNetwork};
use crate::numerics::{Activation, Matrix};
use crate::Result;

/// How steps are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Serial,
    /// Worker pool executing per-layer tasks concurrently; `workers` is
    /// capped at the number of tasks a phase actually has.
    LayerParallel { workers: usize },
}

/// Which weights phase one commits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum WeightMode {
    None,
    All,
    Single(usize),
}

/// One step's worth of instructions for the engine.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepSpec {
    pub gamma: f64,
    pub alpha: f64,
    pub weight_decay: f64,
    /// Move unclamped values in phase one.
    pub update_values: bool,
    pub weights: WeightMode,
    /// Commit weights in their own phase *after* the value phase, each
    /// commit recomputing its layer's error from the just-moved values
    /// (the sequential-reading schedule variant) instead of fused into the
    /// value phase reading the entering snapshot (the default semantics).
    pub sequential_weights: bool,
    /// Run the refresh phase. Skipped only when the state is about to be
    /// discarded, e.g. the final commit of a zero-divergence update.
    pub refresh: bool,
}

/// Executes steps against a network and state, accumulating accounting
/// into its ledger.
pub struct Engine {
    exec: Exec,
    pub ledger: StepLedger,
}

enum Exec {
    Serial,
    Parallel(parallel::Pool),
}

impl Engine {
    pub fn new(kind: EngineKind) -> Engine {
        let exec = match kind {
            EngineKind::Serial => Exec::Serial,
            EngineKind::LayerParallel { workers } => {
                Exec::Parallel(parallel::Pool::new(workers.max(1)))
            }
        };
        Engine { exec, ledger: StepLedger::new() }
    }

    pub fn serial() -> Engine {
        Engine::new(EngineKind::Serial)
    }

    pub fn kind(&self) -> EngineKind {
        match &self.exec {
            Exec::Serial => EngineKind::Serial,
            Exec::Parallel(pool) => EngineKind::LayerParallel { workers: pool.workers() },
        }
    }

    /// Run one step. On error the network and state are rolled back to
    /// exactly their pre-step contents (the backups are reference bumps,
    /// so this costs nothing on the happy path).
    pub(crate) fn run_step(
        &mut self,
        net: &mut PcNetwork,
        state: &mut NetworkState,
        spec: &StepSpec,
    ) -> Result<()> {
        let backup_net = net.clone();
        let backup_state = state.clone();
        match self.step_phases(net, state, spec) {
            Ok(()) => {
                if spec.update_values {
                    self.ledger.inference_steps += 1;
                }
                Ok(())
            }
            Err(e) => {
                *net = backup_net;
                *state = backup_state;
                Err(e)
            }
        }
    }

    fn step_phases(
        &mut self,
        net: &mut PcNetwork,
        state: &mut NetworkState,
        spec: &StepSpec,
    ) -> Result<()> {
        let depth = net.depth();
        debug_assert_eq!(state.layer_count(), depth + 1);

        let value_tasks: Vec<Task> = if spec.update_values {
            (0..=depth).filter(|&l| !state.is_clamped(l)).map(Task::Value).collect()
        } else {
            Vec::new()
        };
        let weight_tasks: Vec<Task> = match spec.weights {
            WeightMode::None => Vec::new(),
            WeightMode::All => (0..depth).map(Task::Weight).collect(),
            WeightMode::Single(l) => {
                debug_assert!(l < depth);
                vec![Task::Weight(l)]
            }
        };

        if spec.sequential_weights {
            if !value_tasks.is_empty() {
                self.run_phase(net, state, spec, value_tasks)?;
            }
            if !weight_tasks.is_empty() {
                self.run_phase(net, state, spec, weight_tasks)?;
            }
        } else {
            let mut phase_one = value_tasks;
            phase_one.extend(weight_tasks);
            if !phase_one.is_empty() {
                self.run_phase(net, state, spec, phase_one)?;
            }
        }

        if spec.refresh {
            let tasks: Vec<Task> = (0..depth).map(Task::Refresh).collect();
            self.run_phase(net, state, spec, tasks)?;
        }
        Ok(())
    }

    fn run_phase(
        &mut self,
        net: &mut PcNetwork,
        state: &mut NetworkState,
        spec: &StepSpec,
        tasks: Vec<Task>,
    ) -> Result<()> {
        let counted: u64 = tasks.iter().map(Task::counted_mm).sum();
        let kind = if tasks.iter().any(|t| matches!(t, Task::Refresh(_))) {
            PhaseKind::Predict
        } else if tasks.iter().any(|t| matches!(t, Task::Value(_))) {
            PhaseKind::Value
        } else {
            PhaseKind::Weight
        };

        let start = Instant::now();
        let snap = Snapshot::capture(net, state, spec);
        let outs = match &mut self.exec {
            Exec::Serial => {
                let mut outs = Vec::with_capacity(tasks.len());
                for task in &tasks {
                    outs.push(compute_task(task, &snap)?);
                }
                outs
            }
            Exec::Parallel(pool) => pool.run_phase(tasks, snap)?,
        };
        apply_outputs(net, state, outs);
        self.ledger.record_phase(kind, counted, start.elapsed().as_nanos() as u64);
        Ok(())
    }
}

/// One per-layer unit of phase work.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Task {
    Value(usize),
    Weight(usize),
    Refresh(usize),
}

impl Task {
    /// Counted matrix multiplications this task performs (see ledger).
    fn counted_mm(&self) -> u64 {
        match self {
            // Layer 0 descends only its own error: no product.
            Task::Value(0) => 0,
            Task::Value(_) => 1,
            Task::Weight(_) => 0,
            Task::Refresh(_) => 1,
        }
    }
}

/// Immutable pre-phase view. Matrices are shared by reference count, so
/// capturing a snapshot copies pointers, not data.
pub(crate) struct Snapshot {
    weights: Vec<Arc<Matrix>>,
    values: Vec<Arc<Matrix>>,
    errors: Vec<Arc<Matrix>>,
    fx: Vec<Arc<Matrix>>,
    activation: Activation,
    gamma: f64,
    alpha: f64,
    weight_decay: f64,
    /// Weight tasks recompute errors from the snapshot's values instead of
    /// reading the cached ones (the sequential-reading variant, whose
    /// weight phase runs after values have already moved).
    seq_weights: bool,
}

impl Snapshot {
    fn capture(net: &PcNetwork, state: &NetworkState, spec: &StepSpec) -> Snapshot {
        let depth = net.depth();
        Snapshot {
            weights: (0..depth).map(|l| net.weight_arc(l)).collect(),
            values: (0..=depth).map(|l| state.value_arc(l)).collect(),
            errors: (0..=depth).map(|l| state.error_arc(l)).collect(),
            fx: (0..=depth).map(|l| state.fx_arc(l)).collect(),
            activation: net.activation(),
            gamma: spec.gamma,
            alpha: spec.alpha,
            weight_decay: spec.weight_decay,
            seq_weights: spec.sequential_weights,
        }
    }
}

/// Output of one task, applied to the live state after the whole phase
/// succeeds. Each variant writes slots no other task of the phase writes.
pub(crate) enum TaskOut {
    Value { l: usize, x: Matrix },
    Weight { l: usize, w: Matrix },
    Refresh { l: usize, eps: Matrix, fx_above: Matrix, fx_zero: Option<Matrix> },
}

/// Run one task against the snapshot. This function is the *only* place
/// step math happens, for the serial and parallel engines alike.
pub(crate) fn compute_task(task: &Task, s: &Snapshot) -> Result<TaskOut> {
    match *task {
        Task::Value(l) => {
            let below = if l > 0 {
                Some((&*s.weights[l - 1], &*s.errors[l - 1]))
            } else {
                None
            };
            let x = kernels::value_update_layer(&s.values[l], &s.errors[l], below, s.activation, s.gamma)
                .map_err(|e| at_layer(e, l))?;
            Ok(TaskOut::Value { l, x })
        }
        Task::Weight(l) => {
            let w = if s.seq_weights {
                // Sequential-reading variant: the gradient is taken at the
                // just-moved values, so the task rebuilds its own error and
                // activation. Commits stay uncounted even here — the extra
                // product is the price of rejecting snapshot semantics, and
                // the ledger's budgets are defined for the fused form.
                let fx_above = s.activation.apply(&s.values[l + 1]);
                let (_mu, eps) = kernels::predict_err_layer(&s.weights[l], &s.values[l], &fx_above)
                    .map_err(|e| at_layer(e, l))?;
                kernels::weight_update_layer(&s.weights[l], &eps, &fx_above, s.alpha, s.weight_decay)
            } else {
                kernels::weight_update_layer(
                    &s.weights[l],
                    &s.errors[l],
                    &s.fx[l + 1],
                    s.alpha,
                    s.weight_decay,
                )
            }
            .map_err(|e| at_layer(e, l))?;
            Ok(TaskOut::Weight { l, w })
        }
        Task::Refresh(l) => {
            let fx_above = s.activation.apply(&s.values[l + 1]);
            let (_mu, eps) = kernels::predict_err_layer(&s.weights[l], &s.values[l], &fx_above)
                .map_err(|e| at_layer(e, l))?;
            let fx_zero = (l == 0).then(|| s.activation.apply(&s.values[0]));
            Ok(TaskOut::Refresh { l, eps, fx_above, fx_zero })
        }
    }
}

fn apply_outputs(net: &mut PcNetwork, state: &mut NetworkState, outs: Vec<TaskOut>) {
    for out in outs {
        match out {
            TaskOut::Value { l, x } => state.values[l] = Arc::new(x),
            TaskOut::Weight { l, w } => net.set_weight(l, w),
            TaskOut::Refresh { l, eps, fx_above, fx_zero } => {
                state.errors[l] = Arc::new(eps);
                state.fx[l + 1] = Arc::new(fx_above);
                if let Some(f0) = fx_zero {
                    state.fx[0] = Arc::new(f0);
                }
            }
        }
    }
}
