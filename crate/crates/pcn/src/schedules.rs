//! Training schedules: classic predictive coding, its zero-divergence
//! per-layer variant, incremental predictive coding, and a
//! backpropagation baseline.
//!
//! All four produce full-network weight updates; they differ in how much
//! inference they run per update and in what each weight commit reads:
//!
//! * **classic** ([`pc_update`]) — `T` inference steps on the clamped
//!   state, then one weight commit reading the settled errors; per-update
//!   ledger cost `(2L−1)·T` multiplications in `2T` phases;
//! * **incremental** ([`ipc_update`]) — one inference step and one weight
//!   commit computed from the *same* entering snapshot, fused into a
//!   single phase; `2L−1` multiplications in exactly 2 phases, constant
//!   in depth;
//! * **zero-divergence** ([`zil_update`]) — feedforward initialization,
//!   then `L−1` unit-step moves where step `t` also commits weight
//!   matrix `t`; reproduces backpropagation's update layer for layer;
//!   `(2L−1)(L−1)` multiplications in `2(L−1)` phases;
//! * **backprop** ([`bp_update`]) — explicit forward/backward sweeps with
//!   a squared-error loss, each of its `2L−1` products a sequential phase
//!   of its own; the numerical reference the zero-divergence schedule is
//!   checked against.
//!
//! [`inference_step`] and [`weight_step`] are the uninstrumented
//! single-step reference forms of the shared per-layer kernels; the
//! `*_update` functions drive the same kernels through an [`Engine`] so
//! the step ledger sees every counted phase. [`train`] wraps either
//! regime — mini-batch with per-epoch shuffling and early stopping, or
//! full-batch with energy tracing and plateau detection — and reports
//! traces, accounting, and the final network.

use std::sync::Arc;
use std::time::Instant;

use crate::data::Dataset;
use crate::engine::{Engine, PhaseKind, StepLedger, StepSpec, WeightMode};
use crate::metrics::{accuracy, PredictionBatch};
use crate::model::{at_layer, kernels, Mode, NetworkState, PcNetwork};
use crate::numerics::{Matrix, Rng};
use crate::{PcnError, Result};

/// The four training schedules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Classic predictive coding: `T` inference steps per weight update.
    Pc,
    /// Incremental predictive coding: fused value/weight steps.
    Ipc,
    /// Zero-divergence schedule: per-layer commits on a feedforward state.
    Zil,
    /// Backpropagation baseline.
    Bp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] =
        [Algorithm::Pc, Algorithm::Ipc, Algorithm::Zil, Algorithm::Bp];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pc => "pc",
            Algorithm::Ipc => "ipc",
            Algorithm::Zil => "zil",
            Algorithm::Bp => "bp",
        }
    }

    pub fn from_name(s: &str) -> Result<Algorithm> {
        match s.to_ascii_lowercase().as_str() {
            "pc" => Ok(Algorithm::Pc),
            "ipc" => Ok(Algorithm::Ipc),
            "zil" => Ok(Algorithm::Zil),
            "bp" => Ok(Algorithm::Bp),
            other => Err(PcnError::InvalidConfig(format!(
                "unknown algorithm {other:?}; expected pc, ipc, zil, or bp"
            ))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Hyperparameters for one training run.
#[derive(Debug, Clone)]
pub struct ScheduleConfig {
    pub algorithm: Algorithm,
    /// Inference step size, in (0, 1].
    pub gamma: f64,
    /// Weight learning rate, at least 0 (zero freezes the weights and
    /// leaves pure inference).
    pub alpha: f64,
    /// Inference steps per weight update (classic) and fused updates per
    /// batch (incremental, mini-batch regime). Ignored by the
    /// zero-divergence and backprop schedules.
    pub t_steps: usize,
    /// L2 shrink coefficient applied at each weight commit, at least 0.
    pub weight_decay: f64,
    /// `None` selects the full-batch regime.
    pub batch_size: Option<usize>,
    /// Epoch budget (mini-batch regime).
    pub epochs: usize,
    /// Weight-update budget (full-batch regime).
    pub total_steps: usize,
    /// Seed for batch shuffling; network initialization draws from the
    /// caller's own generator.
    pub seed: u64,
    /// Commit weights in a separate phase reading the just-moved values,
    /// instead of fused into the value phase reading the entering
    /// snapshot (incremental schedule only; same ledger cost).
    pub sequential_weights: bool,
}

impl ScheduleConfig {
    /// A sensible starting point for each schedule; experiments override
    /// the fields they sweep. The zero-divergence schedule requires unit
    /// step size.
    pub fn for_algorithm(algorithm: Algorithm) -> ScheduleConfig {
        let gamma = match algorithm {
            Algorithm::Zil | Algorithm::Bp => 1.0,
            Algorithm::Pc | Algorithm::Ipc => 0.5,
        };
        ScheduleConfig {
            algorithm,
            gamma,
            alpha: 0.01,
            t_steps: 8,
            weight_decay: 0.0,
            batch_size: None,
            epochs: 1,
            total_steps: 100,
            seed: 0,
            sequential_weights: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || self.gamma <= 0.0 || self.gamma > 1.0 {
            return Err(PcnError::InvalidConfig(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(PcnError::InvalidConfig(format!(
                "alpha must be at least 0, got {}",
                self.alpha
            )));
        }
        if self.t_steps == 0 {
            return Err(PcnError::InvalidConfig("t_steps must be at least 1".into()));
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return Err(PcnError::InvalidConfig(format!(
                "weight_decay must be at least 0, got {}",
                self.weight_decay
            )));
        }
        if self.algorithm == Algorithm::Zil && self.gamma != 1.0 {
            return Err(PcnError::InvalidConfig(
                "the zero-divergence schedule requires gamma = 1".into(),
            ));
        }
        if self.batch_size == Some(0) {
            return Err(PcnError::InvalidConfig("batch_size must be positive".into()));
        }
        Ok(())
    }
}

/// One inference step: every unclamped layer moves down the energy
/// gradient with step size `gamma` — all moves read the entering state —
/// then errors and cached activations are recomputed. This is the
/// uninstrumented reference form of the engine's value-plus-refresh step;
/// both run the same kernels, so their trajectories agree bitwise.
pub fn inference_step(net: &PcNetwork, state: &NetworkState, gamma: f64) -> Result<NetworkState> {
    let depth = net.depth();
    if state.layer_count() != depth + 1 {
        return Err(PcnError::ShapeMismatch(format!(
            "state has {} layers, network has {}",
            state.layer_count(),
            depth + 1
        )));
    }
    let mut values = Vec::with_capacity(depth + 1);
    for l in 0..=depth {
        if state.is_clamped(l) {
            values.push(state.value_arc(l));
            continue;
        }
        let below = (l > 0).then(|| (net.weight(l - 1), state.error(l - 1)));
        let x =
            kernels::value_update_layer(state.value(l), state.error(l), below, net.activation(), gamma)
                .map_err(|e| at_layer(e, l))?;
        values.push(Arc::new(x));
    }
    let mut out = NetworkState::new_raw(values, state.clamped.clone(), state.batch());
    out.refresh_errors(net)?;
    Ok(out)
}

/// One weight step reading the state's current errors:
///
/// ```text
/// w[l] <- w[l] * (1 - alpha * weight_decay) + alpha / batch * eps[l] * f(x[l+1])^T
/// ```
///
/// The state is untouched; recompute its errors (or let an engine refresh
/// phase do it) before running further inference against the returned
/// network.
pub fn weight_step(
    net: &PcNetwork,
    state: &NetworkState,
    alpha: f64,
    weight_decay: f64,
) -> Result<PcNetwork> {
    let depth = net.depth();
    if state.layer_count() != depth + 1 {
        return Err(PcnError::ShapeMismatch(format!(
            "state has {} layers, network has {}",
            state.layer_count(),
            depth + 1
        )));
    }
    let mut out = net.clone();
    for l in 0..depth {
        let w = kernels::weight_update_layer(
            net.weight(l),
            state.error(l),
            &state.fx[l + 1],
            alpha,
            weight_decay,
        )
        .map_err(|e| at_layer(e, l))?;
        out.set_weight(l, w);
    }
    Ok(out)
}

fn infer_spec(cfg: &ScheduleConfig) -> StepSpec {
    StepSpec {
        gamma: cfg.gamma,
        alpha: cfg.alpha,
        weight_decay: cfg.weight_decay,
        update_values: true,
        weights: WeightMode::None,
        sequential_weights: false,
        refresh: true,
    }
}

fn fused_spec(cfg: &ScheduleConfig) -> StepSpec {
    StepSpec {
        weights: WeightMode::All,
        sequential_weights: cfg.sequential_weights,
        ..infer_spec(cfg)
    }
}

/// Commit every weight matrix in a bare (zero-cost) phase, then restore
/// the error-currency invariant outside the ledger: the per-update
/// budgets attribute nothing to a weight commit, so neither does the
/// bookkeeping that follows one.
fn commit_all(
    engine: &mut Engine,
    net: &mut PcNetwork,
    state: &mut NetworkState,
    cfg: &ScheduleConfig,
) -> Result<()> {
    let spec = StepSpec {
        update_values: false,
        weights: WeightMode::All,
        refresh: false,
        sequential_weights: false,
        ..infer_spec(cfg)
    };
    let backup = net.clone();
    engine.run_step(net, state, &spec)?;
    if let Err(e) = state.refresh_errors(net) {
        *net = backup;
        return Err(e);
    }
    Ok(())
}

/// One classic update: `t_steps` inference steps, then a single weight
/// commit reading the settled errors. Ledger cost: `(2L−1)·T`
/// multiplications in `2T` phases; the commit is free.
pub fn pc_update(
    engine: &mut Engine,
    net: &PcNetwork,
    state: &NetworkState,
    cfg: &ScheduleConfig,
) -> Result<(PcNetwork, NetworkState)> {
    let mut n = net.clone();
    let mut s = state.clone();
    let spec = infer_spec(cfg);
    for _ in 0..cfg.t_steps {
        engine.run_step(&mut n, &mut s, &spec)?;
    }
    commit_all(engine, &mut n, &mut s, cfg)?;
    engine.ledger.weight_updates += 1;
    Ok((n, s))
}

/// One incremental update: value moves and weight commits computed from
/// the same entering snapshot, fused into one phase, plus the refresh.
/// Ledger cost: `2L−1` multiplications in exactly 2 phases regardless of
/// depth. With `sequential_weights` the commit instead reads the
/// just-moved values in its own (still uncounted) phase.
pub fn ipc_update(
    engine: &mut Engine,
    net: &PcNetwork,
    state: &NetworkState,
    cfg: &ScheduleConfig,
) -> Result<(PcNetwork, NetworkState)> {
    let mut n = net.clone();
    let mut s = state.clone();
    engine.run_step(&mut n, &mut s, &fused_spec(cfg))?;
    engine.ledger.weight_updates += 1;
    Ok((n, s))
}

/// One zero-divergence update for a supervised pair. The state is built
/// here — feedforward initialization is a precondition of the schedule,
/// not a caller choice — then step `t` moves values and commits weight
/// matrix `t` from the same snapshot, for `t` up to `L−2`; the final
/// matrix is committed bare once the backward sweep has delivered its
/// error. Requires unit step size; together with the feedforward start
/// this makes the update equal [`bp_update`]'s, layer for layer.
pub fn zil_update(
    engine: &mut Engine,
    net: &PcNetwork,
    inputs: &Matrix,
    targets: &Matrix,
    cfg: &ScheduleConfig,
) -> Result<PcNetwork> {
    if cfg.gamma != 1.0 {
        return Err(PcnError::InvalidConfig(format!(
            "the zero-divergence schedule requires gamma = 1, got {}",
            cfg.gamma
        )));
    }
    let depth = net.depth();
    let mut n = net.clone();
    let mut s = NetworkState::feedforward_init(&n, inputs)?;
    s.clamp_output(&n, targets)?;
    for t in 0..depth - 1 {
        let spec = StepSpec { weights: WeightMode::Single(t), ..infer_spec(cfg) };
        engine.run_step(&mut n, &mut s, &spec)?;
    }
    let last = StepSpec {
        update_values: false,
        weights: WeightMode::Single(depth - 1),
        refresh: false,
        ..infer_spec(cfg)
    };
    engine.run_step(&mut n, &mut s, &last)?;
    engine.ledger.weight_updates += 1;
    Ok(n)
}

/// One backprop update with squared-error loss `1/2 ||target − output||²`
/// averaged over the batch, on the same architecture, activation,
/// initialization, and commit kernel as the predictive-coding schedules.
/// Each of the `L` forward and `L−1` backward products runs as its own
/// sequential phase, so the ledger records `2L−1` multiplications in
/// `2L−1` phases; the commits are uncounted as everywhere else.
pub fn bp_update(
    engine: &mut Engine,
    net: &PcNetwork,
    inputs: &Matrix,
    targets: &Matrix,
    alpha: f64,
    weight_decay: f64,
) -> Result<PcNetwork> {
    let depth = net.depth();
    let dims = net.dims();
    if inputs.rows() != dims[depth] {
        return Err(PcnError::ShapeMismatch(format!(
            "input has {} rows, network expects {}",
            inputs.rows(),
            dims[depth]
        )));
    }
    if targets.rows() != dims[0] || targets.cols() != inputs.cols() {
        return Err(PcnError::ShapeMismatch(format!(
            "targets are {}x{}, expected {}x{}",
            targets.rows(),
            targets.cols(),
            dims[0],
            inputs.cols()
        )));
    }
    let act = net.activation();

    // Forward sweep, one phase per product. xs[l] holds layer l's
    // activity, fxs[l] its activation (kept for the weight gradients).
    let mut xs: Vec<Option<Matrix>> = vec![None; depth + 1];
    let mut fxs: Vec<Option<Matrix>> = vec![None; depth + 1];
    xs[depth] = Some(inputs.clone());
    for l in (0..depth).rev() {
        let start = Instant::now();
        let fx = act.apply(xs[l + 1].as_ref().expect("forward sweep fills top-down"));
        let x = net.weight(l).matmul(&fx).map_err(|e| at_layer(e, l))?;
        engine.ledger.record_phase(PhaseKind::Predict, 1, start.elapsed().as_nanos() as u64);
        fxs[l + 1] = Some(fx);
        xs[l] = Some(x);
    }

    // Backward sweep: deltas[l] is the loss gradient signal at layer l.
    // The output delta is elementwise (no product); every propagation
    // through a weight matrix is one phase.
    let output = xs[0].take().expect("forward sweep fills layer 0");
    let mut deltas: Vec<Option<Matrix>> = vec![None; depth];
    deltas[0] = Some(targets.sub(&output).map_err(|e| at_layer(e, 0))?);
    for l in 1..depth {
        let start = Instant::now();
        let back = net
            .weight(l - 1)
            .transpose()
            .matmul(deltas[l - 1].as_ref().expect("backward sweep fills bottom-up"))
            .map_err(|e| at_layer(e, l))?;
        let x = xs[l].as_ref().expect("forward sweep fills hidden layers");
        let delta = act.derivative(x).hadamard(&back).map_err(|e| at_layer(e, l))?;
        engine.ledger.record_phase(PhaseKind::Value, 1, start.elapsed().as_nanos() as u64);
        deltas[l] = Some(delta);
    }

    let start = Instant::now();
    let mut out = net.clone();
    for l in 0..depth {
        let w = kernels::weight_update_layer(
            net.weight(l),
            deltas[l].as_ref().expect("backward sweep fills every delta"),
            fxs[l + 1].as_ref().expect("forward sweep caches every activation"),
            alpha,
            weight_decay,
        )
        .map_err(|e| at_layer(e, l))?;
        out.set_weight(l, w);
    }
    engine.ledger.record_phase(PhaseKind::Weight, 0, start.elapsed().as_nanos() as u64);
    engine.ledger.weight_updates += 1;
    Ok(out)
}

/// Readout loss: squared error of the deterministic forward pass against
/// the one-hot targets, halved and averaged over samples.
pub fn readout_mse(net: &PcNetwork, data: &Dataset) -> Result<f64> {
    let targets = data
        .targets()
        .ok_or_else(|| PcnError::InvalidConfig("readout loss needs a labeled dataset".into()))?;
    let scores = net.readout(data.inputs())?;
    let diff = targets.sub(&scores)?;
    Ok(0.5 * diff.frobenius_sq() / data.len() as f64)
}

/// Observation and stopping knobs for [`train`]; the learning dynamics
/// themselves live in [`ScheduleConfig`].
#[derive(Debug, Clone, Copy)]
pub struct TrainOptions<'a> {
    /// Held-out set evaluated after each epoch (mini-batch regime).
    pub eval: Option<&'a Dataset>,
    /// Stop after this many epochs without a held-out improvement; 0
    /// disables early stopping (the best network is still kept).
    pub patience: usize,
    /// Record the energy after every inference step (full-batch regime).
    pub record_energy: bool,
    /// Sample `(counted phases so far, readout loss)` every this many
    /// weight updates — at batch boundaries in the mini-batch regime; 0
    /// disables. Needs labeled data.
    pub loss_every: usize,
    /// Compute training loss and accuracy after each epoch (mini-batch
    /// regime; a full readout pass per epoch, so off by default).
    pub epoch_metrics: bool,
    /// Full-batch plateau stop: end the run once the relative energy
    /// change over ten consecutive updates falls below this. `None`
    /// disables.
    pub plateau: Option<f64>,
}

impl Default for TrainOptions<'_> {
    fn default() -> Self {
        TrainOptions {
            eval: None,
            patience: 0,
            record_energy: false,
            loss_every: 0,
            epoch_metrics: false,
            plateau: Some(1e-6),
        }
    }
}

/// What [`train`] returns: the trained network plus traces and accounting.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub net: PcNetwork,
    /// Energy after each inference step; weight commits landing with a
    /// step are reflected in its entry (full-batch regime, opt-in).
    pub energy_trace: Vec<f64>,
    /// `(counted phases so far, readout loss)` samples (opt-in).
    pub loss_trace: Vec<(u64, f64)>,
    /// Per-epoch training loss and accuracy (mini-batch regime, opt-in).
    pub epoch_train_loss: Vec<f64>,
    pub epoch_train_accuracy: Vec<f64>,
    /// Held-out accuracy after each epoch (mini-batch regime with an
    /// evaluation set).
    pub eval_accuracy: Vec<f64>,
    /// Epoch index and accuracy of the best held-out evaluation; the
    /// reported network is the one from that epoch.
    pub best_eval: Option<(usize, f64)>,
    pub epochs_run: usize,
    /// Completed weight updates.
    pub updates: u64,
    /// Energy of the final full-batch state.
    pub final_energy: Option<f64>,
    pub ledger: StepLedger,
    /// Set when a step diverged; the report then carries the last network
    /// that was still finite.
    pub diverged: Option<String>,
    pub wall_ns: u64,
}

/// Train `net` on `data` under `cfg`, in the regime selected by
/// `cfg.batch_size`:
///
/// * `Some(b)` — mini-batch supervised training: per epoch, shuffle, then
///   for each batch clamp a fresh feedforward state and run the
///   schedule's per-batch recipe (classic: one update of `t_steps`
///   inference steps; incremental: `t_steps` fused updates continuing the
///   batch state; zero-divergence and backprop: one update).
/// * `None` — full-batch: clamp the whole dataset once and run
///   `cfg.total_steps` weight updates continuing the same state
///   (generative or supervised), stopping early on an energy plateau.
///   The zero-divergence and backprop schedules, which rebuild their
///   state every update, simply run `cfg.total_steps` updates.
///
/// The engine's ledger is reset first and a copy of its final totals is
/// embedded in the report. A divergence ends the run and is reported in
/// `diverged` rather than as an error; the report then holds the last
/// finite network.
pub fn train(
    engine: &mut Engine,
    net: &PcNetwork,
    data: &Dataset,
    cfg: &ScheduleConfig,
    mode: Mode,
    opts: &TrainOptions,
) -> Result<TrainReport> {
    cfg.validate()?;
    if opts.loss_every > 0 && data.targets().is_none() {
        return Err(PcnError::InvalidConfig("loss sampling needs a labeled dataset".into()));
    }
    if data.is_empty() {
        return Err(PcnError::InvalidConfig("cannot train on an empty dataset".into()));
    }
    engine.ledger.reset();
    let start = Instant::now();
    let mut report = TrainReport {
        net: net.clone(),
        energy_trace: Vec::new(),
        loss_trace: Vec::new(),
        epoch_train_loss: Vec::new(),
        epoch_train_accuracy: Vec::new(),
        eval_accuracy: Vec::new(),
        best_eval: None,
        epochs_run: 0,
        updates: 0,
        final_energy: None,
        ledger: StepLedger::new(),
        diverged: None,
        wall_ns: 0,
    };
    let outcome = match cfg.batch_size {
        Some(b) => train_minibatch(engine, data, cfg, mode, b, opts, &mut report),
        None => train_fullbatch(engine, data, cfg, mode, opts, &mut report),
    };
    match outcome {
        Ok(()) => {}
        Err(e @ PcnError::Divergence { .. }) => report.diverged = Some(e.to_string()),
        Err(e) => return Err(e),
    }
    report.updates = engine.ledger.weight_updates;
    report.ledger = engine.ledger.clone();
    report.wall_ns = start.elapsed().as_nanos() as u64;
    Ok(report)
}

fn train_minibatch(
    engine: &mut Engine,
    data: &Dataset,
    cfg: &ScheduleConfig,
    mode: Mode,
    batch_size: usize,
    opts: &TrainOptions,
    report: &mut TrainReport,
) -> Result<()> {
    if mode != Mode::Supervised {
        return Err(PcnError::InvalidConfig(
            "mini-batch training is supervised; use the full-batch regime for generative runs"
                .into(),
        ));
    }
    if data.targets().is_none() {
        return Err(PcnError::InvalidConfig("mini-batch training needs a labeled dataset".into()));
    }
    let mut best: Option<(usize, f64)> = None;
    let mut best_net: Option<PcNetwork> = None;
    let mut stale = 0usize;

    'epochs: for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..data.len()).collect();
        Rng::substream(cfg.seed, 0xE70C4 + epoch as u64).shuffle(&mut order);
        for chunk in order.chunks(batch_size) {
            let (inputs, targets) = data.batch(chunk)?;
            let targets = targets.expect("labeled dataset");
            match cfg.algorithm {
                Algorithm::Pc => {
                    let mut s = NetworkState::feedforward_init(&report.net, &inputs)?;
                    s.clamp_output(&report.net, &targets)?;
                    let (n, _) = pc_update(engine, &report.net, &s, cfg)?;
                    report.net = n;
                }
                Algorithm::Ipc => {
                    let mut s = NetworkState::feedforward_init(&report.net, &inputs)?;
                    s.clamp_output(&report.net, &targets)?;
                    for _ in 0..cfg.t_steps {
                        let (n, s2) = ipc_update(engine, &report.net, &s, cfg)?;
                        report.net = n;
                        s = s2;
                    }
                }
                Algorithm::Zil => {
                    report.net = zil_update(engine, &report.net, &inputs, &targets, cfg)?;
                }
                Algorithm::Bp => {
                    report.net =
                        bp_update(engine, &report.net, &inputs, &targets, cfg.alpha, cfg.weight_decay)?;
                }
            }
            sample_loss(engine, data, opts, report)?;
        }
        report.epochs_run = epoch + 1;
        if opts.epoch_metrics {
            report.epoch_train_loss.push(readout_mse(&report.net, data)?);
            report
                .epoch_train_accuracy
                .push(accuracy(&PredictionBatch::from_readout(&report.net, data)?));
        }
        if let Some(eval) = opts.eval {
            let acc = accuracy(&PredictionBatch::from_readout(&report.net, eval)?);
            report.eval_accuracy.push(acc);
            if best.map_or(true, |(_, b)| acc > b) {
                best = Some((epoch, acc));
                best_net = Some(report.net.clone());
                stale = 0;
            } else {
                stale += 1;
                if opts.patience > 0 && stale >= opts.patience {
                    break 'epochs;
                }
            }
        }
    }
    if let Some(n) = best_net {
        report.net = n;
        report.best_eval = best;
    }
    Ok(())
}

fn train_fullbatch(
    engine: &mut Engine,
    data: &Dataset,
    cfg: &ScheduleConfig,
    mode: Mode,
    opts: &TrainOptions,
    report: &mut TrainReport,
) -> Result<()> {
    match cfg.algorithm {
        Algorithm::Zil | Algorithm::Bp => {
            if mode != Mode::Supervised {
                return Err(PcnError::InvalidConfig(
                    "the zero-divergence and backprop schedules are supervised".into(),
                ));
            }
            let targets = data
                .targets()
                .ok_or_else(|| PcnError::InvalidConfig("supervised training needs labels".into()))?;
            for _ in 0..cfg.total_steps {
                report.net = match cfg.algorithm {
                    Algorithm::Zil => zil_update(engine, &report.net, data.inputs(), targets, cfg)?,
                    _ => bp_update(
                        engine,
                        &report.net,
                        data.inputs(),
                        targets,
                        cfg.alpha,
                        cfg.weight_decay,
                    )?,
                };
                sample_loss(engine, data, opts, report)?;
            }
            Ok(())
        }
        Algorithm::Pc | Algorithm::Ipc => train_fullbatch_settling(engine, data, cfg, mode, opts, report),
    }
}

fn train_fullbatch_settling(
    engine: &mut Engine,
    data: &Dataset,
    cfg: &ScheduleConfig,
    mode: Mode,
    opts: &TrainOptions,
    report: &mut TrainReport,
) -> Result<()> {
    let mut state = match mode {
        Mode::Generative => NetworkState::generative_init(&report.net, data.inputs())?,
        Mode::Supervised => {
            let targets = data
                .targets()
                .ok_or_else(|| PcnError::InvalidConfig("supervised training needs labels".into()))?;
            let mut s = NetworkState::feedforward_init(&report.net, data.inputs())?;
            s.clamp_output(&report.net, targets)?;
            s
        }
    };
    // Sliding window of the last eleven post-update energies; a full
    // window spans ten updates.
    let mut window: Vec<f64> = Vec::new();
    for _ in 0..cfg.total_steps {
        match cfg.algorithm {
            Algorithm::Ipc => {
                engine.run_step(&mut report.net, &mut state, &fused_spec(cfg))?;
            }
            _ => {
                let spec = infer_spec(cfg);
                for t in 0..cfg.t_steps {
                    engine.run_step(&mut report.net, &mut state, &spec)?;
                    if opts.record_energy && t + 1 < cfg.t_steps {
                        report.energy_trace.push(state.energy());
                    }
                }
                commit_all(engine, &mut report.net, &mut state, cfg)?;
            }
        }
        engine.ledger.weight_updates += 1;
        let energy = state.energy();
        if opts.record_energy {
            report.energy_trace.push(energy);
        }
        report.final_energy = Some(energy);
        sample_loss(engine, data, opts, report)?;
        if let Some(tol) = opts.plateau {
            window.push(energy);
            if window.len() > 11 {
                window.remove(0);
            }
            if window.len() == 11
                && (window[0] - window[10]).abs() <= tol * window[0].max(f64::MIN_POSITIVE)
            {
                break;
            }
        }
    }
    Ok(())
}

fn sample_loss(
    engine: &Engine,
    data: &Dataset,
    opts: &TrainOptions,
    report: &mut TrainReport,
) -> Result<()> {
    if opts.loss_every == 0 {
        return Ok(());
    }
    if engine.ledger.weight_updates % opts.loss_every as u64 == 0 {
        report
            .loss_trace
            .push((engine.ledger.smm_count, readout_mse(&report.net, data)?));
    }
    Ok(())
}
