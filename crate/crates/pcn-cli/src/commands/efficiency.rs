//! Training loss against the synchronous-matmul budget.
//!
//! Every arm — incremental, classic at each configured T, and backprop —
//! trains full-batch on the same data from the same initial weights, and
//! samples `(SMM count so far, readout loss)` after every weight update.
//! The arms' update budgets are derived from one shared SMM budget, so
//! the curves cover the same x-range: incremental spends 2 SMMs per
//! update, classic 2T, backprop `2L - 1`.
//!
//! Artifacts: `efficiency_<arm>_seed<seed>.csv` and a matching `.dat` per
//! arm (the arms sample different x positions, so they stay separate
//! files; gnuplot overlays them directly).

use std::time::Instant;

use pcn::model::Mode;
use pcn::schedules::{train, Algorithm, TrainOptions};

use crate::artifacts::{fmt_f64, write_csv, write_dat, Meta};
use crate::commands::{build_engine, build_net, check_network_against_data, ensure_out_dir};
use crate::config::{schedule_for, Resolved};
use crate::{CliError, Result};

/// One arm's loss curve for one seed.
#[derive(Debug, Clone)]
pub struct CurveRun {
    /// `ipc`, `pc_t<T>`, or `bp`.
    pub label: String,
    pub algorithm: Algorithm,
    pub t_steps: usize,
    pub seed: u64,
    /// `(SMMs so far, readout mean squared error)` after each update.
    pub points: Vec<(u64, f64)>,
    pub diverged: Option<String>,
}

impl CurveRun {
    /// The curve as a step function: the loss after the last update that
    /// fit within `budget`, or `None` before the first sample.
    pub fn loss_at(&self, budget: u64) -> Option<f64> {
        self.points.iter().take_while(|(smm, _)| *smm <= budget).last().map(|(_, l)| *l)
    }
}

#[derive(Debug, Clone, Default)]
pub struct EfficiencyOutcome {
    pub runs: Vec<CurveRun>,
}

fn arms(t_grid: &[usize], depth: usize, budget: u64) -> Vec<(String, Algorithm, usize, usize)> {
    let mut arms = vec![("ipc".to_string(), Algorithm::Ipc, 1, (budget / 2) as usize)];
    for &t in t_grid {
        arms.push((format!("pc_t{t}"), Algorithm::Pc, t, (budget / (2 * t as u64)) as usize));
    }
    let bp_cost = 2 * depth as u64 - 1;
    arms.push(("bp".to_string(), Algorithm::Bp, 1, (budget / bp_cost) as usize));
    arms
}

pub fn cmd_efficiency(rc: &Resolved) -> Result<EfficiencyOutcome> {
    let cfg = &rc.cfg;
    let spec = cfg.efficiency.as_ref().expect("validated");
    let network = cfg.network.as_ref().expect("validated");
    let ds = cfg.dataset.as_ref().expect("validated");
    crate::datasets::require_available(ds)?;
    let (loaded, _test) = crate::datasets::resolve_with_test(ds)?;
    check_network_against_data(network, loaded.train.feature_dim(), loaded.train.class_count())?;

    let depth = network.dims.len() - 1;
    let arms = arms(&spec.t_grid, depth, spec.smm_budget);
    if rc.dry_run {
        println!(
            "plan: efficiency on {} ({} samples, full-batch), budget {} SMMs",
            loaded.train.name,
            loaded.train.len(),
            spec.smm_budget
        );
        for (label, _, t, updates) in &arms {
            println!("plan: arm {label}: {updates} updates (T = {t})");
        }
        println!("plan: artifacts to {}", cfg.out_dir.display());
        return Ok(EfficiencyOutcome::default());
    }

    ensure_out_dir(cfg)?;
    let mut runs = Vec::new();
    for &seed in &cfg.seeds {
        for (label, algorithm, t, updates) in &arms {
            let mut cell_cfg =
                schedule_for(*algorithm, cfg.schedule.as_ref(), spec.overrides.get(algorithm.name()), seed);
            cell_cfg.t_steps = *t;
            cell_cfg.batch_size = None;
            cell_cfg.total_steps = *updates;
            let net = build_net(network, seed)?;
            let mut engine = build_engine(cfg);
            let opts = TrainOptions {
                loss_every: 1,
                plateau: None, // curves must reach the shared budget
                ..TrainOptions::default()
            };
            let start = Instant::now();
            let report =
                train(&mut engine, &net, &loaded.train, &cell_cfg, Mode::Supervised, &opts)?;
            let last = report.loss_trace.last().copied();
            eprintln!(
                "efficiency: {label} seed {seed}: {} updates to {} SMMs, loss {} ({:.1} s){}",
                report.updates,
                last.map(|(s, _)| s).unwrap_or(0),
                last.map(|(_, l)| format!("{l:.6}")).unwrap_or_else(|| "-".into()),
                start.elapsed().as_secs_f64(),
                report.diverged.as_deref().map(|d| format!(" [diverged: {d}]")).unwrap_or_default()
            );

            let rows: Vec<Vec<String>> = report
                .loss_trace
                .iter()
                .map(|(smm, loss)| vec![smm.to_string(), fmt_f64(*loss)])
                .collect();
            let meta = Meta { config_hash: &rc.hash, seed: Some(seed) };
            let columns = ["smm", "loss"];
            write_csv(
                &cfg.out_dir.join(format!("efficiency_{label}_seed{seed}.csv")),
                meta,
                &columns,
                &rows,
            )?;
            write_dat(
                &cfg.out_dir.join(format!("efficiency_{label}_seed{seed}.dat")),
                meta,
                &columns,
                &rows,
            )?;
            runs.push(CurveRun {
                label: label.clone(),
                algorithm: *algorithm,
                t_steps: *t,
                seed,
                points: report.loss_trace,
                diverged: report.diverged,
            });
        }
    }

    let outcome = EfficiencyOutcome { runs };
    let bad: Vec<String> = outcome
        .runs
        .iter()
        .filter(|r| r.diverged.is_some())
        .map(|r| format!("{} seed {}", r.label, r.seed))
        .collect();
    if !bad.is_empty() {
        return Err(CliError::Diverged(format!(
            "{} of {} curves diverged ({}); artifacts in {}",
            bad.len(),
            outcome.runs.len(),
            bad.join(", "),
            cfg.out_dir.display()
        )));
    }
    Ok(outcome)
}
