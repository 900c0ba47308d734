//! Generative energy traces.
//!
//! Clamps the data at layer 0 of a fresh network and lets the hierarchy
//! settle while learning, once with the incremental schedule and once per
//! configured T with the classic schedule, all under the same total
//! inference-iteration budget. The energy is recorded after every
//! inference iteration, so every arm's trace shares one x-axis: iteration
//! k means k value updates have happened, regardless of how many weight
//! commits the schedule fit in between.
//!
//! Artifacts: one `generate_<arm>_seed<seed>.csv` per arm plus a combined
//! `generate_traces_seed<seed>.dat` with one column per arm for gnuplot.

use std::time::Instant;

use pcn::model::Mode;
use pcn::schedules::{train, Algorithm, TrainOptions};

use crate::artifacts::{fmt_f64, write_csv, write_dat, Meta};
use crate::commands::{build_engine, build_net, check_network_against_data, ensure_out_dir};
use crate::config::{schedule_for, Resolved};
use crate::{CliError, Result};

/// One arm's trace for one seed.
#[derive(Debug, Clone)]
pub struct TraceRun {
    /// `ipc`, or `pc_t<T>`.
    pub label: String,
    pub algorithm: Algorithm,
    pub t_steps: usize,
    pub seed: u64,
    /// `energies[k]` is the energy after inference iteration `k + 1`.
    pub energies: Vec<f64>,
    pub diverged: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct GenerateOutcome {
    pub runs: Vec<TraceRun>,
}

/// The arms a generate config trains: incremental first, then classic at
/// each T.
fn arms(t_grid: &[usize]) -> Vec<(String, Algorithm, usize)> {
    let mut arms = vec![("ipc".to_string(), Algorithm::Ipc, 1)];
    for &t in t_grid {
        arms.push((format!("pc_t{t}"), Algorithm::Pc, t));
    }
    arms
}

pub fn cmd_generate(rc: &Resolved) -> Result<GenerateOutcome> {
    let cfg = &rc.cfg;
    let spec = cfg.generate.as_ref().expect("validated");
    let network = cfg.network.as_ref().expect("validated");
    let ds = cfg.dataset.as_ref().expect("validated");
    crate::datasets::require_available(ds)?;
    let loaded = crate::datasets::resolve(ds)?;
    check_network_against_data(network, loaded.train.feature_dim(), None)?;

    let arms = arms(&spec.t_grid);
    if rc.dry_run {
        println!(
            "plan: generate on {} ({} samples), network {:?} {}",
            loaded.train.name,
            loaded.train.len(),
            network.dims,
            network.activation
        );
        for (label, _, t) in &arms {
            let updates =
                if *t == 1 { spec.iterations } else { spec.iterations / t };
            println!("plan: arm {label}: {updates} updates x {t} inference steps");
        }
        println!("plan: artifacts to {}", cfg.out_dir.display());
        return Ok(GenerateOutcome::default());
    }

    ensure_out_dir(cfg)?;
    let mut runs = Vec::new();
    for &seed in &cfg.seeds {
        for (label, algorithm, t) in &arms {
            let mut cell_cfg = schedule_for(*algorithm, cfg.schedule.as_ref(), None, seed);
            cell_cfg.t_steps = *t;
            cell_cfg.batch_size = None;
            cell_cfg.total_steps =
                if *algorithm == Algorithm::Ipc { spec.iterations } else { spec.iterations / t };
            let net = build_net(network, seed)?;
            let mut engine = build_engine(cfg);
            let opts = TrainOptions {
                record_energy: true,
                plateau: None, // full traces; arms must share the x-axis
                ..TrainOptions::default()
            };
            let start = Instant::now();
            let report =
                train(&mut engine, &net, &loaded.train, &cell_cfg, Mode::Generative, &opts)?;
            eprintln!(
                "generate: {label} seed {seed}: {} iterations, final energy {:.6e} ({:.1} s){}",
                report.energy_trace.len(),
                report.final_energy.unwrap_or(f64::NAN),
                start.elapsed().as_secs_f64(),
                report.diverged.as_deref().map(|d| format!(" [diverged: {d}]")).unwrap_or_default()
            );

            let rows: Vec<Vec<String>> = report
                .energy_trace
                .iter()
                .enumerate()
                .map(|(i, e)| vec![(i + 1).to_string(), fmt_f64(*e)])
                .collect();
            write_csv(
                &cfg.out_dir.join(format!("generate_{label}_seed{seed}.csv")),
                Meta { config_hash: &rc.hash, seed: Some(seed) },
                &["iteration", "energy"],
                &rows,
            )?;
            runs.push(TraceRun {
                label: label.clone(),
                algorithm: *algorithm,
                t_steps: *t,
                seed,
                energies: report.energy_trace,
                diverged: report.diverged,
            });
        }

        // Combined per-seed table: one energy column per arm, rows padded
        // so shorter traces end in blank (nan) cells.
        let seed_runs: Vec<&TraceRun> = runs.iter().filter(|r| r.seed == seed).collect();
        let longest = seed_runs.iter().map(|r| r.energies.len()).max().unwrap_or(0);
        let mut columns = vec!["iteration".to_string()];
        columns.extend(seed_runs.iter().map(|r| r.label.clone()));
        let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
        let rows: Vec<Vec<String>> = (0..longest)
            .map(|i| {
                let mut row = vec![(i + 1).to_string()];
                for r in &seed_runs {
                    row.push(r.energies.get(i).map(|e| fmt_f64(*e)).unwrap_or_default());
                }
                row
            })
            .collect();
        write_dat(
            &cfg.out_dir.join(format!("generate_traces_seed{seed}.dat")),
            Meta { config_hash: &rc.hash, seed: Some(seed) },
            &column_refs,
            &rows,
        )?;
    }

    let outcome = GenerateOutcome { runs };
    let bad: Vec<String> = outcome
        .runs
        .iter()
        .filter(|r| r.diverged.is_some())
        .map(|r| format!("{} seed {}", r.label, r.seed))
        .collect();
    if !bad.is_empty() {
        return Err(CliError::Diverged(format!(
            "{} of {} traces diverged ({}); artifacts in {}",
            bad.len(),
            outcome.runs.len(),
            bad.join(", "),
            cfg.out_dir.display()
        )));
    }
    Ok(outcome)
}
