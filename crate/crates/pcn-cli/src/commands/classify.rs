//! Classification accuracy grid.
//!
//! Trains one network per (algorithm, seed) cell, evaluates on the test
//! split, and writes: a per-cell held-out accuracy trace
//! (`classify_<algorithm>_seed<seed>_epochs.csv`), the flat cell table
//! (`classify_cells.csv`), the per-algorithm mean ± std summary
//! (`classify_summary.csv`), and — unless disabled — a
//! `checkpoint_<algorithm>_seed<seed>.pcnw` snapshot of each cell's best
//! network for the calibration study to pick up.
//!
//! Networks are initialized from the seed alone, so every algorithm in
//! the grid starts a given seed's cell from identical weights; the data
//! (subsets, holdout split, shuffles) is keyed separately. A diverging
//! cell is recorded in the artifacts and the remaining cells still run.

use std::path::PathBuf;
use std::time::Instant;

use pcn::metrics::{accuracy, PredictionBatch};
use pcn::model::Mode;
use pcn::schedules::{train, Algorithm, TrainOptions};

use crate::artifacts::{fmt_f64, write_csv, Meta};
use crate::commands::{build_engine, build_net, check_network_against_data, ensure_out_dir, mean_std};
use crate::config::{parse_algorithms, schedule_for, Resolved};
use crate::{CliError, Result};

/// One grid cell's outcome.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Test accuracy of the cell's best network; `None` when it diverged.
    pub test_accuracy: Option<f64>,
    /// 1-based epoch of the best held-out accuracy, when a holdout ran.
    pub best_epoch: Option<usize>,
    pub epochs_run: usize,
    pub updates: u64,
    pub mm: u64,
    pub smm: u64,
    pub diverged: Option<String>,
    pub checkpoint: Option<PathBuf>,
}

/// Per-algorithm aggregate over the seeds that completed.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub completed: usize,
    pub diverged: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ClassifyOutcome {
    pub cells: Vec<CellResult>,
    pub summary: Vec<SummaryRow>,
}

pub fn cmd_classify(rc: &Resolved) -> Result<ClassifyOutcome> {
    let cfg = &rc.cfg;
    let spec = cfg.classify.as_ref().expect("validated");
    let network = cfg.network.as_ref().expect("validated");
    let algorithms = parse_algorithms(&spec.algorithms)?;
    let ds = cfg.dataset.as_ref().expect("validated");
    crate::datasets::require_available(ds)?;
    let (loaded, test) = crate::datasets::resolve_with_test(ds)?;
    check_network_against_data(network, loaded.train.feature_dim(), loaded.train.class_count())?;

    if rc.dry_run {
        println!("plan: classify on {} ({} train", loaded.train.name, loaded.train.len());
        if let Some(eval) = &loaded.eval {
            println!("      + {} held out for early stopping", eval.len());
        }
        println!("      / {} test), network {:?} {}", test.len(), network.dims, network.activation);
        for &a in &algorithms {
            for &seed in &cfg.seeds {
                let cell = schedule_for(a, cfg.schedule.as_ref(), spec.overrides.get(a.name()), seed);
                println!(
                    "plan: cell {} seed {seed}: gamma {} alpha {} t {} batch {:?} epochs {}",
                    a.name(),
                    cell.gamma,
                    cell.alpha,
                    cell.t_steps,
                    cell.batch_size,
                    cell.epochs
                );
            }
        }
        println!("plan: artifacts to {}", cfg.out_dir.display());
        return Ok(ClassifyOutcome::default());
    }

    ensure_out_dir(cfg)?;
    let mut cells = Vec::new();
    for &a in &algorithms {
        for &seed in &cfg.seeds {
            let cell_cfg =
                schedule_for(a, cfg.schedule.as_ref(), spec.overrides.get(a.name()), seed);
            let net = build_net(network, seed)?;
            let mut engine = build_engine(cfg);
            let opts = TrainOptions {
                eval: loaded.eval.as_ref(),
                patience: spec.patience,
                ..TrainOptions::default()
            };
            eprintln!("classify: {} seed {seed} ...", a.name());
            let start = Instant::now();
            let report = train(&mut engine, &net, &loaded.train, &cell_cfg, Mode::Supervised, &opts)?;
            let secs = start.elapsed().as_secs_f64();

            let mut cell = CellResult {
                algorithm: a,
                seed,
                test_accuracy: None,
                best_epoch: report.best_eval.map(|(e, _)| e + 1),
                epochs_run: report.epochs_run,
                updates: report.updates,
                mm: report.ledger.mm_count,
                smm: report.ledger.smm_count,
                diverged: report.diverged.clone(),
                checkpoint: None,
            };
            match &report.diverged {
                Some(why) => {
                    eprintln!("classify: {} seed {seed} diverged: {why}", a.name());
                }
                None => {
                    let acc = accuracy(&PredictionBatch::from_readout(&report.net, &test)?);
                    cell.test_accuracy = Some(acc);
                    if spec.checkpoints {
                        let path = cfg
                            .out_dir
                            .join(format!("checkpoint_{}_seed{seed}.pcnw", a.name()));
                        report.net.save(&path)?;
                        cell.checkpoint = Some(path);
                    }
                    eprintln!(
                        "classify: {} seed {seed}: test accuracy {acc:.4} ({secs:.0} s, {} updates)",
                        a.name(),
                        report.updates
                    );
                }
            }

            let epoch_rows: Vec<Vec<String>> = report
                .eval_accuracy
                .iter()
                .enumerate()
                .map(|(i, acc)| vec![(i + 1).to_string(), fmt_f64(*acc)])
                .collect();
            write_csv(
                &cfg.out_dir.join(format!("classify_{}_seed{seed}_epochs.csv", a.name())),
                Meta { config_hash: &rc.hash, seed: Some(seed) },
                &["epoch", "holdout_accuracy"],
                &epoch_rows,
            )?;
            cells.push(cell);
        }
    }

    let cell_rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            vec![
                c.algorithm.name().to_string(),
                c.seed.to_string(),
                c.test_accuracy.map(fmt_f64).unwrap_or_default(),
                c.best_epoch.map(|e| e.to_string()).unwrap_or_default(),
                c.epochs_run.to_string(),
                c.updates.to_string(),
                c.mm.to_string(),
                c.smm.to_string(),
                c.diverged.is_some().to_string(),
            ]
        })
        .collect();
    write_csv(
        &cfg.out_dir.join("classify_cells.csv"),
        Meta { config_hash: &rc.hash, seed: None },
        &[
            "algorithm",
            "seed",
            "test_accuracy",
            "best_epoch",
            "epochs_run",
            "updates",
            "mm",
            "smm",
            "diverged",
        ],
        &cell_rows,
    )?;

    let mut summary = Vec::new();
    for &a in &algorithms {
        let accs: Vec<f64> =
            cells.iter().filter(|c| c.algorithm == a).filter_map(|c| c.test_accuracy).collect();
        let diverged = cells.iter().filter(|c| c.algorithm == a && c.diverged.is_some()).count();
        let (mean, std) = mean_std(&accs);
        let min = accs.iter().copied().fold(f64::NAN, f64::min);
        let max = accs.iter().copied().fold(f64::NAN, f64::max);
        println!(
            "classify {}: test accuracy {:.4} +/- {:.4} over {} seed(s){}",
            a.name(),
            mean,
            std,
            accs.len(),
            if diverged > 0 { format!(", {diverged} diverged") } else { String::new() }
        );
        summary.push(SummaryRow { algorithm: a, completed: accs.len(), diverged, mean, std, min, max });
    }
    let summary_rows: Vec<Vec<String>> = summary
        .iter()
        .map(|s| {
            vec![
                s.algorithm.name().to_string(),
                s.completed.to_string(),
                s.diverged.to_string(),
                fmt_f64(s.mean),
                fmt_f64(s.std),
                fmt_f64(s.min),
                fmt_f64(s.max),
            ]
        })
        .collect();
    write_csv(
        &cfg.out_dir.join("classify_summary.csv"),
        Meta { config_hash: &rc.hash, seed: None },
        &["algorithm", "completed", "diverged", "mean_accuracy", "std_accuracy", "min", "max"],
        &summary_rows,
    )?;

    let outcome = ClassifyOutcome { cells, summary };
    let bad: Vec<String> = outcome
        .cells
        .iter()
        .filter(|c| c.diverged.is_some())
        .map(|c| format!("{} seed {}", c.algorithm.name(), c.seed))
        .collect();
    if !bad.is_empty() {
        return Err(CliError::Diverged(format!(
            "{} of {} cells diverged ({}); artifacts in {}",
            bad.len(),
            outcome.cells.len(),
            bad.join(", "),
            cfg.out_dir.display()
        )));
    }
    Ok(outcome)
}
