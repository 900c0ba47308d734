//! Operation-count audits and wall-clock benchmarks.
//!
//! The `bench-smm` kind drives the engine's audit over a depth × T grid
//! and writes `bench_smm.csv`; any mismatch between predicted and observed
//! ledger totals fails the command with the audit exit code — after the
//! full table is on disk. Two structural restatements are checked along
//! the way: the incremental schedule's per-update SMM count is the same
//! constant at every depth, and backprop's grows by exactly 2 per layer.
//!
//! The `bench-wallclock` kind sweeps per-update wall time over depth ×
//! width and writes `bench_wallclock.csv` — the one artifact family whose
//! values are measurements, so reruns are *not* byte-identical. The
//! incremental-versus-backprop time ratio at the deepest setting is
//! summarized on stdout as an informational trend; absolute numbers are
//! hardware-bound.

use pcn::engine::{bench_update_ratio, count_audit, AuditRow, BenchRow};

use crate::artifacts::{fmt_f64, write_csv, Meta};
use crate::commands::ensure_out_dir;
use crate::config::{ExperimentKind, Resolved};
use crate::{CliError, Result};

#[derive(Debug, Clone, Default)]
pub struct BenchOutcome {
    pub audit: Vec<AuditRow>,
    pub wallclock: Vec<BenchRow>,
    /// Whether the parallel-incremental/backprop time ratio decreases
    /// monotonically with width at the deepest benchmarked depth.
    pub ratio_trend_monotone: Option<bool>,
}

pub fn cmd_bench(rc: &Resolved) -> Result<BenchOutcome> {
    let cfg = &rc.cfg;
    let spec = cfg.bench.as_ref().expect("validated");
    let seed = cfg.seeds[0];
    match cfg.kind {
        ExperimentKind::BenchSmm => {
            if rc.dry_run {
                println!(
                    "plan: audit {} depth(s) x {} T value(s), {} updates per cell",
                    spec.depths.len(),
                    spec.t_grid.len(),
                    spec.updates
                );
                println!("plan: artifacts to {}", cfg.out_dir.display());
                return Ok(BenchOutcome::default());
            }
            ensure_out_dir(cfg)?;
            let audit = count_audit(&spec.depths, &spec.t_grid, spec.updates, seed)?;
            let rows: Vec<Vec<String>> = audit
                .iter()
                .map(|r| {
                    vec![
                        r.algorithm.name().to_string(),
                        r.depth.to_string(),
                        r.t_steps.to_string(),
                        r.updates.to_string(),
                        r.predicted_mm.to_string(),
                        r.predicted_smm.to_string(),
                        fmt_f64(r.observed_mm),
                        fmt_f64(r.observed_smm),
                        r.pass.to_string(),
                    ]
                })
                .collect();
            write_csv(
                &cfg.out_dir.join("bench_smm.csv"),
                Meta { config_hash: &rc.hash, seed: Some(seed) },
                &[
                    "algorithm",
                    "depth",
                    "t_steps",
                    "updates",
                    "predicted_mm",
                    "predicted_smm",
                    "observed_mm",
                    "observed_smm",
                    "pass",
                ],
                &rows,
            )?;

            report_restatements(&audit);
            let failures = audit.iter().filter(|r| !r.pass).count();
            println!(
                "audit: {} cells, {} mismatch(es); table in {}",
                audit.len(),
                failures,
                cfg.out_dir.display()
            );
            if failures > 0 {
                return Err(CliError::Audit(format!(
                    "{failures} of {} audit cells mismatched; see {}",
                    audit.len(),
                    cfg.out_dir.join("bench_smm.csv").display()
                )));
            }
            Ok(BenchOutcome { audit, wallclock: Vec::new(), ratio_trend_monotone: None })
        }
        ExperimentKind::BenchWallclock => {
            if rc.dry_run {
                println!(
                    "plan: time {} depth(s) x {} width(s), {} repeat(s), {} worker(s)",
                    spec.depths.len(),
                    spec.widths.len(),
                    spec.repeats,
                    cfg.workers
                );
                println!("plan: artifacts to {}", cfg.out_dir.display());
                return Ok(BenchOutcome::default());
            }
            if spec.repeats == 1 {
                eprintln!(
                    "warning: repeats = 1 gives a single-sample median; timings will be noisy"
                );
            }
            ensure_out_dir(cfg)?;
            let wallclock =
                bench_update_ratio(&spec.depths, &spec.widths, cfg.workers, spec.repeats, seed)?;
            let rows: Vec<Vec<String>> = wallclock
                .iter()
                .map(|r| {
                    vec![
                        r.schedule.clone(),
                        r.depth.to_string(),
                        r.width.to_string(),
                        r.workers.to_string(),
                        r.median_ns_per_update.to_string(),
                        fmt_f64(r.smm_per_update),
                        fmt_f64(r.ratio_vs_bp),
                    ]
                })
                .collect();
            write_csv(
                &cfg.out_dir.join("bench_wallclock.csv"),
                Meta { config_hash: &rc.hash, seed: Some(seed) },
                &[
                    "schedule",
                    "depth",
                    "width",
                    "workers",
                    "median_ns_per_update",
                    "smm_per_update",
                    "ratio_vs_bp",
                ],
                &rows,
            )?;

            let trend = ratio_trend(&wallclock);
            if let Some((depth, ref ratios, monotone)) = trend {
                let pretty: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
                println!(
                    "trend: parallel-incremental/backprop time ratio at depth {depth} across \
                     widths: [{}] — {} (informational; absolute values are hardware-bound)",
                    pretty.join(", "),
                    if monotone { "monotonically decreasing" } else { "not monotone" }
                );
            }
            Ok(BenchOutcome {
                audit: Vec::new(),
                wallclock,
                ratio_trend_monotone: trend.map(|(_, _, m)| m),
            })
        }
        _ => unreachable!("cmd_bench is only dispatched for bench kinds"),
    }
}

fn report_restatements(audit: &[AuditRow]) {
    let ipc: Vec<f64> = audit
        .iter()
        .filter(|r| r.algorithm == pcn::schedules::Algorithm::Ipc)
        .map(|r| r.observed_smm)
        .collect();
    let constant = ipc.windows(2).all(|w| w[0] == w[1]);
    if let Some(first) = ipc.first() {
        println!(
            "audit: incremental per-update SMMs {} across depths (value {first})",
            if constant { "constant" } else { "NOT constant" }
        );
    }
    let mut bp: Vec<(usize, f64)> = audit
        .iter()
        .filter(|r| r.algorithm == pcn::schedules::Algorithm::Bp)
        .map(|r| (r.depth, r.observed_smm))
        .collect();
    bp.sort_by_key(|&(d, _)| d);
    bp.dedup_by_key(|&mut (d, _)| d);
    let slope_two = bp
        .windows(2)
        .all(|w| (w[1].1 - w[0].1) == 2.0 * (w[1].0 - w[0].0) as f64);
    if bp.len() > 1 {
        println!(
            "audit: backprop per-update SMMs grow by {} per layer of depth",
            if slope_two { "exactly 2" } else { "NOT 2" }
        );
    }
}

/// Parallel-incremental ratio across widths at the deepest depth, and
/// whether it decreases monotonically.
fn ratio_trend(rows: &[BenchRow]) -> Option<(usize, Vec<f64>, bool)> {
    let depth = rows.iter().map(|r| r.depth).max()?;
    let mut at_depth: Vec<(usize, f64)> = rows
        .iter()
        .filter(|r| r.depth == depth && r.schedule == "ipc-parallel")
        .map(|r| (r.width, r.ratio_vs_bp))
        .collect();
    at_depth.sort_by_key(|&(w, _)| w);
    if at_depth.len() < 2 {
        return None;
    }
    let ratios: Vec<f64> = at_depth.iter().map(|&(_, r)| r).collect();
    let monotone = ratios.windows(2).all(|w| w[1] < w[0]);
    Some((depth, ratios, monotone))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(schedule: &str, depth: usize, width: usize, ratio: f64) -> BenchRow {
        BenchRow {
            schedule: schedule.into(),
            depth,
            width,
            workers: 2,
            median_ns_per_update: 1,
            smm_per_update: 2.0,
            ratio_vs_bp: ratio,
        }
    }

    #[test]
    fn trend_looks_at_parallel_rows_of_the_deepest_depth() {
        let rows = vec![
            row("ipc-parallel", 4, 8, 0.5),
            row("ipc-parallel", 8, 8, 1.4),
            row("ipc-parallel", 8, 16, 1.1),
            row("ipc-parallel", 8, 32, 0.9),
            row("ipc-serial", 8, 64, 5.0), // ignored: wrong schedule
        ];
        let (depth, ratios, monotone) = ratio_trend(&rows).unwrap();
        assert_eq!(depth, 8);
        assert_eq!(ratios, vec![1.4, 1.1, 0.9]);
        assert!(monotone);

        let rows = vec![row("ipc-parallel", 8, 8, 1.0), row("ipc-parallel", 8, 16, 1.2)];
        assert_eq!(ratio_trend(&rows).unwrap().2, false);
    }
}
