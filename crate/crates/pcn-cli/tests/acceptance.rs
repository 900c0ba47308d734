//! Acceptance sweep: the nine checks that gate a release.
//!
//! One test runs every criterion in order and prints exactly one
//! `PASS` / `FAIL` / `SKIP` line per criterion to the real stderr (so the
//! lines survive libtest's output capture). Criteria that need a
//! downloaded dataset print a `SKIP` line naming the fetch script instead
//! of failing when the files are absent.
//!
//!  1. update directions match central finite differences of the energy
//!  2. zero-divergence schedule reproduces backprop bit-for-bit (1e-10)
//!  3. matrix-product counts match the closed-form cost model
//!  4. serial and layer-parallel engines produce identical trajectories
//!  5. full-batch incremental energy descent is monotone
//!  6. desk-scale MNIST / FashionMNIST accuracy table
//!  7. loss-versus-compute and energy-versus-iteration dominance
//!  8. wall-clock update-ratio trend (informational, never gates)
//!  9. adaptive-ECE oracles and the calibration-under-shift study
//!
//! Tolerances are pinned next to each criterion; the desk-scale runs go
//! through the compiled binary with the shipped presets so this suite also
//! exercises the command-line surface end to end.
//!
//! `PCN_ACCEPTANCE_CRITERIA=1,2,5` reruns a comma-separated subset;
//! everything else prints a `SKIP` line naming the variable. Unset runs
//! all nine.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use pcn::data::synthetic_generative;
use pcn::engine::{count_audit, Engine, EngineKind};
use pcn::metrics::{ada_ece, PredictionBatch};
use pcn::model::{Mode, NetworkState, PcNetwork};
use pcn::numerics::{Activation, InitScheme, Matrix, Rng};
use pcn::schedules::{
    bp_update, inference_step, ipc_update, pc_update, train, weight_step, zil_update, Algorithm,
    ScheduleConfig, TrainOptions,
};
use pcn_cli::config::{load_config, Overrides};

// ---------------------------------------------------------------------------
// Pinned tolerances and budgets.

/// Central-difference step for the gradient oracles.
const FD_H: f64 = 1e-5;
/// Relative tolerance for gradient agreement.
const FD_REL_TOL: f64 = 1e-6;
/// Below this magnitude the relative comparison switches to absolute.
const FD_SMALL: f64 = 1e-4;
/// Per-entry tolerance for the zero-divergence-vs-backprop check.
const ZIL_TOL: f64 = 1e-10;
/// Rounding allowance for the monotone-energy check, relative to the
/// starting energy.
const ENERGY_SLACK: f64 = 1e-12;
/// Test-accuracy floor for each MNIST algorithm.
const MNIST_FLOOR: f64 = 0.975;
/// Wall-clock budget for the three MNIST trainings together.
const MNIST_BUDGET: Duration = Duration::from_secs(45 * 60);
/// Test-accuracy floor for FashionMNIST incremental training.
const FASHION_FLOOR: f64 = 0.87;
/// Wall-clock budget for the loss-versus-compute criterion.
const EFFICIENCY_BUDGET: Duration = Duration::from_secs(10 * 60);
/// Compute budgets below this many summed matrix multiplications are
/// warm-up noise and not compared.
const SHARED_BUDGET_FLOOR: u64 = 50;
/// Iterations before the generative energy comparison starts.
const GENERATIVE_FLOOR: usize = 100;
/// Absolute tolerance for the hand-computed adaptive-ECE oracles that
/// involve transcendental confidences.
const ECE_ORACLE_TOL: f64 = 1e-12;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

struct Line {
    id: u8,
    what: &'static str,
    verdict: Verdict,
    elapsed: Duration,
}

/// Print through the raw stderr handle: libtest's capture hooks the print
/// macros, not the file descriptor, and these lines must always be visible.
fn announce(text: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{text}");
}

fn render(line: &Line) -> String {
    let (tag, detail) = match &line.verdict {
        Verdict::Pass(d) => ("PASS", d),
        Verdict::Fail(d) => ("FAIL", d),
        Verdict::Skip(d) => ("SKIP", d),
    };
    format!(
        "{tag} criterion {} ({}): {} [{:.1} s]",
        line.id,
        line.what,
        detail,
        line.elapsed.as_secs_f64()
    )
}

// ---------------------------------------------------------------------------
// Shared plumbing.

fn workspace_data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn tmp_root() -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

fn idx_quartet_present(dir: &Path) -> bool {
    ["train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"]
        .iter()
        .all(|f| dir.join(f).is_file())
}

const FETCH_HINT: &str = "fetch it with scripts/fetch_data.sh or point PCN_DATA_DIR at it";

/// Run the compiled binary on a preset, returning combined output and the
/// elapsed wall time. A nonzero exit becomes an `Err` with the stderr tail.
fn run_pcn(subcommand: &str, config: &Path, out_dir: &Path) -> Result<Duration, String> {
    let start = Instant::now();
    let output = Command::new(env!("CARGO_BIN_EXE_pcn"))
        .arg(subcommand)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out_dir)
        .env("PCN_DATA_DIR", workspace_data_dir())
        .output()
        .map_err(|e| format!("cannot launch binary: {e}"))?;
    let elapsed = start.elapsed();
    if !output.status.success() {
        let err = String::from_utf8_lossy(&output.stderr);
        let tail: Vec<&str> = err.lines().rev().take(4).collect();
        return Err(format!(
            "`pcn {subcommand}` exited with {}: {}",
            output.status,
            tail.into_iter().rev().collect::<Vec<_>>().join(" | ")
        ));
    }
    Ok(elapsed)
}

/// Rows of a CSV artifact: comment and header lines stripped, cells split.
fn csv_rows(path: &Path) -> Result<Vec<Vec<String>>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect())
}

fn parse_cell(row: &[String], idx: usize, path: &Path) -> Result<f64, String> {
    row.get(idx)
        .ok_or_else(|| format!("{}: row too short: {row:?}", path.display()))?
        .parse::<f64>()
        .map_err(|e| format!("{}: bad number in {row:?}: {e}", path.display()))
}

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

// ---------------------------------------------------------------------------
// Criterion 1: gradient oracles.

fn random_case(depth: usize, activation: Activation, seed: u64) -> (PcNetwork, Vec<Matrix>, usize) {
    let mut rng = Rng::new(seed);
    let dims: Vec<usize> = (0..=depth).map(|_| 2 + (rng.next_u64() % 7) as usize).collect();
    let batch = 1 + (rng.next_u64() % 3) as usize;
    let net = PcNetwork::new(&dims, activation, &mut rng, InitScheme::UniformFanIn).unwrap();
    let values: Vec<Matrix> = dims
        .iter()
        .map(|&d| {
            Matrix::from_vec(d, batch, (0..d * batch).map(|_| rng.uniform(-1.5, 1.5)).collect())
                .unwrap()
        })
        .collect();
    (net, values, batch)
}

fn energy_of(net: &PcNetwork, values: &[Matrix]) -> f64 {
    NetworkState::from_values(net, values.to_vec(), vec![false; values.len()])
        .unwrap()
        .energy()
}

fn perturbed(m: &Matrix, r: usize, c: usize, delta: f64) -> Matrix {
    let mut data = m.as_slice().to_vec();
    data[r * m.cols() + c] += delta;
    Matrix::from_vec(m.rows(), m.cols(), data).unwrap()
}

/// Worst deviation between an analytic slope and its oracle, as the pair
/// (relative, absolute) with the relative part used only above FD_SMALL.
fn fd_mismatch(got: f64, want: f64) -> (f64, f64) {
    let denom = got.abs().max(want.abs());
    if denom > FD_SMALL {
        ((got - want).abs() / denom, 0.0)
    } else {
        (0.0, (got - want).abs())
    }
}

fn criterion_1() -> Verdict {
    let mut nets = 0usize;
    let mut worst_rel: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    for depth in 2..=5 {
        for activation in [Activation::Tanh, Activation::Identity] {
            for rep in 0..7 {
                let seed = (depth as u64) << 24 | (rep as u64) << 8 | u64::from(activation.code());
                let (net, values, batch) = random_case(depth, activation, seed);
                let state =
                    NetworkState::from_values(&net, values.clone(), vec![false; values.len()])
                        .unwrap();

                // Value direction against the finite difference in x.
                let gamma = 1e-3;
                let stepped = inference_step(&net, &state, gamma).unwrap();
                for l in 0..=depth {
                    for r in 0..values[l].rows() {
                        for c in 0..values[l].cols() {
                            let mut plus = values.clone();
                            let mut minus = values.clone();
                            plus[l] = perturbed(&values[l], r, c, FD_H);
                            minus[l] = perturbed(&values[l], r, c, -FD_H);
                            let fd =
                                (energy_of(&net, &plus) - energy_of(&net, &minus)) / (2.0 * FD_H);
                            let got =
                                (stepped.value(l).get(r, c) - state.value(l).get(r, c)) / gamma;
                            let (rel, abs) = fd_mismatch(got, -fd);
                            worst_rel = worst_rel.max(rel);
                            worst_abs = worst_abs.max(abs);
                        }
                    }
                }

                // Weight direction against the finite difference in theta.
                let alpha = 1e-3;
                let updated = weight_step(&net, &state, alpha, 0.0).unwrap();
                for l in 0..depth {
                    let (rows, cols) = net.weight(l).shape();
                    for r in 0..rows {
                        for c in 0..cols {
                            let mut plus = net.weights_cloned();
                            let mut minus = net.weights_cloned();
                            plus[l] = perturbed(net.weight(l), r, c, FD_H);
                            minus[l] = perturbed(net.weight(l), r, c, -FD_H);
                            let e_plus = energy_of(
                                &PcNetwork::from_weights(plus, activation).unwrap(),
                                &values,
                            );
                            let e_minus = energy_of(
                                &PcNetwork::from_weights(minus, activation).unwrap(),
                                &values,
                            );
                            let fd = (e_plus - e_minus) / (2.0 * FD_H);
                            // The commit averages over the batch; the energy
                            // sums over it.
                            let got = (updated.weight(l).get(r, c) - net.weight(l).get(r, c))
                                * batch as f64
                                / alpha;
                            let (rel, abs) = fd_mismatch(got, -fd);
                            worst_rel = worst_rel.max(rel);
                            worst_abs = worst_abs.max(abs);
                        }
                    }
                }
                nets += 1;
            }
        }
    }
    let detail = format!(
        "{nets} nets, worst relative {worst_rel:.2e} (tol {FD_REL_TOL:.0e}), \
         worst small-entry absolute {worst_abs:.2e} (tol 1e-9)"
    );
    if nets >= 50 && worst_rel <= FD_REL_TOL && worst_abs <= 1e-9 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

// ---------------------------------------------------------------------------
// Criterion 2: zero-divergence schedule vs backprop.

fn criterion_2() -> Verdict {
    let mut cfg = ScheduleConfig::for_algorithm(Algorithm::Zil);
    cfg.alpha = 0.05;
    let mut engine = Engine::serial();
    let mut triples = 0usize;
    let mut worst: f64 = 0.0;
    for depth in 2..=6 {
        for activation in [Activation::Tanh, Activation::Relu, Activation::Identity] {
            for rep in 0..7 {
                let seed =
                    (depth as u64) << 20 | (rep as u64) << 8 | u64::from(activation.code());
                let mut rng = Rng::new(seed);
                let dims: Vec<usize> =
                    (0..=depth).map(|_| 2 + (rng.next_u64() % 7) as usize).collect();
                let batch = 1 + (rng.next_u64() % 4) as usize;
                let net =
                    PcNetwork::new(&dims, activation, &mut rng, InitScheme::UniformFanIn).unwrap();
                let inputs = Matrix::from_vec(
                    dims[depth],
                    batch,
                    (0..dims[depth] * batch).map(|_| rng.uniform(-1.0, 1.0)).collect(),
                )
                .unwrap();
                let mut target_data = vec![0.0; dims[0] * batch];
                for b in 0..batch {
                    let class = (rng.next_u64() % dims[0] as u64) as usize;
                    target_data[class * batch + b] = 1.0;
                }
                let targets = Matrix::from_vec(dims[0], batch, target_data).unwrap();

                let zil = zil_update(&mut engine, &net, &inputs, &targets, &cfg).unwrap();
                let bp = bp_update(&mut engine, &net, &inputs, &targets, cfg.alpha, 0.0).unwrap();
                for l in 0..net.depth() {
                    worst = worst.max(zil.weight(l).sub(bp.weight(l)).unwrap().max_abs());
                }
                triples += 1;
            }
        }
    }
    let detail = format!("{triples} triples, worst per-entry gap {worst:.2e} (tol {ZIL_TOL:.0e})");
    if triples >= 100 && worst <= ZIL_TOL {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

// ---------------------------------------------------------------------------
// Criterion 3: matrix-product cost model.

fn criterion_3() -> Verdict {
    let depths: Vec<usize> = (2..=16).collect();
    let t_grid = [1usize, 8, 12, 16];
    let rows = match count_audit(&depths, &t_grid, 3, 17) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(format!("audit refused to run: {e}")),
    };
    let mut checked = 0usize;
    for row in &rows {
        // Re-derive the closed forms rather than trusting the library's own
        // prediction columns.
        let l = row.depth as f64;
        let expected_smm = match row.algorithm {
            Algorithm::Ipc => 2.0,
            Algorithm::Pc => 2.0 * row.t_steps as f64,
            Algorithm::Zil => 2.0 * (l - 1.0),
            Algorithm::Bp => 2.0 * l - 1.0,
        };
        if !row.pass || row.observed_smm != expected_smm {
            return Verdict::Fail(format!(
                "{} depth {} T {}: observed {} summed products per update, expected {expected_smm}",
                row.algorithm.name(),
                row.depth,
                row.t_steps,
                row.observed_smm
            ));
        }
        checked += 1;
    }
    // Structure of the table: incremental cost flat in depth, backprop
    // affine with slope two.
    let ipc: Vec<f64> = rows
        .iter()
        .filter(|r| r.algorithm == Algorithm::Ipc)
        .map(|r| r.observed_smm)
        .collect();
    if ipc.windows(2).any(|w| w[0] != w[1]) {
        return Verdict::Fail("incremental cost is not constant in depth".into());
    }
    let bp: Vec<f64> = rows
        .iter()
        .filter(|r| r.algorithm == Algorithm::Bp)
        .map(|r| r.observed_smm)
        .collect();
    if bp.windows(2).any(|w| w[1] - w[0] != 2.0) {
        return Verdict::Fail("backprop cost does not grow by two per layer".into());
    }
    Verdict::Pass(format!(
        "{checked} audit cells exact over depths 2..=16 and T in {t_grid:?}; \
         incremental flat at 2, backprop affine with slope 2"
    ))
}

// ---------------------------------------------------------------------------
// Criterion 4: engine equivalence.

fn criterion_4() -> Verdict {
    const STEPS: usize = 200;
    let dims = [3usize, 6, 5, 4];
    let mut compared = 0usize;
    for seed in [11u64, 22, 33] {
        let mut rng = Rng::new(seed);
        let net0 = PcNetwork::new(&dims, Activation::Tanh, &mut rng, InitScheme::UniformFanIn)
            .unwrap();
        let batch = 2;
        let inputs = Matrix::from_vec(
            dims[3],
            batch,
            (0..dims[3] * batch).map(|_| rng.uniform(-1.0, 1.0)).collect(),
        )
        .unwrap();
        let mut target_data = vec![0.0; dims[0] * batch];
        for b in 0..batch {
            target_data[((rng.next_u64() % dims[0] as u64) as usize) * batch + b] = 1.0;
        }
        let targets = Matrix::from_vec(dims[0], batch, target_data).unwrap();

        for algorithm in [Algorithm::Pc, Algorithm::Ipc, Algorithm::Zil, Algorithm::Bp] {
            let mut cfg = ScheduleConfig::for_algorithm(algorithm);
            // The zero-divergence schedule rejects any step size but one.
            cfg.gamma = if algorithm == Algorithm::Zil { 1.0 } else { 0.5 };
            cfg.alpha = 0.05;
            cfg.t_steps = 4;
            cfg.seed = seed;

            let mut serial = Engine::serial();
            let mut parallel = Engine::new(EngineKind::LayerParallel { workers: 3 });
            let mut net_s = net0.clone();
            let mut net_p = net0.clone();

            // Persistent settling state for the incremental schedule, the
            // regime where barrier timing would first show up.
            let mut state_s = NetworkState::feedforward_init(&net_s, &inputs).unwrap();
            state_s.clamp_output(&net_s, &targets).unwrap();
            let mut state_p = state_s.clone();

            for step in 0..STEPS {
                match algorithm {
                    Algorithm::Pc => {
                        let mut s = NetworkState::feedforward_init(&net_s, &inputs).unwrap();
                        s.clamp_output(&net_s, &targets).unwrap();
                        let mut p = NetworkState::feedforward_init(&net_p, &inputs).unwrap();
                        p.clamp_output(&net_p, &targets).unwrap();
                        net_s = pc_update(&mut serial, &net_s, &s, &cfg).unwrap().0;
                        net_p = pc_update(&mut parallel, &net_p, &p, &cfg).unwrap().0;
                    }
                    Algorithm::Ipc => {
                        let (n, s) = ipc_update(&mut serial, &net_s, &state_s, &cfg).unwrap();
                        net_s = n;
                        state_s = s;
                        let (n, s) = ipc_update(&mut parallel, &net_p, &state_p, &cfg).unwrap();
                        net_p = n;
                        state_p = s;
                    }
                    Algorithm::Zil => {
                        net_s = zil_update(&mut serial, &net_s, &inputs, &targets, &cfg).unwrap();
                        net_p = zil_update(&mut parallel, &net_p, &inputs, &targets, &cfg).unwrap();
                    }
                    Algorithm::Bp => {
                        net_s =
                            bp_update(&mut serial, &net_s, &inputs, &targets, cfg.alpha, 0.0)
                                .unwrap();
                        net_p =
                            bp_update(&mut parallel, &net_p, &inputs, &targets, cfg.alpha, 0.0)
                                .unwrap();
                    }
                }
                if net_s.to_checkpoint_bytes() != net_p.to_checkpoint_bytes() {
                    return Verdict::Fail(format!(
                        "{} seed {seed} step {step}: serial and parallel weights differ",
                        algorithm.name()
                    ));
                }
            }
            compared += 1;
        }
    }
    Verdict::Pass(format!(
        "{compared} (algorithm, seed) trajectories bit-identical across engines for {STEPS} updates"
    ))
}

// ---------------------------------------------------------------------------
// Criterion 5: monotone energy descent.

fn criterion_5() -> Verdict {
    let gen = match synthetic_generative(&[12, 8, 5], 16, 29) {
        Ok(g) => g,
        Err(e) => return Verdict::Fail(format!("teacher draw failed: {e}")),
    };
    let mut rng = Rng::new(31);
    let net =
        PcNetwork::new(&[12, 8, 5], Activation::Tanh, &mut rng, InitScheme::UniformFanIn).unwrap();
    let mut cfg = ScheduleConfig::for_algorithm(Algorithm::Ipc);
    cfg.gamma = 1e-3;
    cfg.alpha = 1e-3;
    cfg.batch_size = None;
    cfg.total_steps = 1000;
    let opts = TrainOptions { record_energy: true, plateau: None, ..TrainOptions::default() };
    let mut engine = Engine::serial();
    let report = match train(&mut engine, &net, &gen.data, &cfg, Mode::Generative, &opts) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(format!("training failed: {e}")),
    };
    let trace = &report.energy_trace;
    if trace.len() != 1000 {
        return Verdict::Fail(format!("expected 1000 recorded energies, got {}", trace.len()));
    }
    let slack = ENERGY_SLACK * trace[0].abs().max(1.0);
    let mut worst_rise = 0.0f64;
    for w in trace.windows(2) {
        worst_rise = worst_rise.max(w[1] - w[0]);
    }
    let detail = format!(
        "energy {:.3e} -> {:.3e} over 1000 steps, worst rise {worst_rise:.2e} \
         (rounding allowance {slack:.2e})",
        trace[0],
        trace[999]
    );
    if worst_rise <= slack {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

// ---------------------------------------------------------------------------
// Criterion 6: desk-scale accuracy table.

/// classify_summary.csv -> algorithm -> (completed, mean accuracy).
fn summary_means(out_dir: &Path) -> Result<Vec<(String, usize, f64)>, String> {
    let path = out_dir.join("classify_summary.csv");
    let mut out = Vec::new();
    for row in csv_rows(&path)? {
        let completed = row
            .get(1)
            .and_then(|c| c.parse::<usize>().ok())
            .ok_or_else(|| format!("bad completed count in {row:?}"))?;
        let mean = parse_cell(&row, 3, &path)?;
        out.push((row[0].clone(), completed, mean));
    }
    Ok(out)
}

fn mean_of(summaries: &[(String, usize, f64)], algorithm: &str) -> Option<f64> {
    summaries.iter().find(|(a, _, _)| a == algorithm).map(|(_, _, m)| *m)
}

fn criterion_6(tmp: &Path) -> (Verdict, Option<PathBuf>) {
    let mnist_dir = workspace_data_dir().join("mnist");
    if !idx_quartet_present(&mnist_dir) {
        return (
            Verdict::Skip(format!("MNIST not found under {}; {FETCH_HINT}", mnist_dir.display())),
            None,
        );
    }
    let classify_out = tmp.join("classify-mnist");
    let elapsed = match run_pcn("classify", &preset("classify_mnist.toml"), &classify_out) {
        Ok(t) => t,
        Err(e) => return (Verdict::Fail(e), None),
    };
    let summaries = match summary_means(&classify_out) {
        Ok(s) => s,
        Err(e) => return (Verdict::Fail(e), None),
    };
    let mut detail = String::new();
    let mut ok = true;
    for algorithm in ["ipc", "bp", "pc"] {
        match mean_of(&summaries, algorithm) {
            Some(m) => {
                let _ = write!(detail, "{algorithm} {m:.4} ");
                ok &= m >= MNIST_FLOOR;
            }
            None => return (Verdict::Fail(format!("no summary row for {algorithm}")), None),
        }
    }
    let _ = write!(
        detail,
        "(floor {MNIST_FLOOR}), trio took {:.0} s of {:.0} s budget",
        elapsed.as_secs_f64(),
        MNIST_BUDGET.as_secs_f64()
    );
    ok &= elapsed <= MNIST_BUDGET;

    // FashionMNIST half: three seeds, incremental floor plus the paired
    // mean comparison against classic settling.
    let fashion_dir = workspace_data_dir().join("fashion_mnist");
    if !idx_quartet_present(&fashion_dir) {
        let verdict = if ok {
            Verdict::Skip(format!(
                "MNIST half passed ({detail}); FashionMNIST not found under {}; {FETCH_HINT}",
                fashion_dir.display()
            ))
        } else {
            Verdict::Fail(detail)
        };
        return (verdict, Some(classify_out));
    }
    let fashion_out = tmp.join("classify-fashion");
    let fashion_elapsed = match run_pcn("classify", &preset("classify_fashion.toml"), &fashion_out)
    {
        Ok(t) => t,
        Err(e) => return (Verdict::Fail(e), Some(classify_out)),
    };
    let fashion = match summary_means(&fashion_out) {
        Ok(s) => s,
        Err(e) => return (Verdict::Fail(e), Some(classify_out)),
    };
    let (ipc_n, ipc_mean) = match fashion.iter().find(|(a, _, _)| a == "ipc") {
        Some((_, n, m)) => (*n, *m),
        None => return (Verdict::Fail("no fashion summary row for ipc".into()), Some(classify_out)),
    };
    let pc_mean = match mean_of(&fashion, "pc") {
        Some(m) => m,
        None => return (Verdict::Fail("no fashion summary row for pc".into()), Some(classify_out)),
    };
    let _ = write!(
        detail,
        "; fashion ipc {ipc_mean:.4} over {ipc_n} seeds vs pc {pc_mean:.4} \
         (floor {FASHION_FLOOR}), took {:.0} s",
        fashion_elapsed.as_secs_f64()
    );
    ok &= ipc_n == 3 && ipc_mean >= FASHION_FLOOR && ipc_mean >= pc_mean;
    let verdict = if ok { Verdict::Pass(detail) } else { Verdict::Fail(detail) };
    (verdict, Some(classify_out))
}

// ---------------------------------------------------------------------------
// Criterion 7: compute-for-loss dominance.

/// (smm, loss) step curve from an efficiency artifact.
fn load_curve(path: &Path) -> Result<Vec<(u64, f64)>, String> {
    let mut out = Vec::new();
    for row in csv_rows(path)? {
        let smm = row
            .first()
            .and_then(|c| c.parse::<u64>().ok())
            .ok_or_else(|| format!("bad compute count in {row:?}"))?;
        out.push((smm, parse_cell(&row, 1, path)?));
    }
    Ok(out)
}

fn step_value(curve: &[(u64, f64)], budget: u64) -> Option<f64> {
    curve.iter().take_while(|(s, _)| *s <= budget).last().map(|(_, l)| *l)
}

fn energies(path: &Path) -> Result<Vec<f64>, String> {
    csv_rows(path)?.iter().map(|row| parse_cell(row, 1, path)).collect()
}

fn criterion_7(tmp: &Path) -> Verdict {
    // Generative half runs on a synthetic teacher, so it never skips.
    let generate_out = tmp.join("generate-synthetic");
    let gen_elapsed = match run_pcn("generate", &preset("generate_synthetic.toml"), &generate_out) {
        Ok(t) => t,
        Err(e) => return Verdict::Fail(e),
    };
    let ipc_e = match energies(&generate_out.join("generate_ipc_seed1.csv")) {
        Ok(v) => v,
        Err(e) => return Verdict::Fail(e),
    };
    let pc16_e = match energies(&generate_out.join("generate_pc_t16_seed1.csv")) {
        Ok(v) => v,
        Err(e) => return Verdict::Fail(e),
    };
    let horizon = ipc_e.len().min(pc16_e.len());
    if horizon < GENERATIVE_FLOOR + 1 {
        return Verdict::Fail(format!("traces too short: {horizon} shared iterations"));
    }
    for n in GENERATIVE_FLOOR..horizon {
        if ipc_e[n] > pc16_e[n] {
            return Verdict::Fail(format!(
                "iteration {}: incremental energy {:.6e} above classic-T16 {:.6e}",
                n + 1,
                ipc_e[n],
                pc16_e[n]
            ));
        }
    }
    let mut detail = format!(
        "generative: incremental at or below classic-T16 from iteration {GENERATIVE_FLOOR} \
         to {horizon} ({:.0} s)",
        gen_elapsed.as_secs_f64()
    );

    // Loss-versus-compute half needs the FashionMNIST subset.
    let fashion_dir = workspace_data_dir().join("fashion_mnist");
    if !idx_quartet_present(&fashion_dir) {
        return Verdict::Skip(format!(
            "{detail}; FashionMNIST not found under {}; {FETCH_HINT}",
            fashion_dir.display()
        ));
    }
    let efficiency_out = tmp.join("efficiency-fashion");
    let eff_elapsed =
        match run_pcn("efficiency", &preset("efficiency_fashion.toml"), &efficiency_out) {
            Ok(t) => t,
            Err(e) => return Verdict::Fail(e),
        };
    let ipc_curve = match load_curve(&efficiency_out.join("efficiency_ipc_seed1.csv")) {
        Ok(c) => c,
        Err(e) => return Verdict::Fail(e),
    };
    let mut budgets_checked = 0usize;
    for t in [8usize, 12, 16] {
        let pc_curve =
            match load_curve(&efficiency_out.join(format!("efficiency_pc_t{t}_seed1.csv"))) {
                Ok(c) => c,
                Err(e) => return Verdict::Fail(e),
            };
        let last_shared = ipc_curve.last().unwrap().0.min(pc_curve.last().unwrap().0);
        for &(budget, pc_loss) in
            pc_curve.iter().filter(|(s, _)| *s >= SHARED_BUDGET_FLOOR && *s <= last_shared)
        {
            let ipc_loss = match step_value(&ipc_curve, budget) {
                Some(l) => l,
                None => continue,
            };
            if ipc_loss > pc_loss {
                return Verdict::Fail(format!(
                    "budget {budget}: incremental loss {ipc_loss:.6e} above classic-T{t} \
                     {pc_loss:.6e}"
                ));
            }
            budgets_checked += 1;
        }
    }
    let _ = write!(
        detail,
        "; efficiency: incremental dominates all classic arms at {budgets_checked} shared \
         budgets >= {SHARED_BUDGET_FLOOR} ({:.0} s of {:.0} s budget)",
        eff_elapsed.as_secs_f64(),
        EFFICIENCY_BUDGET.as_secs_f64()
    );
    if eff_elapsed <= EFFICIENCY_BUDGET && gen_elapsed <= EFFICIENCY_BUDGET {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

// ---------------------------------------------------------------------------
// Criterion 8: wall-clock trend (informational).

fn criterion_8(tmp: &Path) -> Verdict {
    let out_dir = tmp.join("bench-wallclock");
    if let Err(e) = run_pcn("bench", &preset("bench_wallclock.toml"), &out_dir) {
        return Verdict::Fail(e);
    }
    let path = out_dir.join("bench_wallclock.csv");
    let rows = match csv_rows(&path) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(e),
    };
    // Deepest configured depth, parallel schedule: report the ratio per width.
    let mut deepest = 0usize;
    for row in &rows {
        if row[0] == "ipc-parallel" {
            deepest = deepest.max(row[1].parse::<usize>().unwrap_or(0));
        }
    }
    let mut pairs = Vec::new();
    for row in &rows {
        if row[0] == "ipc-parallel" && row[1] == deepest.to_string() {
            let width: usize = match row[2].parse() {
                Ok(w) => w,
                Err(_) => continue,
            };
            if let Ok(ratio) = parse_cell(row, 6, &path) {
                pairs.push((width, ratio));
            }
        }
    }
    pairs.sort_by_key(|(w, _)| *w);
    let monotone = pairs.windows(2).all(|w| w[1].1 < w[0].1);
    let crossed = pairs.iter().any(|(_, r)| *r < 1.0);
    let listing: Vec<String> =
        pairs.iter().map(|(w, r)| format!("{w}->{r:.2}")).collect();
    // Never gates: the shape of this curve is a property of the host's
    // core count, which a one-core container cannot reproduce.
    Verdict::Pass(format!(
        "informational, never gates: depth-{deepest} update-time ratio vs backprop by width \
         {{{}}}; monotone decrease: {monotone}, crosses 1.0: {crossed}",
        listing.join(", ")
    ))
}

// ---------------------------------------------------------------------------
// Criterion 9: calibration oracles and the shift study.

/// Hand-computed adaptive-ECE cases; returns an error description on the
/// first mismatch.
fn ece_oracles() -> Result<(), String> {
    // All-equal scores give every sample confidence exactly one half, and
    // the argmax tie resolves to class zero. Two bins of two samples, each
    // half right: both gaps are zero.
    let scores = Matrix::from_vec(2, 4, vec![0.0; 8]).unwrap();
    let batch = PredictionBatch::new(scores, vec![0, 1, 0, 1]).unwrap();
    let report = ada_ece(&batch, 2).map_err(|e| e.to_string())?;
    if report.ada_ece != 0.0 {
        return Err(format!("balanced half-confidence case: got {}, want 0", report.ada_ece));
    }

    // Three equal-score samples, one bin: accuracy 2/3, confidence 1/2.
    let scores = Matrix::from_vec(2, 3, vec![0.0; 6]).unwrap();
    let batch = PredictionBatch::new(scores, vec![0, 0, 1]).unwrap();
    let report = ada_ece(&batch, 1).map_err(|e| e.to_string())?;
    let want = 2.0 / 3.0 - 0.5;
    if report.ada_ece != want {
        return Err(format!("single-bin case: got {}, want {want}", report.ada_ece));
    }

    // Mixed confidences: two samples at confidence 3/4 (one right, one
    // wrong), two at exactly 1/2 (one right, one wrong). Sorted bins:
    // [1/2, 1/2] gap 0, [3/4, 3/4] gap 1/4 -> AdaECE = 1/8.
    let a = 3.0f64.ln();
    let scores =
        Matrix::from_vec(2, 4, vec![a, 0.0, 0.0, 0.0, 0.0, a, 0.0, 0.0]).unwrap();
    let batch = PredictionBatch::new(scores, vec![0, 0, 0, 1]).unwrap();
    let report = ada_ece(&batch, 2).map_err(|e| e.to_string())?;
    if (report.ada_ece - 0.125).abs() > ECE_ORACLE_TOL {
        return Err(format!(
            "mixed-confidence case: got {}, want 0.125 within {ECE_ORACLE_TOL:.0e}",
            report.ada_ece
        ));
    }
    Ok(())
}

fn criterion_9(tmp: &Path, classify_out: Option<&Path>) -> Verdict {
    if let Err(e) = ece_oracles() {
        return Verdict::Fail(format!("adaptive-ECE oracle: {e}"));
    }
    let oracle_note = "adaptive-ECE oracles exact";

    let Some(classify_out) = classify_out else {
        return Verdict::Skip(format!(
            "{oracle_note}; shift study needs the MNIST checkpoints from criterion 6; {FETCH_HINT}"
        ));
    };

    // Point the shipped preset at the checkpoints criterion 6 just wrote.
    let resolved = match load_config(&preset("calibrate_mnist.toml"), &Overrides::default()) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(format!("calibrate preset: {e}")),
    };
    let mut cfg = resolved.cfg;
    cfg.calibrate.as_mut().expect("calibrate table").checkpoints = classify_out.to_path_buf();
    let patched = tmp.join("calibrate_mnist_patched.toml");
    let body = match toml::to_string(&cfg) {
        Ok(b) => b,
        Err(e) => return Verdict::Fail(format!("cannot serialize patched preset: {e}")),
    };
    if let Err(e) = fs::write(&patched, body) {
        return Verdict::Fail(format!("cannot write patched preset: {e}"));
    }
    let calibrate_out = tmp.join("calibrate-mnist");
    let elapsed = match run_pcn("calibrate", &patched, &calibrate_out) {
        Ok(t) => t,
        Err(e) => return Verdict::Fail(e),
    };

    // Clean rows must reproduce the classification test accuracy exactly:
    // identity corruption feeds the checkpoint the untouched test set.
    let cells_path = classify_out.join("classify_cells.csv");
    let cells = match csv_rows(&cells_path) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(e),
    };
    for algorithm in ["bp", "ipc"] {
        let classify_acc = match cells
            .iter()
            .find(|r| r[0] == algorithm && r[1] == "1")
            .map(|r| parse_cell(r, 2, &cells_path))
        {
            Some(Ok(a)) => a,
            _ => return Verdict::Fail(format!("no classify cell for {algorithm} seed 1")),
        };
        let table_path = calibrate_out.join(format!("calibrate_{algorithm}_seed1.csv"));
        let table = match csv_rows(&table_path) {
            Ok(r) => r,
            Err(e) => return Verdict::Fail(e),
        };
        let mut clean_rows = 0usize;
        for row in table.iter().filter(|r| r[1] == "0") {
            let acc = match parse_cell(row, 3, &table_path) {
                Ok(a) => a,
                Err(e) => return Verdict::Fail(e),
            };
            if acc != classify_acc {
                return Verdict::Fail(format!(
                    "{algorithm} clean-data row ({}) accuracy {acc} differs from classification \
                     run {classify_acc}",
                    row[0]
                ));
            }
            clean_rows += 1;
        }
        if clean_rows == 0 {
            return Verdict::Fail(format!("no clean-data rows for {algorithm}"));
        }
    }

    // Paired table: medians over the corrupted cells, soft direction check.
    let paired_path = calibrate_out.join("calibrate_paired.csv");
    let paired = match csv_rows(&paired_path) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(e),
    };
    // Columns: corruption, level, bp_accuracy_median, bp_ada_ece_median,
    // ipc_accuracy_median, ipc_ada_ece_median (preset algorithm order).
    let mut bp_ece = Vec::new();
    let mut ipc_ece = Vec::new();
    for row in paired.iter().filter(|r| r[1] != "0") {
        match (parse_cell(row, 3, &paired_path), parse_cell(row, 5, &paired_path)) {
            (Ok(b), Ok(i)) => {
                bp_ece.push(b);
                ipc_ece.push(i);
            }
            _ => return Verdict::Fail(format!("unparseable paired row {row:?}")),
        }
    }
    if bp_ece.is_empty() {
        return Verdict::Fail("paired table has no corrupted cells".into());
    }
    let corrupted_cells = bp_ece.len();
    let bp_median = median(&mut bp_ece);
    let ipc_median = median(&mut ipc_ece);
    let mut detail = format!(
        "{oracle_note}; clean rows reproduce test accuracy exactly; \
         {corrupted_cells} corrupted cells, median AdaECE incremental {ipc_median:.4} vs \
         backprop {bp_median:.4} ({:.0} s)",
        elapsed.as_secs_f64()
    );
    if ipc_median > bp_median {
        // Soft expectation from the replicated study: warn, never gate.
        let _ = write!(
            detail,
            " — WARNING: incremental calibration is not better here (soft check, not gating)"
        );
    }
    Verdict::Pass(detail)
}

// ---------------------------------------------------------------------------

#[test]
fn acceptance_criteria() {
    let tmp = tmp_root();
    if tmp.exists() {
        fs::remove_dir_all(&tmp).expect("clear acceptance scratch dir");
    }
    fs::create_dir_all(&tmp).expect("create acceptance scratch dir");

    let mut lines: Vec<Line> = Vec::new();
    let mut classify_out: Option<PathBuf> = None;

    let plan: Vec<(u8, &'static str)> = vec![
        (1, "gradient oracles"),
        (2, "zero-divergence vs backprop"),
        (3, "cost-model audit"),
        (4, "engine equivalence"),
        (5, "monotone energy"),
        (6, "accuracy table"),
        (7, "compute-for-loss"),
        (8, "wall-clock trend"),
        (9, "calibration"),
    ];
    let subset: Option<Vec<u8>> = std::env::var("PCN_ACCEPTANCE_CRITERIA")
        .ok()
        .map(|v| v.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    for (id, what) in plan {
        let start = Instant::now();
        if let Some(only) = &subset {
            if !only.contains(&id) {
                let line = Line {
                    id,
                    what,
                    verdict: Verdict::Skip("excluded by PCN_ACCEPTANCE_CRITERIA".into()),
                    elapsed: start.elapsed(),
                };
                announce(&render(&line));
                lines.push(line);
                continue;
            }
        }
        let verdict = match id {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(),
            4 => criterion_4(),
            5 => criterion_5(),
            6 => {
                let (v, dir) = criterion_6(&tmp);
                classify_out = dir;
                v
            }
            7 => criterion_7(&tmp),
            8 => criterion_8(&tmp),
            9 => criterion_9(&tmp, classify_out.as_deref()),
            _ => unreachable!(),
        };
        let line = Line { id, what, verdict, elapsed: start.elapsed() };
        announce(&render(&line));
        lines.push(line);
    }

    let failures: Vec<String> = lines
        .iter()
        .filter(|l| matches!(l.verdict, Verdict::Fail(_)))
        .map(render)
        .collect();
    assert!(failures.is_empty(), "acceptance failures:\n{}", failures.join("\n"));
}
