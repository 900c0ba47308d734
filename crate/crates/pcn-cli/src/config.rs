//! Versioned experiment configuration.
//!
//! Experiments are described by a single TOML document with a `version`
//! field, an experiment `kind`, and one table per concern: `[dataset]`,
//! `[network]`, `[schedule]`, and a kind-specific table such as
//! `[classify]`. Unknown keys are rejected, the schema version must match
//! exactly, and every cross-field constraint that can be checked without
//! touching data is checked by [`ExperimentConfig::validate`] — a config
//! either fails before any compute or describes a runnable experiment.
//!
//! Command-line flags override the file (`--out`, `--seed`, `--engine`,
//! `--workers`); hashing happens after the overrides, so the hash embedded
//! in artifacts identifies the configuration that actually ran.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pcn::data::CorruptionKind;
use pcn::numerics::Activation;
use pcn::schedules::{Algorithm, ScheduleConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

/// The one schema version this build reads and writes.
pub const CONFIG_VERSION: u32 = 1;

/// Environment variable naming the dataset cache directory; used when a
/// dataset table has no explicit `dir`.
pub const DATA_DIR_ENV: &str = "PCN_DATA_DIR";

/// Experiment family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Accuracy grid: every algorithm × seed cell trains a classifier.
    Classify,
    /// Generative energy-versus-iteration traces for iPC and classic PC.
    Generate,
    /// Training-loss-versus-SMM curves at a shared operation budget.
    Efficiency,
    /// Operation-count audit grid (exact ledger check).
    BenchSmm,
    /// Wall-clock per-update benchmark across depth × width.
    BenchWallclock,
    /// Corruption-shift calibration study over saved checkpoints.
    Calibrate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Classify => "classify",
            ExperimentKind::Generate => "generate",
            ExperimentKind::Efficiency => "efficiency",
            ExperimentKind::BenchSmm => "bench-smm",
            ExperimentKind::BenchWallclock => "bench-wallclock",
            ExperimentKind::Calibrate => "calibrate",
        }
    }
}

/// Execution engine selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineChoice {
    #[default]
    Serial,
    Parallel,
}

/// Where samples come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    /// MNIST digits in IDX files (labeled, 784 features, 10 classes).
    Mnist,
    /// FashionMNIST in IDX files (labeled, 784 features, 10 classes).
    FashionMnist,
    /// Labeled draws from a random teacher's argmax readout.
    SyntheticClassification,
    /// Unlabeled samples generated top-down by a random teacher.
    SyntheticGenerative,
}

impl DataSource {
    pub fn is_synthetic(self) -> bool {
        matches!(self, DataSource::SyntheticClassification | DataSource::SyntheticGenerative)
    }

    pub fn is_labeled(self) -> bool {
        !matches!(self, DataSource::SyntheticGenerative)
    }

    /// Subdirectory under the cache root for IDX sources.
    pub fn cache_subdir(self) -> Option<&'static str> {
        match self {
            DataSource::Mnist => Some("mnist"),
            DataSource::FashionMnist => Some("fashion_mnist"),
            _ => None,
        }
    }
}

/// The `[dataset]` table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub source: DataSource,
    /// Directory holding the IDX files; defaults to the cache directory
    /// (`PCN_DATA_DIR` or `data/`) plus the source's subdirectory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Class-balanced subset of the training split.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_subset: Option<usize>,
    /// Class-balanced subset of the test split.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_subset: Option<usize>,
    /// Samples split off the training set as a held-out set for early
    /// stopping.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holdout: Option<usize>,
    /// Teacher network dims (synthetic sources only); `dims[0]` is the
    /// class count (classification) or the feature dimension (generative),
    /// the last entry the input dimension.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    /// Training samples to draw (synthetic sources only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Test samples to draw (synthetic classification only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_samples: Option<usize>,
    /// Seed for synthetic draws, subsets, and the holdout split — fixed
    /// per experiment so every grid cell sees identical data.
    #[serde(default, skip_serializing_if = "is_zero_u64")]
    pub data_seed: u64,
}

fn is_zero_u64(v: &u64) -> bool {
    *v == 0
}

/// The `[network]` table: the trained model's shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    /// `dims[0]` is the generated end (classes, or the data for generative
    /// runs), the last entry the clamped input end.
    pub dims: Vec<usize>,
    /// `tanh`, `relu`, or `identity`.
    pub activation: String,
}

impl NetworkSpec {
    pub fn activation(&self) -> Result<Activation> {
        Activation::from_name(&self.activation).ok_or_else(|| {
            CliError::Config(format!(
                "unknown activation {:?}; expected tanh, relu, or identity",
                self.activation
            ))
        })
    }
}

/// The `[schedule]` table: base hyperparameters shared by every algorithm
/// in the grid. Unset fields keep the per-algorithm defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_decay: Option<f64>,
    /// Mini-batch size; leave unset for the full-batch regime.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequential_weights: Option<bool>,
}

/// Per-algorithm overrides of the base schedule, keyed by algorithm name
/// inside `[<kind>.overrides.<algorithm>]`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleOverride {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_decay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_steps: Option<usize>,
}

/// The `[classify]` table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifySpec {
    /// Algorithm names forming the grid's first axis.
    pub algorithms: Vec<String>,
    /// Epochs without a held-out improvement before stopping early; 0
    /// trains the full epoch budget (the best network is still kept).
    #[serde(default)]
    pub patience: usize,
    /// Save the best network of each cell as
    /// `checkpoint_<algorithm>_seed<seed>.pcnw`.
    #[serde(default = "default_true")]
    pub checkpoints: bool,
    /// Per-algorithm deviations from `[schedule]`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, ScheduleOverride>,
}

fn default_true() -> bool {
    true
}

/// The `[generate]` table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    /// Inference-steps-per-update values for the classic-PC arms.
    pub t_grid: Vec<usize>,
    /// Total inference iterations per trace; every arm gets the same
    /// iteration budget so traces share an x-axis.
    pub iterations: usize,
}

/// The `[efficiency]` table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencySpec {
    /// Inference-steps-per-update values for the classic-PC arms.
    pub t_grid: Vec<usize>,
    /// Shared SMM budget every arm trains up to.
    pub smm_budget: u64,
    /// Per-algorithm deviations from `[schedule]`, keyed `ipc`, `pc`, `bp`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, ScheduleOverride>,
}

/// The `[bench]` table, shared by both bench kinds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    /// Network depths (weight-matrix counts), at least 2 each.
    pub depths: Vec<usize>,
    /// Layer widths for the wall-clock sweep.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub widths: Vec<usize>,
    /// Classic-PC T values for the audit grid.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub t_grid: Vec<usize>,
    /// Weight updates per audit cell.
    #[serde(default = "default_updates")]
    pub updates: u64,
    /// Timing repeats per wall-clock cell (odd, so the median is one
    /// sample); 1 is accepted with a variance warning.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

fn default_updates() -> u64 {
    3
}

fn default_repeats() -> usize {
    5
}

/// The `[calibrate]` table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateSpec {
    /// Directory holding `checkpoint_<algorithm>_seed<seed>.pcnw` files
    /// written by a classify run.
    pub checkpoints: PathBuf,
    /// Algorithms whose checkpoints are studied (typically `bp` and `ipc`).
    pub algorithms: Vec<String>,
    /// Equal-mass bins for the calibration error.
    #[serde(default = "default_bins")]
    pub n_bins: usize,
    /// Highest corruption level; levels 0 (clean) through this run.
    #[serde(default = "default_max_level")]
    pub max_level: u8,
    /// Seed for the corruption noise draws.
    #[serde(default, skip_serializing_if = "is_zero_u64")]
    pub corruption_seed: u64,
    /// Corruption kinds to apply; unset means all of them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kinds: Option<Vec<String>>,
}

fn default_bins() -> usize {
    15
}

fn default_max_level() -> u8 {
    pcn::data::CORRUPTION_LEVELS
}

/// A whole experiment file. Scalar fields come before the tables so the
/// canonical serialization round-trips through TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Schema version; must equal [`CONFIG_VERSION`].
    pub version: u32,
    pub kind: ExperimentKind,
    /// Artifact directory, created on demand.
    pub out_dir: PathBuf,
    /// One grid cell per seed.
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub engine: EngineChoice,
    /// Worker threads when `engine = "parallel"`.
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classify: Option<ClassifySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generate: Option<GenerateSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<EfficiencySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bench: Option<BenchSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibrate: Option<CalibrateSpec>,
}

fn default_workers() -> usize {
    4
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub engine: Option<EngineChoice>,
    pub workers: Option<usize>,
    pub dry_run: bool,
}

/// A parsed, override-applied, validated configuration plus the hash that
/// identifies it in artifacts.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub cfg: ExperimentConfig,
    /// SHA-256 of the canonical TOML serialization, lowercase hex.
    pub hash: String,
    pub dry_run: bool,
}

/// Read, override, validate, and hash a configuration file.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<Resolved> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!("cannot read {}: {e}", path.display()))
    })?;
    let mut cfg: ExperimentConfig = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(out) = &overrides.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = overrides.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(engine) = overrides.engine {
        cfg.engine = engine;
    }
    if let Some(workers) = overrides.workers {
        cfg.workers = workers;
    }
    cfg.validate()?;
    let hash = config_hash(&cfg)?;
    Ok(Resolved { cfg, hash, dry_run: overrides.dry_run })
}

/// SHA-256 over the canonical TOML serialization of the resolved config.
///
/// Pure location fields are blanked first: the output directory names where
/// artifacts land and the dataset directory names where cached files sit
/// (the environment variable that serves the same purpose is equally
/// invisible here). Two runs of the same experiment must stamp their
/// artifacts with the same identity no matter which directories they touch.
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let mut cfg = cfg.clone();
    cfg.out_dir = PathBuf::new();
    if let Some(d) = cfg.dataset.as_mut() {
        d.dir = None;
    }
    let canon = toml::to_string(&cfg)
        .map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))?;
    let mut hasher = Sha256::new();
    hasher.update(canon.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    Ok(hex)
}

/// Parse an algorithm list, rejecting duplicates and unknown names.
pub fn parse_algorithms(names: &[String]) -> Result<Vec<Algorithm>> {
    if names.is_empty() {
        return Err(CliError::Config("the algorithm grid is empty".into()));
    }
    let mut algorithms = Vec::with_capacity(names.len());
    for name in names {
        let a = Algorithm::from_name(name)?;
        if algorithms.contains(&a) {
            return Err(CliError::Config(format!("algorithm {name:?} listed twice")));
        }
        algorithms.push(a);
    }
    Ok(algorithms)
}

/// Assemble the schedule for one grid cell: per-algorithm defaults, then
/// the `[schedule]` base, then the algorithm's override table.
pub fn schedule_for(
    algorithm: Algorithm,
    base: Option<&ScheduleSpec>,
    override_: Option<&ScheduleOverride>,
    seed: u64,
) -> ScheduleConfig {
    let mut cfg = ScheduleConfig::for_algorithm(algorithm);
    if let Some(b) = base {
        if let Some(v) = b.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = b.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = b.t_steps {
            cfg.t_steps = v;
        }
        if let Some(v) = b.weight_decay {
            cfg.weight_decay = v;
        }
        if let Some(v) = b.batch_size {
            cfg.batch_size = Some(v);
        }
        if let Some(v) = b.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = b.total_steps {
            cfg.total_steps = v;
        }
        if let Some(v) = b.sequential_weights {
            cfg.sequential_weights = v;
        }
    }
    if let Some(o) = override_ {
        if let Some(v) = o.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = o.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = o.t_steps {
            cfg.t_steps = v;
        }
        if let Some(v) = o.weight_decay {
            cfg.weight_decay = v;
        }
        if let Some(v) = o.batch_size {
            cfg.batch_size = Some(v);
        }
        if let Some(v) = o.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = o.total_steps {
            cfg.total_steps = v;
        }
    }
    cfg.seed = seed;
    cfg
}

impl ExperimentConfig {
    /// Every check that needs no data on disk: schema version, section
    /// presence, grids, name lookups, schedule bounds, and the network/
    /// dataset shape constraints that are knowable up front.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(CliError::Config(format!(
                "config version {} not supported; this build reads version {}",
                self.version, CONFIG_VERSION
            )));
        }
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds must list at least one seed".into()));
        }
        if self.workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if self.out_dir.as_os_str().is_empty() {
            return Err(CliError::Config("out_dir must not be empty".into()));
        }
        self.check_sections()?;
        match self.kind {
            ExperimentKind::Classify => self.validate_classify(),
            ExperimentKind::Generate => self.validate_generate(),
            ExperimentKind::Efficiency => self.validate_efficiency(),
            ExperimentKind::BenchSmm | ExperimentKind::BenchWallclock => self.validate_bench(),
            ExperimentKind::Calibrate => self.validate_calibrate(),
        }
    }

    /// The tables an experiment kind reads; anything else present is a
    /// mistake worth rejecting, same as an unknown key.
    fn check_sections(&self) -> Result<()> {
        let required: &[&str] = match self.kind {
            ExperimentKind::Classify => &["dataset", "network", "schedule", "classify"],
            ExperimentKind::Generate => &["dataset", "network", "schedule", "generate"],
            ExperimentKind::Efficiency => &["dataset", "network", "schedule", "efficiency"],
            ExperimentKind::BenchSmm | ExperimentKind::BenchWallclock => &["bench"],
            ExperimentKind::Calibrate => &["dataset", "calibrate"],
        };
        let present: [(&str, bool); 8] = [
            ("dataset", self.dataset.is_some()),
            ("network", self.network.is_some()),
            ("schedule", self.schedule.is_some()),
            ("classify", self.classify.is_some()),
            ("generate", self.generate.is_some()),
            ("efficiency", self.efficiency.is_some()),
            ("bench", self.bench.is_some()),
            ("calibrate", self.calibrate.is_some()),
        ];
        for (name, is_present) in present {
            let needed = required.contains(&name);
            if needed && !is_present {
                return Err(CliError::Config(format!(
                    "kind {:?} requires a [{name}] table",
                    self.kind.name()
                )));
            }
            if !needed && is_present {
                return Err(CliError::Config(format!(
                    "[{name}] does not apply to kind {:?}",
                    self.kind.name()
                )));
            }
        }
        Ok(())
    }

    fn dataset_spec(&self) -> &DatasetSpec {
        self.dataset.as_ref().expect("checked by check_sections")
    }

    fn network_spec(&self) -> &NetworkSpec {
        self.network.as_ref().expect("checked by check_sections")
    }

    fn validate_dataset(&self, want_labels: bool) -> Result<()> {
        let ds = self.dataset_spec();
        if want_labels && !ds.source.is_labeled() {
            return Err(CliError::Config(format!(
                "kind {:?} needs a labeled dataset, but the source is generative",
                self.kind.name()
            )));
        }
        if ds.source.is_synthetic() {
            let dims = ds.dims.as_ref().ok_or_else(|| {
                CliError::Config("synthetic sources need teacher dims".into())
            })?;
            if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
                return Err(CliError::Config(
                    "teacher dims need at least 2 positive entries".into(),
                ));
            }
            if ds.samples.unwrap_or(0) == 0 {
                return Err(CliError::Config(
                    "synthetic sources need a positive sample count".into(),
                ));
            }
            if ds.dir.is_some() {
                return Err(CliError::Config("dir does not apply to synthetic sources".into()));
            }
            if ds.source == DataSource::SyntheticGenerative && ds.test_samples.is_some() {
                return Err(CliError::Config(
                    "test_samples does not apply to generative sources".into(),
                ));
            }
        } else {
            for (field, set) in [
                ("dims", ds.dims.is_some()),
                ("samples", ds.samples.is_some()),
                ("test_samples", ds.test_samples.is_some()),
            ] {
                if set {
                    return Err(CliError::Config(format!(
                        "{field} only applies to synthetic sources"
                    )));
                }
            }
        }
        for (field, value) in [
            ("train_subset", ds.train_subset),
            ("test_subset", ds.test_subset),
            ("holdout", ds.holdout),
        ] {
            if value == Some(0) {
                return Err(CliError::Config(format!("{field} must be positive when set")));
            }
        }
        Ok(())
    }

    /// Feature dimension and class count, when knowable without reading
    /// files (IDX image sources have fixed shapes; synthetic sources carry
    /// their teacher dims).
    fn known_data_shape(&self) -> (Option<usize>, Option<usize>) {
        let ds = self.dataset_spec();
        match ds.source {
            DataSource::Mnist | DataSource::FashionMnist => (Some(28 * 28), Some(10)),
            DataSource::SyntheticClassification => {
                let dims = ds.dims.as_ref().expect("checked by validate_dataset");
                (Some(dims[dims.len() - 1]), Some(dims[0]))
            }
            DataSource::SyntheticGenerative => {
                let dims = ds.dims.as_ref().expect("checked by validate_dataset");
                (Some(dims[0]), None)
            }
        }
    }

    fn validate_network(&self, generative: bool) -> Result<()> {
        let net = self.network_spec();
        if net.dims.len() < 2 || net.dims.iter().any(|&d| d == 0) {
            return Err(CliError::Config(
                "network dims need at least 2 positive entries".into(),
            ));
        }
        net.activation()?;
        let (features, classes) = self.known_data_shape();
        if generative {
            if let Some(f) = features {
                if net.dims[0] != f {
                    return Err(CliError::Config(format!(
                        "network dims[0] = {} but the data has {f} features; generative \
                         networks clamp the data at layer 0",
                        net.dims[0]
                    )));
                }
            }
        } else {
            if let Some(c) = classes {
                if net.dims[0] != c {
                    return Err(CliError::Config(format!(
                        "network dims[0] = {} but the dataset has {c} classes",
                        net.dims[0]
                    )));
                }
            }
            if let Some(f) = features {
                if *net.dims.last().expect("len checked") != f {
                    return Err(CliError::Config(format!(
                        "network input dim {} but the data has {f} features",
                        net.dims.last().expect("len checked")
                    )));
                }
            }
        }
        Ok(())
    }

    /// Assemble and bounds-check the schedule of every cell in an
    /// algorithm grid.
    fn validate_cells(
        &self,
        algorithms: &[Algorithm],
        overrides: &BTreeMap<String, ScheduleOverride>,
    ) -> Result<()> {
        for name in overrides.keys() {
            let a = Algorithm::from_name(name)?;
            if !algorithms.contains(&a) {
                return Err(CliError::Config(format!(
                    "override for {name:?} but that algorithm is not in the grid"
                )));
            }
        }
        for &a in algorithms {
            let cell = schedule_for(a, self.schedule.as_ref(), overrides.get(a.name()), 0);
            cell.validate()?;
        }
        Ok(())
    }

    fn validate_classify(&self) -> Result<()> {
        self.validate_dataset(true)?;
        self.validate_network(false)?;
        let spec = self.classify.as_ref().expect("checked by check_sections");
        let algorithms = parse_algorithms(&spec.algorithms)?;
        self.validate_cells(&algorithms, &spec.overrides)
    }

    fn validate_generate(&self) -> Result<()> {
        self.validate_dataset(false)?;
        self.validate_network(true)?;
        if self.schedule.as_ref().is_some_and(|s| s.batch_size.is_some()) {
            return Err(CliError::Config(
                "generative traces run full-batch; drop batch_size".into(),
            ));
        }
        let spec = self.generate.as_ref().expect("checked by check_sections");
        if spec.t_grid.is_empty() {
            return Err(CliError::Config("the T grid is empty".into()));
        }
        if spec.t_grid.iter().any(|&t| t == 0) {
            return Err(CliError::Config("T values must be positive".into()));
        }
        let t_max = *spec.t_grid.iter().max().expect("non-empty");
        if spec.iterations < t_max {
            return Err(CliError::Config(format!(
                "iterations = {} affords no update at T = {t_max}",
                spec.iterations
            )));
        }
        self.validate_cells(&[Algorithm::Ipc, Algorithm::Pc], &BTreeMap::new())
    }

    fn validate_efficiency(&self) -> Result<()> {
        self.validate_dataset(true)?;
        self.validate_network(false)?;
        if self.schedule.as_ref().is_some_and(|s| s.batch_size.is_some()) {
            return Err(CliError::Config(
                "efficiency curves compare full-batch updates; drop batch_size".into(),
            ));
        }
        let spec = self.efficiency.as_ref().expect("checked by check_sections");
        if spec.t_grid.is_empty() {
            return Err(CliError::Config("the T grid is empty".into()));
        }
        if spec.t_grid.iter().any(|&t| t == 0) {
            return Err(CliError::Config("T values must be positive".into()));
        }
        let depth = self.network_spec().dims.len() - 1;
        let t_max = *spec.t_grid.iter().max().expect("non-empty");
        let costliest = (2 * t_max as u64).max(2 * depth as u64 - 1);
        if spec.smm_budget < costliest {
            return Err(CliError::Config(format!(
                "smm_budget = {} affords no update for the costliest arm ({costliest} SMMs)",
                spec.smm_budget
            )));
        }
        let algorithms = [Algorithm::Ipc, Algorithm::Pc, Algorithm::Bp];
        self.validate_cells(&algorithms, &spec.overrides)
    }

    fn validate_bench(&self) -> Result<()> {
        let spec = self.bench.as_ref().expect("checked by check_sections");
        if spec.depths.is_empty() {
            return Err(CliError::Config("the depth grid is empty".into()));
        }
        if spec.depths.iter().any(|&d| d < 2) {
            return Err(CliError::Config("bench depths start at 2".into()));
        }
        match self.kind {
            ExperimentKind::BenchSmm => {
                if spec.t_grid.is_empty() {
                    return Err(CliError::Config("the T grid is empty".into()));
                }
                if spec.t_grid.iter().any(|&t| t == 0) {
                    return Err(CliError::Config("T values must be positive".into()));
                }
                if spec.updates == 0 {
                    return Err(CliError::Config("updates must be at least 1".into()));
                }
            }
            ExperimentKind::BenchWallclock => {
                if spec.widths.is_empty() {
                    return Err(CliError::Config("the width grid is empty".into()));
                }
                if spec.widths.iter().any(|&w| w == 0) {
                    return Err(CliError::Config("widths must be positive".into()));
                }
                if spec.repeats == 0 || spec.repeats % 2 == 0 {
                    return Err(CliError::Config(format!(
                        "repeats must be odd and positive, got {}",
                        spec.repeats
                    )));
                }
            }
            _ => unreachable!("validate_bench is only called for bench kinds"),
        }
        Ok(())
    }

    fn validate_calibrate(&self) -> Result<()> {
        self.validate_dataset(true)?;
        let spec = self.calibrate.as_ref().expect("checked by check_sections");
        parse_algorithms(&spec.algorithms)?;
        if spec.n_bins == 0 {
            return Err(CliError::Config("n_bins must be at least 1".into()));
        }
        if spec.max_level == 0 || spec.max_level > pcn::data::CORRUPTION_LEVELS {
            return Err(CliError::Config(format!(
                "max_level must lie in 1..={}, got {}",
                pcn::data::CORRUPTION_LEVELS,
                spec.max_level
            )));
        }
        if let Some(kinds) = &spec.kinds {
            if kinds.is_empty() {
                return Err(CliError::Config("the corruption kind list is empty".into()));
            }
            for name in kinds {
                if CorruptionKind::from_name(name).is_none() {
                    return Err(CliError::Config(format!("unknown corruption kind {name:?}")));
                }
            }
        }
        Ok(())
    }

    /// Corruption kinds for a calibrate run (all of them when unset).
    pub fn corruption_kinds(&self) -> Vec<CorruptionKind> {
        match self.calibrate.as_ref().and_then(|c| c.kinds.as_ref()) {
            Some(names) => names
                .iter()
                .map(|n| CorruptionKind::from_name(n).expect("validated"))
                .collect(),
            None => CorruptionKind::ALL.to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classify_toml() -> String {
        r#"
            version = 1
            kind = "classify"
            out_dir = "runs/demo"
            seeds = [1, 2]

            [dataset]
            source = "synthetic-classification"
            dims = [3, 6, 8]
            samples = 64
            test_samples = 32

            [network]
            dims = [3, 5, 8]
            activation = "tanh"

            [schedule]
            alpha = 0.02
            batch_size = 16
            epochs = 2

            [classify]
            algorithms = ["ipc", "bp"]

            [classify.overrides.ipc]
            t_steps = 4
        "#
        .to_string()
    }

    fn parse(text: &str) -> std::result::Result<ExperimentConfig, String> {
        toml::from_str::<ExperimentConfig>(text).map_err(|e| e.to_string())
    }

    #[test]
    fn classify_config_round_trips_and_validates() {
        let cfg = parse(&classify_toml()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Classify);
        assert_eq!(cfg.seeds, vec![1, 2]);
        assert_eq!(cfg.engine, EngineChoice::Serial);
        let spec = cfg.classify.as_ref().unwrap();
        assert_eq!(spec.algorithms, vec!["ipc", "bp"]);
        assert!(spec.checkpoints);
        assert_eq!(spec.overrides["ipc"].t_steps, Some(4));

        // Canonical serialization parses back to an equal config.
        let canon = toml::to_string(&cfg).unwrap();
        let again = parse(&canon).unwrap();
        assert_eq!(config_hash(&cfg).unwrap(), config_hash(&again).unwrap());
    }

    #[test]
    fn unknown_keys_are_rejected_everywhere() {
        let top = classify_toml().replace("seeds = [1, 2]", "seeds = [1, 2]\nfrobnicate = 3");
        assert!(parse(&top).unwrap_err().contains("frobnicate"));

        let nested = classify_toml().replace("samples = 64", "samples = 64\nfrobnicate = 3");
        assert!(parse(&nested).unwrap_err().contains("frobnicate"));
    }

    #[test]
    fn version_mismatch_is_a_config_error() {
        let cfg = parse(&classify_toml().replace("version = 1", "version = 7")).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("version 7"), "got: {err}");
        assert_eq!(err.exit_code(), crate::EXIT_CONFIG);
    }

    #[test]
    fn sections_must_match_the_kind() {
        // A [generate] table on a classify run is rejected.
        let extra = format!("{}\n[generate]\nt_grid = [8]\niterations = 80\n", classify_toml());
        let cfg = parse(&extra).unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("[generate]"));

        // A missing required table is rejected.
        let mut cfg = parse(&classify_toml()).unwrap();
        cfg.schedule = None;
        assert!(cfg.validate().unwrap_err().to_string().contains("[schedule]"));
    }

    #[test]
    fn shape_cross_checks_catch_mismatched_dims() {
        let mut cfg = parse(&classify_toml()).unwrap();
        cfg.network.as_mut().unwrap().dims = vec![4, 5, 8]; // 4 != 3 classes
        assert!(cfg.validate().unwrap_err().to_string().contains("classes"));

        let mut cfg = parse(&classify_toml()).unwrap();
        cfg.network.as_mut().unwrap().dims = vec![3, 5, 9]; // 9 != 8 features
        assert!(cfg.validate().unwrap_err().to_string().contains("features"));
    }

    #[test]
    fn overrides_apply_on_top_of_base_schedule() {
        let cfg = parse(&classify_toml()).unwrap();
        let spec = cfg.classify.as_ref().unwrap();
        let ipc = schedule_for(
            Algorithm::Ipc,
            cfg.schedule.as_ref(),
            spec.overrides.get("ipc"),
            9,
        );
        assert_eq!(ipc.alpha, 0.02); // base
        assert_eq!(ipc.t_steps, 4); // override
        assert_eq!(ipc.batch_size, Some(16));
        assert_eq!(ipc.seed, 9);
        let bp = schedule_for(Algorithm::Bp, cfg.schedule.as_ref(), None, 9);
        assert_eq!(bp.gamma, 1.0); // algorithm default survives
        assert_eq!(bp.alpha, 0.02);
    }

    #[test]
    fn override_for_an_absent_algorithm_is_rejected() {
        let text = classify_toml().replace("overrides.ipc", "overrides.pc");
        let cfg = parse(&text).unwrap();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("not in the grid"), "got: {err}");
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let cfg = parse(&classify_toml()).unwrap();
        let h1 = config_hash(&cfg).unwrap();
        let h2 = config_hash(&cfg).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(h1.len(), 64);

        let mut changed = cfg.clone();
        changed.seeds = vec![1, 3];
        assert_ne!(h1, config_hash(&changed).unwrap());
    }

    #[test]
    fn hash_ignores_where_artifacts_and_data_live() {
        let cfg = parse(&classify_toml()).unwrap();
        let h1 = config_hash(&cfg).unwrap();

        let mut moved = cfg.clone();
        moved.out_dir = PathBuf::from("/somewhere/else");
        moved.dataset.as_mut().unwrap().dir = Some(PathBuf::from("/mnt/cache"));
        assert_eq!(h1, config_hash(&moved).unwrap());
    }

    #[test]
    fn empty_grids_are_usage_errors() {
        let text = r#"
            version = 1
            kind = "efficiency"
            out_dir = "runs/e"
            seeds = [1]

            [dataset]
            source = "synthetic-classification"
            dims = [3, 6, 8]
            samples = 50

            [network]
            dims = [3, 5, 8]
            activation = "tanh"

            [schedule]

            [efficiency]
            t_grid = []
            smm_budget = 400
        "#;
        let cfg = parse(text).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("T grid is empty"), "got: {err}");
        assert_eq!(err.exit_code(), crate::EXIT_CONFIG);
    }

    #[test]
    fn bench_kinds_share_the_bench_table() {
        let smm = r#"
            version = 1
            kind = "bench-smm"
            out_dir = "runs/b"
            seeds = [0]

            [bench]
            depths = [2, 3, 4]
            t_grid = [1, 8]
        "#;
        let cfg = parse(smm).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.bench.as_ref().unwrap().updates, 3);

        let wall = smm.replace("bench-smm", "bench-wallclock").replace(
            "t_grid = [1, 8]",
            "widths = [8, 16]\nrepeats = 2",
        );
        let cfg = parse(&wall).unwrap();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("odd"), "got: {err}");
    }

    #[test]
    fn calibrate_rejects_unknown_corruptions_and_bad_levels() {
        let text = r#"
            version = 1
            kind = "calibrate"
            out_dir = "runs/c"
            seeds = [1]

            [dataset]
            source = "mnist"

            [calibrate]
            checkpoints = "runs/classify"
            algorithms = ["bp", "ipc"]
            kinds = ["gaussian_noise", "vignette"]
        "#;
        let cfg = parse(text).unwrap();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("vignette"), "got: {err}");

        let ok = text.replace(", \"vignette\"", "");
        let cfg = parse(&ok).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.corruption_kinds(), vec![CorruptionKind::GaussianNoise]);
        assert_eq!(cfg.calibrate.as_ref().unwrap().max_level, 5);

        let bad_level = ok.replace("algorithms = [\"bp\", \"ipc\"]", "algorithms = [\"bp\"]\nmax_level = 6");
        let cfg = parse(&bad_level).unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("max_level"));
    }
}
