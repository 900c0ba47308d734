//! Dataset resolution.
//!
//! Turns a `[dataset]` table into loaded [`Dataset`] values: IDX sources
//! are read from an on-disk cache directory (explicit `dir`, else
//! `$PCN_DATA_DIR`, else `data/`), synthetic sources are drawn from their
//! teacher with the configured seed. Subsetting and the held-out split
//! happen here, all keyed by `data_seed` rather than the grid cell's seed,
//! so every cell of an experiment sees identical data.

use std::path::PathBuf;

use pcn::data::{
    load_idx_classification, synthetic_classification, synthetic_generative, Dataset,
};

use crate::config::{DataSource, DatasetSpec, DATA_DIR_ENV};
use crate::{CliError, Result};

/// The four standard IDX file names.
const IDX_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

/// A resolved dataset: the training split, the test split when the source
/// has one, and the held-out early-stopping split when one was requested.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub train: Dataset,
    pub test: Option<Dataset>,
    pub eval: Option<Dataset>,
}

/// Directory an IDX source reads from, after cache-variable fallback.
pub fn idx_dir(spec: &DatasetSpec) -> PathBuf {
    if let Some(dir) = &spec.dir {
        return dir.clone();
    }
    let root = std::env::var_os(DATA_DIR_ENV).map_or_else(|| PathBuf::from("data"), PathBuf::from);
    root.join(spec.source.cache_subdir().expect("idx sources have a subdir"))
}

/// Whether an IDX source's files are all present (synthetic sources are
/// always available).
pub fn available(spec: &DatasetSpec) -> bool {
    match spec.source.cache_subdir() {
        None => true,
        Some(_) => {
            let dir = idx_dir(spec);
            IDX_FILES.iter().all(|f| dir.join(f).is_file())
        }
    }
}

fn load_idx_pair(spec: &DatasetSpec, name: &str) -> Result<(Dataset, Dataset)> {
    let dir = idx_dir(spec);
    for f in IDX_FILES {
        let path = dir.join(f);
        if !path.is_file() {
            return Err(CliError::Config(format!(
                "dataset file {} not found; point [dataset] dir or ${DATA_DIR_ENV} at the \
                 IDX files, or fetch them with scripts/fetch_data.sh",
                path.display()
            )));
        }
    }
    let train = load_idx_classification(
        format!("{name}-train"),
        &dir.join(IDX_FILES[0]),
        &dir.join(IDX_FILES[1]),
        10,
    )?;
    let test = load_idx_classification(
        format!("{name}-test"),
        &dir.join(IDX_FILES[2]),
        &dir.join(IDX_FILES[3]),
        10,
    )?;
    Ok((train, test))
}

/// Load, subset, and split the dataset a config describes.
pub fn resolve(spec: &DatasetSpec) -> Result<LoadedData> {
    let (mut train, mut test) = match spec.source {
        DataSource::Mnist => {
            let (tr, te) = load_idx_pair(spec, "mnist")?;
            (tr, Some(te))
        }
        DataSource::FashionMnist => {
            let (tr, te) = load_idx_pair(spec, "fashion-mnist")?;
            (tr, Some(te))
        }
        DataSource::SyntheticClassification => {
            let dims = spec.dims.as_ref().expect("validated");
            let n_train = spec.samples.expect("validated");
            let n_test = spec.test_samples.unwrap_or(0);
            let full = synthetic_classification(dims, n_train + n_test, spec.data_seed)?;
            if n_test > 0 {
                let (tr, te) = full.holdout(n_test, spec.data_seed)?;
                (tr, Some(te))
            } else {
                (full, None)
            }
        }
        DataSource::SyntheticGenerative => {
            let dims = spec.dims.as_ref().expect("validated");
            let n = spec.samples.expect("validated");
            (synthetic_generative(dims, n, spec.data_seed)?.data, None)
        }
    };
    if let Some(n) = spec.train_subset {
        train = if train.labels().is_some() {
            train.stratified_subset(n, spec.data_seed)?
        } else {
            train.subset(n, spec.data_seed)?
        };
    }
    if let Some(n) = spec.test_subset {
        let t = test.ok_or_else(|| {
            CliError::Config("test_subset set but the source has no test split".into())
        })?;
        test = Some(t.stratified_subset(n, spec.data_seed)?);
    }
    let eval = match spec.holdout {
        Some(n) => {
            let (rest, held) = train.holdout(n, spec.data_seed)?;
            train = rest;
            Some(held)
        }
        None => None,
    };
    Ok(LoadedData { train, test, eval })
}

/// `resolve`, but demanding a test split (classification studies).
pub fn resolve_with_test(spec: &DatasetSpec) -> Result<(LoadedData, Dataset)> {
    let loaded = resolve(spec)?;
    match loaded.test.clone() {
        Some(test) => Ok((loaded, test)),
        None => Err(CliError::Config(
            "this experiment needs a test split; give the synthetic source test_samples".into(),
        )),
    }
}

/// Guard used by runners and the acceptance suite: `Ok` when the source's
/// files exist, a config error naming the fetch path otherwise.
pub fn require_available(spec: &DatasetSpec) -> Result<()> {
    if available(spec) {
        return Ok(());
    }
    Err(CliError::Config(format!(
        "{} files not found under {}; fetch them with scripts/fetch_data.sh or point \
         ${DATA_DIR_ENV} at them",
        match spec.source {
            DataSource::Mnist => "MNIST",
            DataSource::FashionMnist => "FashionMNIST",
            _ => unreachable!("synthetic sources are always available"),
        },
        idx_dir(spec).display()
    )))
}
