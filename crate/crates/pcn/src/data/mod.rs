//! Dataset ingestion and manipulation.
//!
//! A [`Dataset`] stores inputs as a features × samples matrix (one column
//! per sample, pixel values already scaled to `[0, 1]`), optional one-hot
//! targets as a classes × samples matrix, and enough provenance (name,
//! source checksum) for run artifacts to identify exactly what was
//! trained on. All ingestion and subsetting is deterministic given the
//! file bytes and a seed.

mod corrupt;
mod idx;
mod synthetic;

pub use corrupt::{corrupt, Corruption, CorruptionKind, CORRUPTION_LEVELS};
pub use idx::{load_idx_classification, load_image_dir, parse_idx, serialize_idx, IdxTensor};
pub use synthetic::{synthetic_classification, synthetic_generative, SyntheticGenerative};

use crate::numerics::{Matrix, Rng};
use crate::{PcnError, Result};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    /// Identifies the source bytes (or generator settings) of this data.
    pub checksum: String,
    inputs: Matrix,
    targets: Option<Matrix>,
    labels: Option<Vec<usize>>,
    image_shape: Option<(usize, usize)>,
}

impl Dataset {
    /// Labeled dataset; builds the one-hot target matrix (each column has
    /// exactly one 1.0).
    pub fn new_classification(
        name: impl Into<String>,
        inputs: Matrix,
        labels: Vec<usize>,
        classes: usize,
        image_shape: Option<(usize, usize)>,
        checksum: impl Into<String>,
    ) -> Result<Dataset> {
        if labels.len() != inputs.cols() {
            return Err(PcnError::ShapeMismatch(format!(
                "{} labels for {} samples",
                labels.len(),
                inputs.cols()
            )));
        }
        if classes == 0 {
            return Err(PcnError::InvalidConfig("class count must be positive".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(PcnError::InvalidConfig(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        let mut targets = Matrix::zeros(classes, labels.len());
        for (j, &l) in labels.iter().enumerate() {
            targets.as_mut_slice()[l * labels.len() + j] = 1.0;
        }
        Ok(Dataset {
            name: name.into(),
            checksum: checksum.into(),
            inputs,
            targets: Some(targets),
            labels: Some(labels),
            image_shape,
        })
    }

    /// Unlabeled dataset (generative training).
    pub fn new_unlabeled(
        name: impl Into<String>,
        inputs: Matrix,
        image_shape: Option<(usize, usize)>,
        checksum: impl Into<String>,
    ) -> Dataset {
        Dataset {
            name: name.into(),
            checksum: checksum.into(),
            inputs,
            targets: None,
            labels: None,
            image_shape,
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn feature_dim(&self) -> usize {
        self.inputs.rows()
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn targets(&self) -> Option<&Matrix> {
        self.targets.as_ref()
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn class_count(&self) -> Option<usize> {
        self.targets.as_ref().map(|t| t.rows())
    }

    pub fn image_shape(&self) -> Option<(usize, usize)> {
        self.image_shape
    }

    /// Gather the given sample columns into fresh input/target matrices.
    pub fn batch(&self, indices: &[usize]) -> Result<(Matrix, Option<Matrix>)> {
        if indices.is_empty() {
            return Err(PcnError::InvalidConfig("empty batch".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(PcnError::InvalidConfig(format!(
                "batch index {bad} out of range for {} samples",
                self.len()
            )));
        }
        let x = gather_columns(&self.inputs, indices);
        let t = self.targets.as_ref().map(|t| gather_columns(t, indices));
        Ok((x, t))
    }

    /// Random subset of `n` samples without replacement.
    pub fn subset(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 || n > self.len() {
            return Err(PcnError::InvalidConfig(format!(
                "subset of {n} from {} samples",
                self.len()
            )));
        }
        let mut indices: Vec<usize> = (0..self.len()).collect();
        Rng::substream(seed, 0x5b5e7).shuffle(&mut indices);
        indices.truncate(n);
        self.select(&indices, format!("{}[{n}@{seed}]", self.name))
    }

    /// Class-balanced subset: `n / classes` samples per class, the
    /// remainder going one each to the lowest class indices. Requires
    /// labels.
    pub fn stratified_subset(&self, n: usize, seed: u64) -> Result<Dataset> {
        let labels = self.labels.as_ref().ok_or_else(|| {
            PcnError::InvalidConfig("stratified subset needs a labeled dataset".into())
        })?;
        let classes = self.class_count().expect("labeled dataset has classes");
        if n == 0 || n > self.len() {
            return Err(PcnError::InvalidConfig(format!(
                "subset of {n} from {} samples",
                self.len()
            )));
        }
        let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
        for (i, &l) in labels.iter().enumerate() {
            per_class[l].push(i);
        }
        let mut picked = Vec::with_capacity(n);
        for (c, bucket) in per_class.iter_mut().enumerate() {
            let want = n / classes + usize::from(c < n % classes);
            if bucket.len() < want {
                return Err(PcnError::InvalidConfig(format!(
                    "class {c} has only {} samples, need {want}",
                    bucket.len()
                )));
            }
            Rng::substream(seed, 0xC1A55 + c as u64).shuffle(bucket);
            picked.extend_from_slice(&bucket[..want]);
        }
        picked.sort_unstable();
        self.select(&picked, format!("{}[strat{n}@{seed}]", self.name))
    }

    /// Split off `n_eval` randomly chosen samples as a held-out set,
    /// returning (rest, held-out).
    pub fn holdout(&self, n_eval: usize, seed: u64) -> Result<(Dataset, Dataset)> {
        if n_eval == 0 || n_eval >= self.len() {
            return Err(PcnError::InvalidConfig(format!(
                "holdout of {n_eval} from {} samples",
                self.len()
            )));
        }
        let mut indices: Vec<usize> = (0..self.len()).collect();
        Rng::substream(seed, 0x401d) .shuffle(&mut indices);
        let (eval_idx, train_idx) = indices.split_at(n_eval);
        let mut eval_idx = eval_idx.to_vec();
        let mut train_idx = train_idx.to_vec();
        eval_idx.sort_unstable();
        train_idx.sort_unstable();
        let train = self.select(&train_idx, format!("{}[train@{seed}]", self.name))?;
        let eval = self.select(&eval_idx, format!("{}[heldout{n_eval}@{seed}]", self.name))?;
        Ok((train, eval))
    }

    fn select(&self, indices: &[usize], name: String) -> Result<Dataset> {
        let inputs = gather_columns(&self.inputs, indices);
        let labels = self.labels.as_ref().map(|ls| indices.iter().map(|&i| ls[i]).collect());
        match (labels, self.class_count()) {
            (Some(labels), Some(classes)) => Dataset::new_classification(
                name,
                inputs,
                labels,
                classes,
                self.image_shape,
                self.checksum.clone(),
            ),
            _ => Ok(Dataset::new_unlabeled(name, inputs, self.image_shape, self.checksum.clone())),
        }
    }
}

fn gather_columns(m: &Matrix, indices: &[usize]) -> Matrix {
    let rows = m.rows();
    let cols = m.cols();
    let src = m.as_slice();
    let mut data = Vec::with_capacity(rows * indices.len());
    for r in 0..rows {
        let row = &src[r * cols..(r + 1) * cols];
        for &i in indices {
            data.push(row[i]);
        }
    }
    Matrix::from_raw_unchecked(rows, indices.len(), data)
}
