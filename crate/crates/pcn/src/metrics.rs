//! Classification quality and calibration metrics.

use crate::data::{corrupt, Corruption, CorruptionKind, Dataset};
use crate::model::PcNetwork;
use crate::numerics::Matrix;
use crate::{PcnError, Result};

/// Class scores for a batch (classes × samples) with true labels.
#[derive(Debug, Clone)]
pub struct PredictionBatch {
    pub scores: Matrix,
    pub labels: Vec<usize>,
}

impl PredictionBatch {
    pub fn new(scores: Matrix, labels: Vec<usize>) -> Result<PredictionBatch> {
        if labels.len() != scores.cols() {
            return Err(PcnError::ShapeMismatch(format!(
                "{} labels for {} score columns",
                labels.len(),
                scores.cols()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= scores.rows()) {
            return Err(PcnError::InvalidConfig(format!(
                "label {bad} out of range for {} classes",
                scores.rows()
            )));
        }
        Ok(PredictionBatch { scores, labels })
    }

    /// Run the deterministic feedforward readout over a labeled dataset.
    pub fn from_readout(net: &PcNetwork, data: &Dataset) -> Result<PredictionBatch> {
        let labels = data
            .labels()
            .ok_or_else(|| PcnError::InvalidConfig("readout needs a labeled dataset".into()))?;
        let scores = net.readout(data.inputs())?;
        PredictionBatch::new(scores, labels.to_vec())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Argmax accuracy; score ties resolve to the lowest class index.
pub fn accuracy(batch: &PredictionBatch) -> f64 {
    let n = batch.len();
    let mut correct = 0usize;
    for j in 0..n {
        if argmax_col(&batch.scores, j) == batch.labels[j] {
            correct += 1;
        }
    }
    correct as f64 / n as f64
}

fn argmax_col(scores: &Matrix, j: usize) -> usize {
    let mut best = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..scores.rows() {
        let v = scores.get(i, j);
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    best
}

/// Column-wise softmax, stabilized by subtracting each column's max.
pub fn softmax_columns(scores: &Matrix) -> Matrix {
    let (rows, cols) = scores.shape();
    let mut out = vec![0.0f64; rows * cols];
    for j in 0..cols {
        let mut max = f64::NEG_INFINITY;
        for i in 0..rows {
            max = max.max(scores.get(i, j));
        }
        let mut total = 0.0;
        for i in 0..rows {
            let e = (scores.get(i, j) - max).exp();
            out[i * cols + j] = e;
            total += e;
        }
        for i in 0..rows {
            out[i * cols + j] /= total;
        }
    }
    Matrix::from_raw_unchecked(rows, cols, out)
}

/// One adaptive-binning calibration bin.
#[derive(Debug, Clone)]
pub struct CalibrationBin {
    pub count: usize,
    pub mean_confidence: f64,
    pub accuracy: f64,
}

/// Adaptive expected calibration error report.
#[derive(Debug, Clone)]
pub struct CalibrationReport {
    pub ada_ece: f64,
    pub bins: Vec<CalibrationBin>,
}

/// Adaptive ECE: samples sorted by max-softmax confidence (stable sort),
/// split into `n_bins` equal-mass bins — the first `n mod n_bins` bins take
/// one extra sample — then the mass-weighted mean of |accuracy − mean
/// confidence| over bins.
pub fn ada_ece(batch: &PredictionBatch, n_bins: usize) -> Result<CalibrationReport> {
    if n_bins == 0 {
        return Err(PcnError::InvalidConfig("ada_ece needs at least one bin".into()));
    }
    let n = batch.len();
    if n < n_bins {
        return Err(PcnError::InvalidConfig(format!(
            "ada_ece with {n_bins} bins needs at least {n_bins} samples, got {n}"
        )));
    }
    let probs = softmax_columns(&batch.scores);
    let mut samples: Vec<(f64, bool)> = (0..n)
        .map(|j| {
            let pred = argmax_col(&batch.scores, j);
            (probs.get(pred, j), pred == batch.labels[j])
        })
        .collect();
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite confidences"));

    let base = n / n_bins;
    let extra = n % n_bins;
    let mut bins = Vec::with_capacity(n_bins);
    let mut ece = 0.0;
    let mut start = 0usize;
    for b in 0..n_bins {
        let size = base + usize::from(b < extra);
        let slice = &samples[start..start + size];
        start += size;
        let mean_conf = slice.iter().map(|(c, _)| *c).sum::<f64>() / size as f64;
        let acc = slice.iter().filter(|(_, ok)| *ok).count() as f64 / size as f64;
        ece += (acc - mean_conf).abs() * size as f64 / n as f64;
        bins.push(CalibrationBin { count: size, mean_confidence: mean_conf, accuracy: acc });
    }
    Ok(CalibrationReport { ada_ece: ece, bins })
}

/// One row of a distribution-shift study.
#[derive(Debug, Clone)]
pub struct ShiftRow {
    pub corruption: &'static str,
    pub level: u8,
    pub accuracy: f64,
    pub ada_ece: f64,
}

/// Evaluate a model on every (corruption, level) cell of a test set,
/// including level 0 (identity) for each kind. Forward readout only.
pub fn shift_study(
    net: &PcNetwork,
    test: &Dataset,
    kinds: &[CorruptionKind],
    max_level: u8,
    n_bins: usize,
    seed: u64,
) -> Result<Vec<ShiftRow>> {
    let mut rows = Vec::new();
    for &kind in kinds {
        for level in 0..=max_level {
            let shifted = corrupt(test, Corruption { kind, level }, seed)?;
            let batch = PredictionBatch::from_readout(net, &shifted)?;
            rows.push(ShiftRow {
                corruption: kind.name(),
                level,
                accuracy: accuracy(&batch),
                ada_ece: ada_ece(&batch, n_bins)?.ada_ece,
            });
        }
    }
    Ok(rows)
}
