//! Synthetic datasets with known ground truth.

use std::sync::Arc;

use super::Dataset;
use crate::model::{NetworkState, PcNetwork};
use crate::numerics::{Activation, InitScheme, Matrix, Rng};
use crate::{PcnError, Result};

/// A generative dataset together with the teacher that produced it and the
/// exact layer values of the generating pass — the configuration at which
/// the teacher's energy on its own samples is zero, which tests use as a
/// self-consistency oracle.
#[derive(Debug, Clone)]
pub struct SyntheticGenerative {
    pub data: Dataset,
    pub teacher: PcNetwork,
    /// Layer values of the generating pass, index 0 (= the data) to L.
    pub teacher_values: Vec<Matrix>,
}

impl SyntheticGenerative {
    /// The teacher's state clamped to its own samples, with hidden and top
    /// values at the generating configuration.
    pub fn teacher_state(&self) -> Result<NetworkState> {
        let clamped: Vec<bool> =
            (0..self.teacher_values.len()).map(|l| l == 0).collect();
        NetworkState::from_values(&self.teacher, self.teacher_values.clone(), clamped)
    }
}

/// Sample `n` items from a random tanh teacher network.
///
/// Teacher weights are drawn nonnegative and row-normalized (top layer to
/// L1 mass 1.0, inner layers to 1.2) and the top-layer values are drawn
/// from `U(0.2, 1.8)`: positivity plus the unit bound of tanh keep every
/// generated value strictly inside `(0, 1)`, so the samples are valid
/// image-range data and the generating configuration has exactly zero
/// energy.
pub fn synthetic_generative(dims: &[usize], n: usize, seed: u64) -> Result<SyntheticGenerative> {
    if n == 0 {
        return Err(PcnError::InvalidConfig("need at least one sample".into()));
    }
    if dims.len() < 2 {
        return Err(PcnError::InvalidConfig("teacher needs at least 2 layers".into()));
    }
    let mut rng = Rng::substream(seed, 0x9e4);
    let depth = dims.len() - 1;
    let mut weights = Vec::with_capacity(depth);
    for l in 0..depth {
        let target_mass = if l == 0 { 1.0 } else { 1.2 };
        let mut data = Vec::with_capacity(dims[l] * dims[l + 1]);
        for _ in 0..dims[l] {
            let row: Vec<f64> = (0..dims[l + 1]).map(|_| rng.uniform(0.05, 1.0)).collect();
            let mass: f64 = row.iter().sum();
            data.extend(row.into_iter().map(|v| v * target_mass / mass));
        }
        weights.push(Matrix::from_vec(dims[l], dims[l + 1], data)?);
    }
    let teacher = PcNetwork::from_weights(weights, Activation::Tanh)?;

    let top_data: Vec<f64> = (0..dims[depth] * n).map(|_| rng.uniform(0.2, 1.8)).collect();
    let mut values = vec![Matrix::from_vec(dims[depth], n, top_data)?];
    for l in (0..depth).rev() {
        let fx = Activation::Tanh.apply(values.last().unwrap());
        values.push(teacher.weight(l).matmul(&fx)?);
    }
    values.reverse(); // now index 0 = generated data, index depth = top
    let samples = values[0].clone();
    debug_assert!(samples.as_slice().iter().all(|&v| v > 0.0 && v < 1.0));

    let data = Dataset::new_unlabeled(
        format!("synthetic-gen-{}-{n}", dims_label(dims)),
        samples,
        None,
        format!("synthetic:gen:{}:{n}:{seed}", dims_label(dims)),
    );
    Ok(SyntheticGenerative { data, teacher, teacher_values: values })
}

/// Labeled synthetic classification data: inputs are uniform in `[0, 1]`
/// and labels come from a random teacher's argmax readout, so the task is
/// actually learnable (unlike random labels).
pub fn synthetic_classification(dims: &[usize], n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(PcnError::InvalidConfig("need at least one sample".into()));
    }
    if dims.len() < 2 {
        return Err(PcnError::InvalidConfig("teacher needs at least 2 layers".into()));
    }
    let mut rng = Rng::substream(seed, 0xC1a);
    let teacher = PcNetwork::new(dims, Activation::Tanh, &mut rng, InitScheme::UniformFanIn)?;
    let depth = dims.len() - 1;
    let classes = dims[0];
    let feat = dims[depth];
    let data: Vec<f64> = (0..feat * n).map(|_| rng.uniform(0.0, 1.0)).collect();
    let inputs = Matrix::from_vec(feat, n, data)?;
    let scores = teacher.readout(&inputs)?;
    let labels: Vec<usize> = (0..n)
        .map(|j| {
            let col = scores.col(j);
            col.iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, _)| i)
                .unwrap()
        })
        .collect();
    Dataset::new_classification(
        format!("synthetic-cls-{}-{n}", dims_label(dims)),
        inputs,
        labels,
        classes,
        None,
        format!("synthetic:cls:{}:{n}:{seed}", dims_label(dims)),
    )
}

fn dims_label(dims: &[usize]) -> String {
    dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
}

// NetworkState constructor used by the oracle; lives here to keep the
// model module unaware of synthetic data.
impl NetworkState {
    /// Build a state from explicit layer values; errors and cached
    /// activations are refreshed before returning.
    pub fn from_values(
        net: &PcNetwork,
        values: Vec<Matrix>,
        clamped: Vec<bool>,
    ) -> Result<NetworkState> {
        if values.len() != net.depth() + 1 || clamped.len() != values.len() {
            return Err(PcnError::ShapeMismatch(format!(
                "{} value layers / {} clamp flags for a depth-{} network",
                values.len(),
                clamped.len(),
                net.depth()
            )));
        }
        let batch = values[0].cols();
        for (l, v) in values.iter().enumerate() {
            if v.rows() != net.dims()[l] || v.cols() != batch {
                return Err(PcnError::ShapeMismatch(format!(
                    "layer {l} values are {}x{}, want {}x{batch}",
                    v.rows(),
                    v.cols(),
                    net.dims()[l]
                )));
            }
        }
        let mut state = NetworkState::new_raw(values.into_iter().map(Arc::new).collect(), clamped, batch);
        state.refresh_errors(net)?;
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn teacher_achieves_exactly_zero_energy_on_its_samples() {
        let synth = synthetic_generative(&[12, 8, 6], 20, 3).unwrap();
        let state = synth.teacher_state().unwrap();
        assert!(state.energy() < 1e-24, "energy {}", state.energy());
    }

    #[test]
    fn samples_live_strictly_inside_the_unit_interval() {
        let synth = synthetic_generative(&[10, 7, 5, 4], 50, 11).unwrap();
        for &v in synth.data.inputs().as_slice() {
            assert!(v > 0.0 && v < 1.0, "sample value {v}");
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let a = synthetic_generative(&[6, 4, 3], 5, 9).unwrap();
        let b = synthetic_generative(&[6, 4, 3], 5, 9).unwrap();
        let c = synthetic_generative(&[6, 4, 3], 5, 10).unwrap();
        assert_eq!(a.data.inputs(), b.data.inputs());
        assert_ne!(a.data.inputs(), c.data.inputs());
    }

    #[test]
    fn classification_labels_are_learnable_and_in_range() {
        let d = synthetic_classification(&[3, 8, 6], 200, 5).unwrap();
        assert_eq!(d.class_count(), Some(3));
        let mut counts = [0usize; 3];
        for &l in d.labels().unwrap() {
            counts[l] += 1;
        }
        // A random teacher should not map everything to one class.
        assert!(counts.iter().filter(|&&c| c > 0).count() >= 2, "counts {counts:?}");
    }
}
