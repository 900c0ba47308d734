//! Network parameters and layer state.
//!
//! Layer indexing runs from 0 (the generated end: class scores in
//! supervised mode, data in generative mode) to `L` (the top: the clamped
//! input in supervised mode, free in generative mode). Weight matrix `l`
//! maps layer `l + 1` down to layer `l`:
//!
//! ```text
//! mu[l]  = w[l] * f(x[l + 1])          for l < L,    mu[L] = x[L]
//! eps[l] = x[l] - mu[l]                               eps[L] = 0
//! F      = 1/2 * sum_l ||eps[l]||^2
//! ```
//!
//! The explicit 1/2 makes the inference and weight updates in
//! [`crate::schedules`] the literal negative gradients of `F`.
//!
//! [`NetworkState`] keeps values, errors, and cached activations `f(x)`
//! mutually consistent: every public operation that moves values or weights
//! refreshes the errors before returning, so `energy()` and the next step's
//! update terms never read stale mismatches. Matrices are held behind `Arc`
//! so snapshots for the layer-parallel engine are reference bumps, not
//! copies.

mod checkpoint;
pub(crate) mod kernels;

use std::sync::Arc;

use crate::numerics::{init_weights, Activation, InitScheme, Matrix, Rng};
use crate::{PcnError, Result};

/// Which layers a training regime pins to data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Layer 0 is clamped to the data; everything above settles freely.
    Generative,
    /// Layer `L` is clamped to the input and layer 0 to the target.
    Supervised,
}

/// A hierarchical predictive-coding network: `L` weight matrices and one
/// activation shared by all layers.
#[derive(Debug, Clone)]
pub struct PcNetwork {
    dims: Vec<usize>,
    weights: Vec<Arc<Matrix>>,
    activation: Activation,
}

impl PcNetwork {
    /// Fresh network with `dims[0]` output units through `dims[L]` input
    /// units, weights drawn from `scheme` in layer-ascending order.
    pub fn new(
        dims: &[usize],
        activation: Activation,
        rng: &mut Rng,
        scheme: InitScheme,
    ) -> Result<PcNetwork> {
        if dims.len() < 2 {
            return Err(PcnError::InvalidConfig(format!(
                "a network needs at least 2 layers, got dims of length {}",
                dims.len()
            )));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(PcnError::InvalidConfig("layer sizes must be positive".into()));
        }
        let weights = (0..dims.len() - 1)
            .map(|l| Arc::new(init_weights(dims[l], dims[l + 1], rng, scheme)))
            .collect();
        Ok(PcNetwork { dims: dims.to_vec(), weights, activation })
    }

    /// Build from explicit weight matrices; dims are inferred and validated
    /// for chain compatibility.
    pub fn from_weights(weights: Vec<Matrix>, activation: Activation) -> Result<PcNetwork> {
        if weights.is_empty() {
            return Err(PcnError::InvalidConfig("a network needs at least one weight matrix".into()));
        }
        let mut dims = Vec::with_capacity(weights.len() + 1);
        dims.push(weights[0].rows());
        for (l, w) in weights.iter().enumerate() {
            if w.rows() != dims[l] {
                return Err(PcnError::ShapeMismatch(format!(
                    "weight {l} has {} rows but layer {l} has size {}",
                    w.rows(),
                    dims[l]
                )));
            }
            dims.push(w.cols());
        }
        Ok(PcNetwork {
            dims,
            weights: weights.into_iter().map(Arc::new).collect(),
            activation,
        })
    }

    /// Number of weight matrices (layers run 0..=depth()).
    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weight(&self, l: usize) -> &Matrix {
        &self.weights[l]
    }

    /// Owned copies of all weights (oracle and test plumbing).
    pub fn weights_cloned(&self) -> Vec<Matrix> {
        self.weights.iter().map(|w| (**w).clone()).collect()
    }

    pub(crate) fn weight_arc(&self, l: usize) -> Arc<Matrix> {
        Arc::clone(&self.weights[l])
    }

    pub(crate) fn set_weight(&mut self, l: usize, w: Matrix) {
        debug_assert_eq!(w.shape(), (self.dims[l], self.dims[l + 1]));
        self.weights[l] = Arc::new(w);
    }

    /// Top-down predictions for every layer of `state`: `mu[l] = w[l] *
    /// f(x[l+1])` for `l < L` and `mu[L] = x[L]`.
    pub fn predictions(&self, state: &NetworkState) -> Result<Vec<Matrix>> {
        let depth = self.depth();
        let mut mus = Vec::with_capacity(depth + 1);
        for l in 0..depth {
            let fx = self.activation.apply(state.value(l + 1));
            mus.push(self.weights[l].matmul(&fx).map_err(|e| at_layer(e, l))?);
        }
        mus.push(state.value(depth).clone());
        Ok(mus)
    }

    /// Deterministic feedforward readout: propagate `inputs` down the
    /// hierarchy with `x[l] = w[l] * f(x[l+1])` and return the layer-0
    /// values. This is the test-time path for every training schedule.
    pub fn readout(&self, inputs: &Matrix) -> Result<Matrix> {
        let depth = self.depth();
        if inputs.rows() != self.dims[depth] {
            return Err(PcnError::ShapeMismatch(format!(
                "readout input has {} rows, network expects {}",
                inputs.rows(),
                self.dims[depth]
            )));
        }
        let mut x = self.weights[depth - 1]
            .matmul(&self.activation.apply(inputs))
            .map_err(|e| at_layer(e, depth - 1))?;
        for l in (0..depth - 1).rev() {
            x = self.weights[l]
                .matmul(&self.activation.apply(&x))
                .map_err(|e| at_layer(e, l))?;
        }
        Ok(x)
    }
}

/// Tag a numerics-level divergence with the layer it belongs to.
pub(crate) fn at_layer(e: PcnError, layer: usize) -> PcnError {
    match e {
        PcnError::Divergence { layer: None, context } => {
            PcnError::Divergence { layer: Some(layer), context }
        }
        other => other,
    }
}

/// Values, errors, and cached activations for one batch.
///
/// Invariants: `values[l]` is `dims[l] × batch`; `errors` and `fx` mirror
/// the value shapes; `errors[L]` is identically zero; `clamped[l]` marks
/// layers that inference must not move; errors and `fx` are always current
/// with respect to the values and the weights of the network that last
/// touched the state.
#[derive(Debug, Clone)]
pub struct NetworkState {
    pub(crate) values: Vec<Arc<Matrix>>,
    pub(crate) errors: Vec<Arc<Matrix>>,
    pub(crate) fx: Vec<Arc<Matrix>>,
    pub(crate) clamped: Vec<bool>,
    batch: usize,
}

impl NetworkState {
    /// Feedforward initialization: clamp `inputs` at the top layer and set
    /// every layer below to its prediction, which makes all errors exactly
    /// zero. No layer other than the top is clamped.
    pub fn feedforward_init(net: &PcNetwork, inputs: &Matrix) -> Result<NetworkState> {
        let depth = net.depth();
        if inputs.rows() != net.dims()[depth] {
            return Err(PcnError::ShapeMismatch(format!(
                "input has {} rows, network expects {}",
                inputs.rows(),
                net.dims()[depth]
            )));
        }
        let batch = inputs.cols();
        let mut values = vec![Arc::new(Matrix::zeros(1, 1)); depth + 1];
        values[depth] = Arc::new(inputs.clone());
        for l in (0..depth).rev() {
            let fx = net.activation().apply(&values[l + 1]);
            values[l] = Arc::new(net.weight(l).matmul(&fx).map_err(|e| at_layer(e, l))?);
        }
        let mut clamped = vec![false; depth + 1];
        clamped[depth] = true;
        let mut state = NetworkState {
            values,
            errors: Vec::new(),
            fx: Vec::new(),
            clamped,
            batch,
        };
        state.refresh_errors(net)?;
        Ok(state)
    }

    /// Generative initialization: clamp `data` at layer 0 and start every
    /// hidden and top layer at zero (a deterministic symmetric start; the
    /// weights break symmetry). Errors are refreshed before returning.
    pub fn generative_init(net: &PcNetwork, data: &Matrix) -> Result<NetworkState> {
        let depth = net.depth();
        if data.rows() != net.dims()[0] {
            return Err(PcnError::ShapeMismatch(format!(
                "data has {} rows, layer 0 has size {}",
                data.rows(),
                net.dims()[0]
            )));
        }
        let batch = data.cols();
        let mut values = Vec::with_capacity(depth + 1);
        values.push(Arc::new(data.clone()));
        for l in 1..=depth {
            values.push(Arc::new(Matrix::zeros(net.dims()[l], batch)));
        }
        let mut clamped = vec![false; depth + 1];
        clamped[0] = true;
        let mut state = NetworkState {
            values,
            errors: Vec::new(),
            fx: Vec::new(),
            clamped,
            batch,
        };
        state.refresh_errors(net)?;
        Ok(state)
    }

    /// Clamp layer 0 to `targets` (supervised training). The prediction
    /// `mu[0]` is unchanged, so only the layer-0 error needs recomputing —
    /// no matrix products are involved.
    pub fn clamp_output(&mut self, net: &PcNetwork, targets: &Matrix) -> Result<()> {
        if targets.rows() != net.dims()[0] || targets.cols() != self.batch {
            return Err(PcnError::ShapeMismatch(format!(
                "targets are {}x{}, layer 0 wants {}x{}",
                targets.rows(),
                targets.cols(),
                net.dims()[0],
                self.batch
            )));
        }
        // mu[0] = x[0] - eps[0] under the current state.
        let mu0 = self.values[0].sub(&self.errors[0]).map_err(|e| at_layer(e, 0))?;
        self.values[0] = Arc::new(targets.clone());
        self.errors[0] = Arc::new(targets.sub(&mu0).map_err(|e| at_layer(e, 0))?);
        self.fx[0] = Arc::new(net.activation().apply(targets));
        self.clamped[0] = true;
        Ok(())
    }

    /// Recompute every error and cached activation from the current values
    /// and weights. Setup-path only: the engine's refresh phase does the
    /// same work with accounting.
    pub fn refresh_errors(&mut self, net: &PcNetwork) -> Result<()> {
        let depth = net.depth();
        if self.values.len() != depth + 1 {
            return Err(PcnError::ShapeMismatch(format!(
                "state has {} layers, network has {}",
                self.values.len(),
                depth + 1
            )));
        }
        let mut fx = Vec::with_capacity(depth + 1);
        for v in &self.values {
            fx.push(Arc::new(net.activation().apply(v)));
        }
        let mut errors = Vec::with_capacity(depth + 1);
        for l in 0..depth {
            let (_, eps) = kernels::predict_err_layer(net.weight(l), &self.values[l], &fx[l + 1])
                .map_err(|e| at_layer(e, l))?;
            errors.push(Arc::new(eps));
        }
        errors.push(Arc::new(Matrix::zeros(net.dims()[depth], self.batch)));
        self.errors = errors;
        self.fx = fx;
        Ok(())
    }

    pub(crate) fn new_raw(
        values: Vec<Arc<Matrix>>,
        clamped: Vec<bool>,
        batch: usize,
    ) -> NetworkState {
        NetworkState { values, errors: Vec::new(), fx: Vec::new(), clamped, batch }
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn layer_count(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, l: usize) -> &Matrix {
        &self.values[l]
    }

    pub fn error(&self, l: usize) -> &Matrix {
        &self.errors[l]
    }

    pub fn is_clamped(&self, l: usize) -> bool {
        self.clamped[l]
    }

    /// `F = 1/2 * sum_l ||eps[l]||^2`, summed in layer order.
    pub fn energy(&self) -> f64 {
        let mut acc = 0.0;
        for e in &self.errors {
            acc += e.frobenius_sq();
        }
        0.5 * acc
    }

    pub(crate) fn value_arc(&self, l: usize) -> Arc<Matrix> {
        Arc::clone(&self.values[l])
    }

    pub(crate) fn error_arc(&self, l: usize) -> Arc<Matrix> {
        Arc::clone(&self.errors[l])
    }

    pub(crate) fn fx_arc(&self, l: usize) -> Arc<Matrix> {
        Arc::clone(&self.fx[l])
    }
}
