//! Per-layer update kernels shared by the serial and layer-parallel
//! engines.
//!
//! Both engines call exactly these functions with exactly these operand
//! orders, which is what makes their trajectories bit-identical: a kernel
//! sees only the immutable pre-step snapshot of its inputs and returns a
//! fresh matrix, so scheduling cannot change any floating-point result.
//!
//! Evaluation orders are frozen:
//! * matrix products sum ascending over the inner index (see `Matrix`);
//! * the value update computes `x + gamma * (f'(x) * b - eps)` elementwise,
//!   in that literal order;
//! * the weight update computes `w * shrink + scale * g` elementwise with
//!   `shrink = 1 - alpha * weight_decay` and `scale = alpha / batch`.

use crate::numerics::{Activation, Matrix};
use crate::Result;

/// Prediction and error for one layer: `mu = w * fx_above`,
/// `eps = x - mu`. One counted matrix multiply.
pub(crate) fn predict_err_layer(
    w: &Matrix,
    x: &Matrix,
    fx_above: &Matrix,
) -> Result<(Matrix, Matrix)> {
    let mu = w.matmul(fx_above)?;
    let eps = x.sub(&mu)?;
    Ok((mu, eps))
}

/// Inference (value) update for one unclamped layer:
///
/// ```text
/// x·   = x + gamma * (-eps + f'(x) ∘ (w_belowᵀ · eps_below))
/// ```
///
/// `below` is `None` for layer 0, which has no layer underneath and
/// descends only its own error. The transposed product is the one counted
/// matrix multiply of this kernel.
pub(crate) fn value_update_layer(
    x: &Matrix,
    eps: &Matrix,
    below: Option<(&Matrix, &Matrix)>,
    activation: Activation,
    gamma: f64,
) -> Result<Matrix> {
    let n = x.as_slice().len();
    let mut out = Vec::with_capacity(n);
    match below {
        Some((w_below, eps_below)) => {
            let backprop = w_below.transpose().matmul(eps_below)?;
            let xs = x.as_slice();
            let es = eps.as_slice();
            let bs = backprop.as_slice();
            for i in 0..n {
                let fp = activation.derivative_scalar(xs[i]);
                out.push(xs[i] + gamma * (fp * bs[i] - es[i]));
            }
        }
        None => {
            let xs = x.as_slice();
            let es = eps.as_slice();
            for i in 0..n {
                out.push(xs[i] + gamma * (0.0 - es[i]));
            }
        }
    }
    let out = Matrix::from_raw_unchecked(x.rows(), x.cols(), out);
    out.ensure_finite("value update")?;
    Ok(out)
}

/// Weight update for one layer:
///
/// ```text
/// w· = w * (1 - alpha * weight_decay) + (alpha / batch) * eps · fx_aboveᵀ
/// ```
///
/// The outer-product accumulation `eps · fx_aboveᵀ` is a matrix multiply
/// over the batch dimension; it is *not* counted by the step ledger (the
/// complexity accounting tracks inference-phase products only).
pub(crate) fn weight_update_layer(
    w: &Matrix,
    eps: &Matrix,
    fx_above: &Matrix,
    alpha: f64,
    weight_decay: f64,
) -> Result<Matrix> {
    let grad = eps.matmul(&fx_above.transpose())?;
    let shrink = 1.0 - alpha * weight_decay;
    let scale = alpha / eps.cols() as f64;
    let ws = w.as_slice();
    let gs = grad.as_slice();
    let mut out = Vec::with_capacity(ws.len());
    for i in 0..ws.len() {
        out.push(ws[i] * shrink + scale * gs[i]);
    }
    let out = Matrix::from_raw_unchecked(w.rows(), w.cols(), out);
    out.ensure_finite("weight update")?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Activation;

    #[test]
    fn predict_err_layer_computes_mismatch() {
        let w = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let fx = Matrix::from_vec(2, 1, vec![0.5, 0.25]).unwrap();
        let x = Matrix::from_vec(2, 1, vec![1.0, 1.0]).unwrap();
        let (mu, eps) = predict_err_layer(&w, &x, &fx).unwrap();
        assert_eq!(mu.as_slice(), &[0.5, 0.5]);
        assert_eq!(eps.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn value_update_layer_zero_without_error_or_backprop() {
        let x = Matrix::from_vec(2, 1, vec![0.3, -0.7]).unwrap();
        let eps = Matrix::zeros(2, 1);
        let out = value_update_layer(&x, &eps, None, Activation::Tanh, 0.5).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn value_update_layer_descends_own_error_at_layer_zero() {
        let x = Matrix::from_vec(2, 1, vec![1.0, 2.0]).unwrap();
        let eps = Matrix::from_vec(2, 1, vec![0.4, -0.4]).unwrap();
        let out = value_update_layer(&x, &eps, None, Activation::Identity, 0.5).unwrap();
        assert_eq!(out.as_slice(), &[0.8, 2.2]);
    }

    #[test]
    fn weight_update_layer_averages_over_batch_and_decays() {
        // eps = [[1, 3]], fx_above = [[2, 4]] (1x2 layers, batch 2):
        // grad = 1*2 + 3*4 = 14; batch mean scale alpha/2.
        let w = Matrix::from_vec(1, 1, vec![10.0]).unwrap();
        let eps = Matrix::from_vec(1, 2, vec![1.0, 3.0]).unwrap();
        let fx = Matrix::from_vec(1, 2, vec![2.0, 4.0]).unwrap();
        let out = weight_update_layer(&w, &eps, &fx, 0.1, 0.5).unwrap();
        // shrink = 1 - 0.1*0.5 = 0.95; update = 10*0.95 + (0.1/2)*14 = 10.2
        assert!((out.get(0, 0) - 10.2).abs() < 1e-15);
    }
}
