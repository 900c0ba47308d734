//! Pointwise activation functions and their derivatives.

use super::Matrix;

/// Activation applied to layer values before they are weighted into a
/// prediction. The derivative convention at kinks follows the usual
/// framework default: `relu'(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
    /// `f(x) = x`; turns the network into a linear generative model, which
    /// several oracles rely on.
    Identity,
}

impl Activation {
    pub fn apply_scalar(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Identity => x,
        }
    }

    pub fn derivative_scalar(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    /// Elementwise `f(x)`. Finite inputs map to finite outputs for every
    /// variant, so this cannot fail.
    pub fn apply(self, x: &Matrix) -> Matrix {
        let data = x.as_slice().iter().map(|&v| self.apply_scalar(v)).collect();
        Matrix::from_raw_unchecked(x.rows(), x.cols(), data)
    }

    /// Elementwise `f'(x)`.
    pub fn derivative(self, x: &Matrix) -> Matrix {
        let data = x.as_slice().iter().map(|&v| self.derivative_scalar(v)).collect();
        Matrix::from_raw_unchecked(x.rows(), x.cols(), data)
    }

    /// Stable identifier used by the checkpoint format.
    pub fn code(self) -> u8 {
        match self {
            Activation::Tanh => 0,
            Activation::Relu => 1,
            Activation::Identity => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Activation> {
        match code {
            0 => Some(Activation::Tanh),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Identity),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Option<Activation> {
        match name {
            "tanh" => Some(Activation::Tanh),
            "relu" => Some(Activation::Relu),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }
}
