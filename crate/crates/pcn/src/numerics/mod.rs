//! Deterministic dense numerics: matrices, activations, and a frozen RNG.
//!
//! Everything downstream (schedules, engines, experiments) is built on the
//! guarantee that a computation here yields bit-identical results given the
//! same inputs, regardless of how work is scheduled. Concretely:
//!
//! * [`Matrix`] operations fix their floating-point evaluation order; matrix
//!   products always sum the inner dimension in ascending index order.
//! * [`Rng`] is a fully specified generator (SplitMix64-seeded
//!   xoshiro256++), so weight init and shuffles replay exactly from a seed.
//! * Public operations that compute new values verify that every output
//!   entry is finite and report a divergence error otherwise — numerical
//!   blow-ups are never silent.

mod activation;
mod matrix;
mod rng;

pub use activation::Activation;
pub use matrix::Matrix;
pub use rng::{init_weights, InitScheme, Rng};
