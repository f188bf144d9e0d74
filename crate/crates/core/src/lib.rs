//! Lipschitz bounds for generalized scattering networks on sampled 1-D
//! signals.
//!
//! A network is a layered graph of filter convolutions feeding blocks that
//! apply a pointwise nonlinearity, aggregate branches with a pointwise
//! p-norm, or multiply two branches. Every block can emit an output through
//! the layer's low-pass atom. [`bounds`] estimates the Lipschitz constant of
//! the resulting feature map three ways: a product of per-layer Bessel
//! bounds, a backpropagated product of filter L¹ norms, and a Monte-Carlo
//! witnessed ratio.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod signal;
pub mod filters;
pub mod network;
pub mod propagate;
pub mod builtin;
pub mod bounds;

pub use num_complex::Complex64;
