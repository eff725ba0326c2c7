//! Reverse-mode automatic differentiation over a dynamic tape of dense
//! row-major tensors.
//!
//! A [`Tape`] is rebuilt for every optimization step. Values are computed
//! eagerly as operations are recorded; [`Tape::backward`] then walks the
//! nodes in reverse insertion order, which is a valid reverse topological
//! order because every node's inputs were recorded before it.

mod real;
mod tape;
mod tensor;

pub use real::Real;
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;

/// Guard added inside the logarithm of rendered intensities.
pub const LOG_EPS: f64 = 1e-5;
