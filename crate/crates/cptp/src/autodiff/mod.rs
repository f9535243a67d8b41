//! Dense-tensor engine with reverse-mode differentiation.
//!
//! Operations are recorded eagerly on a [`Graph`]: forward values are
//! computed at insertion time and a backward pass replays the records in
//! reverse to accumulate gradients. One graph is built per example (or per
//! case) and dropped afterwards; sequence lengths vary, so nothing is reused
//! across steps.
//!
//! All arithmetic is 64-bit. Every op output is checked for NaN/Inf at the
//! op boundary.

mod gradcheck;
mod graph;

pub use gradcheck::{grad_check, GradCheckReport};
pub use graph::{DiffError, Graph, Tensor, TensorId};

pub type Result<T> = std::result::Result<T, DiffError>;
