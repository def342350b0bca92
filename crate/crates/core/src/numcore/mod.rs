//! Dense tensors, reverse-mode differentiation, Adam, dropout and a
//! finite-difference gradient checker.

mod adam;
mod dropout;
mod gradcheck;
mod graph;
mod real;
mod rng;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use dropout::{dropout, dropout_mask};
pub use gradcheck::{grad_check, GradCheckReport, DEFAULT_GRADCHECK_EPSILON};
pub use graph::{Gradients, Graph, GraphNode, OpKind, Var};
pub use real::Real;
pub use rng::{RngStream, SeedSplitter};
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TensorError {
    #[error("invalid shape {shape:?}: dimensions must be positive")]
    InvalidShape { shape: Vec<usize> },
    #[error("data length {got} does not match shape (expected {expected})")]
    DataLength { expected: usize, got: usize },
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    ShapeMismatch { op: &'static str, left: Vec<usize>, right: Vec<usize> },
    #[error("{op}: axis {axis} out of range for rank {rank}")]
    InvalidAxis { op: &'static str, axis: usize, rank: usize },
    #[error("slice [{start}, {start}+{len}) out of range for axis of size {size}")]
    SliceOutOfRange { start: usize, len: usize, size: usize },
    #[error("{op}: no inputs")]
    EmptyInput { op: &'static str },
    #[error("{op} produced a non-finite value")]
    NonFinite { op: &'static str },
    #[error("expected a one-element tensor, got shape {shape:?}")]
    NotScalar { shape: Vec<usize> },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl TensorError {
    pub(crate) fn shape<T: Real>(op: &'static str, left: &Tensor<T>, right: &Tensor<T>) -> Self {
        TensorError::ShapeMismatch { op, left: left.shape().to_vec(), right: right.shape().to_vec() }
    }
}
