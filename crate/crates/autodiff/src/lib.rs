//! Dense matrix math with tape-based reverse-mode automatic differentiation.
//!
//! The tape records every forward operation; `Tape::backward` replays it in
//! reverse and appends the adjoint computation as ordinary tape nodes, so a
//! scalar built from a gradient can itself be differentiated. That second
//! pass is what the gradient-penalty term of the Wasserstein critic needs.
//!
//! Core types are generic over the scalar via [`Scalar`]; `f64` is the
//! default type parameter everywhere and the on-disk checkpoint format is
//! always little-endian `f64`.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod init;
pub mod matrix;
pub mod scalar;
pub mod stream;
pub mod tape;

pub use adam::{AdamConfig, AdamState};
pub use matrix::Matrix;
pub use scalar::Scalar;
pub use tape::{NodeId, Tape};

/// Single-precision alias; the pipeline itself runs on the `f64` default.
pub type Matrix32 = Matrix<f32>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: lhs is {lhs_rows}x{lhs_cols}, rhs is {rhs_rows}x{rhs_cols}")]
    ShapeMismatch {
        op: &'static str,
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_rows: usize,
        rhs_cols: usize,
    },
    #[error("{op} expects {expected}, got {rows}x{cols}")]
    BadShape {
        op: &'static str,
        expected: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("column range {start}..{end} out of bounds for width {cols}")]
    BadSlice {
        start: usize,
        end: usize,
        cols: usize,
    },
    #[error("matrix data length {len} does not match {rows}x{cols}")]
    BadLength { rows: usize, cols: usize, len: usize },
    #[error("non-finite value at index {index}: {value}")]
    NonFinite { index: usize, value: f64 },
    #[error("backward requires a scalar (1x1) output, got {rows}x{cols}")]
    NonScalarOutput { rows: usize, cols: usize },
    #[error("node id {0} is not on this tape")]
    UnknownNode(usize),
    #[error("non-finite gradient encountered; training halted ({context})")]
    DivergedGradient { context: String },
}

pub type Result<T> = std::result::Result<T, AutodiffError>;
