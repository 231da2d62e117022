//! Reverse-mode autodiff tensor engine: a linear tape of recorded
//! operations, replayed backwards to populate gradients, plus the Adam
//! optimizer and a finite-difference gradient checker.

mod adam;
mod gradcheck;
mod gru;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{grad_check, CoordCheck, GradCheckReport, FD_NOISE_FLOOR};
pub use gru::{gru_cell, GruVars, GruWeights};
pub use tape::{Tape, Var, PROB_FLOOR};
pub use tensor::{Real, Tensor};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("tensor shape {shape:?} expects {expected} elements, got {got}")]
    ElementCount {
        shape: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("{op}: incompatible shapes ({details})")]
    ShapeMismatch { op: &'static str, details: String },
    #[error("{op}: empty input")]
    EmptyInput { op: &'static str },
    #[error("{op}: index {index} out of range for length {len}")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        len: usize,
    },
    #[error("cross-entropy input is not a distribution (sum {sum}, min {min})")]
    NotADistribution { sum: f64, min: f64 },
    #[error("gold index {gold} out of range for {classes} classes")]
    GoldIndexOutOfRange { gold: usize, classes: usize },
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("conv1d: sequence of length {len} shorter than filter width {width}")]
    SequenceTooShort { len: usize, width: usize },
}
