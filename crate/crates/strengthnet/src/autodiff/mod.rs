//! Minimal reverse-mode automatic differentiation core.
//!
//! Provides exactly the operations the strength/emotion model needs: 2-D
//! convolution over (time, frequency), dense layers, elementwise
//! activations, softmax, a bidirectional LSTM layer, masked time pooling,
//! dropout, and the two losses (masked MAE, categorical cross entropy).
//! Values are `f32` in training; [`gradcheck`] re-evaluates forward passes
//! in `f64` to compare analytic gradients against central finite
//! differences.
//!
//! A [`Tape`] records one forward computation. Calling
//! [`Tape::backward`] on a scalar loss populates gradients for every
//! tracked leaf. Tapes are single-threaded and are meant to be built,
//! differentiated, and dropped within one training step.

mod conv;
mod linalg;
mod lstm;
mod tensor;

pub mod adam;
pub mod gradcheck;
pub mod tape;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{
    gradient_check, max_relative_error, random_leaves, GradCheckOptions, GradCheckReport,
    LossBuilder,
};
pub use tape::{LstmDirVars, Tape, Var, PROB_CLAMP};
pub use tensor::{Real, Tensor};

use thiserror::Error;

/// Errors raised by tape construction, backward passes, and the optimizer.
#[derive(Debug, Error)]
pub enum DiffError {
    /// Operand shapes are incompatible with the requested operation.
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch {
        /// Operation that rejected its operands.
        op: &'static str,
        /// Human-readable description of the offending shapes.
        detail: String,
    },
    /// An operation produced a NaN or infinite value.
    #[error("non-finite value produced by {0}")]
    NonFiniteValue(&'static str),
    /// `backward` was called on a tensor that is not a single scalar.
    #[error("backward requires a scalar loss, got {0} elements")]
    NotScalarLoss(usize),
}

/// Convenience alias for autodiff results.
pub type DiffResult<V> = Result<V, DiffError>;
