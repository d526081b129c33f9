//! The strength assessment network.
//!
//! A stack of strided 2-D convolutions encodes a normalized mel
//! spectrogram into one 128-wide feature per frame. Two heads share that
//! encoder: the strength head (BiLSTM, two FC layers, sigmoid) emits a
//! per-frame score whose masked time-average is the utterance strength,
//! and the emotion head (BiLSTM, masked time-average, dense, softmax)
//! emits category probabilities. Training minimizes the unweighted sum of
//! frame-level strength MAE, utterance-level strength MAE, and emotion
//! cross-entropy.

mod checkpoint;
mod config;
mod loss;
mod net;
mod params;

pub use checkpoint::{ensure_config_matches, load_checkpoint, save_checkpoint};
pub use config::StrengthNetConfig;
pub use loss::{build_loss, total_loss, LossComponents, LossVars};
pub use net::{forward_staged, ForwardVars, ModelOutput, NetLossBuilder, StagedParams, StrengthNet};
pub use params::ParameterSet;

use crate::autodiff::DiffError;

/// Errors from configuration, forwarding, and checkpointing.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("checkpoint version {found}, this build reads {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("bad model config: {0}")]
    BadConfig(String),
    #[error("input spectrogram is not normalized")]
    UnnormalizedInput,
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type ModelResult<V> = Result<V, ModelError>;
