//! Speech emotion strength assessment.
//!
//! The crate derives continuous emotion-strength ground truth from ranked
//! audio pairs, extracts mel-spectrogram features, trains a CNN-BiLSTM
//! multi-task network that predicts an utterance strength score together
//! with the emotion category, and evaluates the result. A synthetic
//! corpus generator makes the whole pipeline runnable without external
//! speech data; see the `examples/` directory for end-to-end walkthroughs.

pub mod audio;
pub mod autodiff;
pub mod data;
pub mod eval;
pub mod model;
pub mod rank;
pub mod synth;
pub mod train;
