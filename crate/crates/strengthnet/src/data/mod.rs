//! Corpus plumbing: manifests, feature stores, ground-truth derivation,
//! dataset fusion and splits, and padded/masked batches.
//!
//! The flow mirrors the pipeline: a TSV manifest names utterances; a
//! [`FeatureStore`] holds their cached spectrograms; per-(dataset,
//! emotion) rankers fill the manifest's strength column; fusion splits
//! each dataset 8:1:1 stratified by emotion and concatenates; batching
//! pads to the longest utterance per batch with an explicit mask.

mod batch;
mod features;
mod ground_truth;
mod manifest;
mod split;

pub use batch::{make_batches, Batch};
pub use features::FeatureStore;
pub use ground_truth::{derive_ground_truth, RankerSet};
pub use manifest::{CorpusManifest, ManifestRecord};
pub use split::fuse_and_split;

use thiserror::Error;

/// Every label a manifest may carry.
pub const EMOTION_LABELS: [&str; 5] = ["angry", "happy", "neutral", "sad", "surprise"];

/// Classes the model predicts, in one-hot order. Neutral carries no
/// strength and never enters model batches.
pub const MODEL_EMOTIONS: [&str; 4] = ["angry", "happy", "sad", "surprise"];

/// Neutral utterances anchor rankers but are excluded from model training.
pub const NEUTRAL_LABEL: &str = "neutral";

/// Position of a label in the model's output vector.
pub fn emotion_class_index(label: &str) -> Option<usize> {
    MODEL_EMOTIONS.iter().position(|&e| e == label)
}

/// One-hot target for a model-trainable label.
pub fn emotion_one_hot(label: &str) -> Option<Vec<f32>> {
    emotion_class_index(label).map(|i| {
        let mut v = vec![0.0; MODEL_EMOTIONS.len()];
        v[i] = 1.0;
        v
    })
}

/// Errors from manifest parsing, feature lookup, derivation, splitting,
/// and batching.
#[derive(Debug, Error)]
pub enum DataError {
    /// Manifest violates its format or invariants.
    #[error("bad manifest: {0}")]
    BadManifest(String),
    /// No ranker trained for a (dataset, emotion) that has utterances.
    #[error("no ranker for dataset '{dataset}' emotion '{emotion}'")]
    MissingRanker { dataset: String, emotion: String },
    /// Splitting requested over no records.
    #[error("empty manifest: nothing to split")]
    EmptyManifest,
    /// An utterance has no cached feature.
    #[error("missing feature for utterance '{0}'")]
    MissingFeature(String),
    /// Batching received a spectrogram that was never normalized.
    #[error("feature for utterance '{0}' is not normalized")]
    UnnormalizedFeature(String),
    #[error(transparent)]
    Audio(#[from] crate::audio::AudioError),
    #[error(transparent)]
    Rank(#[from] crate::rank::RankError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Convenience alias for data-pipeline results.
pub type DataResult<V> = Result<V, DataError>;
