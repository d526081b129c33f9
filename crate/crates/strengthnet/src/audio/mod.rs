//! Audio decoding and feature extraction.
//!
//! The model consumes 80-channel log-mel spectrograms (50 ms frames,
//! 12.5 ms hop at 16 kHz); the strength rankers consume a fixed-length
//! vector of statistical functionals summarizing each utterance. Audio
//! enters as 16 kHz mono PCM16 WAV only; anything else is rejected so the
//! whole DSP path stays bit-reproducible.

mod cache;
mod functionals;
mod mel;
mod wav;

pub use cache::{read_mel_cache, read_norm_stats, write_mel_cache, write_norm_stats};
pub use functionals::{functional_features, FeatureMode, DERIVED_CHANNELS, FUNCTIONALS};
pub use mel::{
    mel_energies, mel_spectrogram, normalize_corpus, MelConfig, MelFilterbank, MelSpectrogram,
    NormStats,
};
pub use wav::{load_wav, write_wav, AudioClip};

use thiserror::Error;

/// Errors from audio decoding, feature extraction, and feature caches.
#[derive(Debug, Error)]
pub enum AudioError {
    /// The file is not a RIFF/WAVE container.
    #[error("{0}: not a WAV file")]
    NotWav(String),
    /// WAV is real but not 16 kHz mono PCM16; callers must preconvert.
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// Clip shorter than one analysis frame.
    #[error("clip too short: {samples} samples, need at least {needed}")]
    TooShort { samples: usize, needed: usize },
    /// Normalization statistics requested over zero spectrograms.
    #[error("cannot compute normalization statistics over an empty corpus")]
    EmptyCorpus,
    /// An operation that requires raw spectrograms received a normalized one.
    #[error("expected an unnormalized spectrogram")]
    AlreadyNormalized,
    /// Delta functionals need at least two frames.
    #[error("too few frames: {frames}, need at least {needed}")]
    TooFewFrames { frames: usize, needed: usize },
    /// A feature cache or stats file failed validation.
    #[error("bad cache file: {0}")]
    BadCache(String),
}

/// Convenience alias for audio results.
pub type AudioResult<V> = Result<V, AudioError>;
