//! In-memory feature store backed by mel cache files.
//!
//! Holds one raw (unnormalized) spectrogram per utterance, keyed by
//! utterance id. Model inputs are produced by applying corpus
//! normalization stats; ranker inputs are statistical functionals of the
//! raw spectrogram, which carry their own standardization inside the
//! ranker.

use std::collections::HashMap;
use std::path::Path;

use crate::audio::{
    functional_features, read_mel_cache, FeatureMode, MelSpectrogram, NormStats,
};

use super::{DataError, DataResult};

/// Raw spectrograms keyed by utterance id.
#[derive(Debug, Default)]
pub struct FeatureStore {
    specs: HashMap<String, MelSpectrogram>,
}

impl FeatureStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Load every `*.melf` file in a directory; the file stem is the
    /// utterance id.
    pub fn load_dir(dir: &Path) -> DataResult<Self> {
        let mut store = Self::new();
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "melf"))
            .collect();
        paths.sort();
        for path in paths {
            let id = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| DataError::BadManifest(format!("bad cache name {path:?}")))?
                .to_string();
            store.insert(id, read_mel_cache(&path)?)?;
        }
        Ok(store)
    }

    /// Raw spectrograms only; normalized inputs are derived, not stored.
    pub fn insert(&mut self, id: String, spec: MelSpectrogram) -> DataResult<()> {
        if spec.is_normalized() {
            return Err(DataError::UnnormalizedFeature(format!(
                "store holds raw spectrograms, got a normalized one for '{id}'"
            )));
        }
        self.specs.insert(id, spec);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.specs.contains_key(id)
    }

    pub fn get_raw(&self, id: &str) -> DataResult<&MelSpectrogram> {
        self.specs.get(id).ok_or_else(|| DataError::MissingFeature(id.to_string()))
    }

    /// Normalized model input for one utterance.
    pub fn normalized(&self, id: &str, stats: &NormStats) -> DataResult<MelSpectrogram> {
        Ok(stats.apply(self.get_raw(id)?))
    }

    /// Normalized model inputs for a whole split, computed once.
    pub fn normalized_all(&self, stats: &NormStats) -> HashMap<String, MelSpectrogram> {
        self.specs.iter().map(|(id, s)| (id.clone(), stats.apply(s))).collect()
    }

    /// Ranker feature vector for one utterance.
    pub fn functionals(&self, id: &str, mode: FeatureMode) -> DataResult<Vec<f64>> {
        Ok(functional_features(self.get_raw(id)?, mode)?)
    }
}
