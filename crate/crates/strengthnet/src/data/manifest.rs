//! Corpus manifests: one record per utterance, stored as TSV.
//!
//! Columns: utterance_id, wav_path, dataset_id, emotion, strength. The
//! strength column is empty until derived; neutral records keep it empty
//! forever, which is what excludes them from model batches.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use super::{DataError, DataResult, EMOTION_LABELS};

const HEADER: &str = "utterance_id\twav_path\tdataset_id\temotion\tstrength";

/// One utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    pub utterance_id: String,
    pub wav_path: String,
    pub dataset_id: String,
    pub emotion: String,
    /// Derived strength in [0,1]; `None` until derived or for neutral.
    pub strength: Option<f64>,
}

/// An ordered list of utterance records with unique ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusManifest {
    pub records: Vec<ManifestRecord>,
}

impl CorpusManifest {
    /// Wrap records, enforcing the manifest invariants.
    pub fn from_records(records: Vec<ManifestRecord>) -> DataResult<Self> {
        let manifest = CorpusManifest { records };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Unique ids, known emotion labels, non-empty fields, finite
    /// strengths in [0,1].
    pub fn validate(&self) -> DataResult<()> {
        let mut seen = HashSet::new();
        for r in &self.records {
            if r.utterance_id.is_empty() {
                return Err(DataError::BadManifest("empty utterance_id".into()));
            }
            if !seen.insert(r.utterance_id.as_str()) {
                return Err(DataError::BadManifest(format!(
                    "duplicate utterance_id '{}'",
                    r.utterance_id
                )));
            }
            if r.dataset_id.is_empty() {
                return Err(DataError::BadManifest(format!(
                    "record '{}': empty dataset_id",
                    r.utterance_id
                )));
            }
            if !EMOTION_LABELS.contains(&r.emotion.as_str()) {
                return Err(DataError::BadManifest(format!(
                    "record '{}': unknown emotion '{}'",
                    r.utterance_id, r.emotion
                )));
            }
            if let Some(s) = r.strength {
                if !s.is_finite() || !(0.0..=1.0).contains(&s) {
                    return Err(DataError::BadManifest(format!(
                        "record '{}': strength {s} outside [0,1]",
                        r.utterance_id
                    )));
                }
            }
            for (field, value) in
                [("utterance_id", &r.utterance_id), ("wav_path", &r.wav_path), ("dataset_id", &r.dataset_id)]
            {
                if value.contains(['\t', '\n', '\r']) {
                    return Err(DataError::BadManifest(format!(
                        "record '{}': {field} contains a tab or newline",
                        r.utterance_id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn read_tsv(path: &Path) -> DataResult<Self> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == HEADER => {}
            Some(h) => {
                return Err(DataError::BadManifest(format!(
                    "bad header '{h}', expected '{HEADER}'"
                )))
            }
            None => return Err(DataError::BadManifest("empty file".into())),
        }
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(DataError::BadManifest(format!(
                    "line {}: {} columns, expected 5",
                    i + 2,
                    cols.len()
                )));
            }
            let strength = if cols[4].is_empty() {
                None
            } else {
                Some(cols[4].parse::<f64>().map_err(|_| {
                    DataError::BadManifest(format!("line {}: bad strength '{}'", i + 2, cols[4]))
                })?)
            };
            records.push(ManifestRecord {
                utterance_id: cols[0].to_string(),
                wav_path: cols[1].to_string(),
                dataset_id: cols[2].to_string(),
                emotion: cols[3].to_string(),
                strength,
            });
        }
        Self::from_records(records)
    }

    pub fn write_tsv(&self, path: &Path) -> DataResult<()> {
        self.validate()?;
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.utterance_id);
            out.push('\t');
            out.push_str(&r.wav_path);
            out.push('\t');
            out.push_str(&r.dataset_id);
            out.push('\t');
            out.push_str(&r.emotion);
            out.push('\t');
            if let Some(s) = r.strength {
                out.push_str(&format!("{s:.17}"));
            }
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }
}
