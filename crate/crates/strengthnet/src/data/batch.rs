//! Padded, masked training batches.
//!
//! Utterances are shuffled per epoch, then stably sorted by length so
//! each batch pads only to its own longest member. Neutral records never
//! enter batches; they carry no strength target.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

use crate::audio::MelSpectrogram;
use crate::autodiff::Tensor;

use super::{
    emotion_one_hot, CorpusManifest, DataError, DataResult, ManifestRecord, MODEL_EMOTIONS,
    NEUTRAL_LABEL,
};

/// One batch: inputs padded to the batch's longest utterance, a 0/1
/// frame mask, and per-utterance targets.
#[derive(Debug, Clone)]
pub struct Batch {
    pub utterance_ids: Vec<String>,
    /// Batch x frames x channels, zero beyond each row's valid length.
    pub mel: Tensor<f32>,
    /// Batch x frames; 1 exactly on valid frames, which form a prefix.
    pub mask: Tensor<f32>,
    /// Strength targets in [0,1].
    pub gt_strength: Vec<f64>,
    /// Batch x classes one-hot emotion targets.
    pub gt_emotion: Tensor<f32>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.utterance_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterance_ids.is_empty()
    }

    pub fn t_max(&self) -> usize {
        self.mel.shape()[1]
    }

    pub fn channels(&self) -> usize {
        self.mel.shape()[2]
    }

    /// Valid frame count of row `i`, read off the mask prefix.
    pub fn valid_len(&self, i: usize) -> usize {
        let t = self.t_max();
        let row = &self.mask.data()[i * t..(i + 1) * t];
        row.iter().take_while(|&&v| v == 1.0).count()
    }

    /// Row `i` as a frames x channels x 1 model input (padding included;
    /// the forward pass masks it via the valid length).
    pub fn utterance_input(&self, i: usize) -> Tensor<f32> {
        let (t, c) = (self.t_max(), self.channels());
        let data = self.mel.data()[i * t * c..(i + 1) * t * c].to_vec();
        Tensor::new(vec![t, c, 1], data)
    }

    pub fn one_hot(&self, i: usize) -> &[f32] {
        let k = self.gt_emotion.shape()[1];
        &self.gt_emotion.data()[i * k..(i + 1) * k]
    }

    /// Mask is 0/1 prefix-form with at least one valid frame per row;
    /// shapes and target ranges agree.
    pub fn is_well_formed(&self) -> bool {
        let b = self.len();
        let (t, c) = (self.t_max(), self.channels());
        if b == 0 || t == 0 || c == 0 {
            return false;
        }
        if self.mel.shape() != [b, t, c]
            || self.mask.shape() != [b, t]
            || self.gt_strength.len() != b
            || self.gt_emotion.shape() != [b, MODEL_EMOTIONS.len()]
        {
            return false;
        }
        for i in 0..b {
            let row = &self.mask.data()[i * t..(i + 1) * t];
            let valid = row.iter().take_while(|&&v| v == 1.0).count();
            if valid == 0 || row[valid..].iter().any(|&v| v != 0.0) {
                return false;
            }
            let onehot = self.one_hot(i);
            if onehot.iter().sum::<f32>() != 1.0 || onehot.iter().any(|&v| v != 0.0 && v != 1.0) {
                return false;
            }
            if !self.gt_strength[i].is_finite() || !(0.0..=1.0).contains(&self.gt_strength[i]) {
                return false;
            }
        }
        true
    }
}

/// Build one epoch of batches: seeded shuffle, stable sort by length,
/// sequential chunks of `batch_size`, each padded to its own longest
/// member. Neutral records are skipped; every other record needs a
/// derived strength and a normalized feature.
pub fn make_batches(
    manifest: &CorpusManifest,
    features: &HashMap<String, MelSpectrogram>,
    batch_size: usize,
    seed: u64,
) -> DataResult<Vec<Batch>> {
    assert!(batch_size > 0, "batch_size must be positive");
    let mut trainable: Vec<&ManifestRecord> =
        manifest.records.iter().filter(|r| r.emotion != NEUTRAL_LABEL).collect();
    if trainable.is_empty() {
        return Err(DataError::EmptyManifest);
    }

    let mut channels = None;
    for r in &trainable {
        let spec = features
            .get(&r.utterance_id)
            .ok_or_else(|| DataError::MissingFeature(r.utterance_id.clone()))?;
        if !spec.is_normalized() {
            return Err(DataError::UnnormalizedFeature(r.utterance_id.clone()));
        }
        if r.strength.is_none() {
            return Err(DataError::BadManifest(format!(
                "record '{}' has no derived strength",
                r.utterance_id
            )));
        }
        match channels {
            None => channels = Some(spec.channels()),
            Some(c) if c != spec.channels() => {
                return Err(DataError::BadManifest(format!(
                    "mixed channel counts: {} vs {}",
                    c,
                    spec.channels()
                )))
            }
            _ => {}
        }
    }
    let channels = channels.expect("nonempty");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    trainable.shuffle(&mut rng);
    trainable.sort_by_key(|r| features[&r.utterance_id].frames());

    let mut batches = Vec::new();
    for chunk in trainable.chunks(batch_size) {
        let t_max = chunk.iter().map(|r| features[&r.utterance_id].frames()).max().unwrap();
        let b = chunk.len();
        let mut mel = vec![0.0f32; b * t_max * channels];
        let mut mask = vec![0.0f32; b * t_max];
        let mut gt_strength = Vec::with_capacity(b);
        let mut gt_emotion = vec![0.0f32; b * MODEL_EMOTIONS.len()];
        let mut ids = Vec::with_capacity(b);
        for (i, r) in chunk.iter().enumerate() {
            let spec = &features[&r.utterance_id];
            let t = spec.frames();
            mel[i * t_max * channels..i * t_max * channels + t * channels]
                .copy_from_slice(spec.data());
            mask[i * t_max..i * t_max + t].fill(1.0);
            gt_strength.push(r.strength.expect("checked above"));
            let onehot = emotion_one_hot(&r.emotion).expect("validated label");
            gt_emotion[i * MODEL_EMOTIONS.len()..(i + 1) * MODEL_EMOTIONS.len()]
                .copy_from_slice(&onehot);
            ids.push(r.utterance_id.clone());
        }
        let batch = Batch {
            utterance_ids: ids,
            mel: Tensor::new(vec![b, t_max, channels], mel),
            mask: Tensor::new(vec![b, t_max], mask),
            gt_strength,
            gt_emotion: Tensor::new(vec![b, MODEL_EMOTIONS.len()], gt_emotion),
        };
        debug_assert!(batch.is_well_formed());
        batches.push(batch);
    }
    Ok(batches)
}
