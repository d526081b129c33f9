//! Strength ground-truth derivation.
//!
//! Each (dataset, emotion) pair owns its own ranker so score
//! normalization never mixes domains. Neutral utterances anchor the
//! rankers during their training but receive no strength here and stay
//! out of model batches.

use std::collections::BTreeMap;
use std::path::Path;

use crate::audio::FeatureMode;
use crate::rank::{read_ranking_model, score, RankingModel};

use super::{CorpusManifest, DataError, DataResult, FeatureStore, NEUTRAL_LABEL};

/// Rankers keyed by (dataset_id, emotion).
#[derive(Debug, Default)]
pub struct RankerSet {
    models: BTreeMap<(String, String), RankingModel>,
}

impl RankerSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a ranker under the dataset/emotion it was trained for,
    /// replacing any previous one.
    pub fn insert(&mut self, model: RankingModel) {
        self.models.insert((model.dataset_id.clone(), model.emotion.clone()), model);
    }

    pub fn get(&self, dataset_id: &str, emotion: &str) -> Option<&RankingModel> {
        self.models.get(&(dataset_id.to_string(), emotion.to_string()))
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Load every `*.rank` file in a directory.
    pub fn load_dir(dir: &Path) -> DataResult<Self> {
        let mut set = Self::new();
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "rank"))
            .collect();
        paths.sort();
        for path in paths {
            set.insert(read_ranking_model(&path)?);
        }
        Ok(set)
    }
}

/// Fill the manifest's strength column from each utterance's own
/// domain/emotion ranker. Neutral records keep an empty strength, which
/// marks them excluded from model training.
pub fn derive_ground_truth(
    manifest: &CorpusManifest,
    features: &FeatureStore,
    rankers: &RankerSet,
    mode: FeatureMode,
) -> DataResult<CorpusManifest> {
    let mut records = Vec::with_capacity(manifest.len());
    for r in &manifest.records {
        let mut out = r.clone();
        if r.emotion == NEUTRAL_LABEL {
            out.strength = None;
        } else {
            let ranker = rankers.get(&r.dataset_id, &r.emotion).ok_or_else(|| {
                DataError::MissingRanker {
                    dataset: r.dataset_id.clone(),
                    emotion: r.emotion.clone(),
                }
            })?;
            let x = features.functionals(&r.utterance_id, mode)?;
            out.strength = Some(score(ranker, &x)?.value);
        }
        records.push(out);
    }
    CorpusManifest::from_records(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::MelSpectrogram;
    use crate::data::ManifestRecord;
    use crate::rank::{build_pair_sets, train_ranker, PairLimits, SolverConfig};

    fn record(id: &str, dataset: &str, emotion: &str) -> ManifestRecord {
        ManifestRecord {
            utterance_id: id.to_string(),
            wav_path: format!("{id}.wav"),
            dataset_id: dataset.to_string(),
            emotion: emotion.to_string(),
            strength: None,
        }
    }

    /// Two frames whose mean level is `level`; the functional features
    /// then separate utterances by `level` monotonically.
    fn spec(level: f32) -> MelSpectrogram {
        let channels = 4;
        let mut data = vec![level; channels * 2];
        for (i, v) in data.iter_mut().enumerate() {
            *v += (i % channels) as f32 * 0.01;
        }
        MelSpectrogram::new(2, channels, data, false)
    }

    /// Corpus where emotional utterance levels rise with an index while
    /// neutral ones sit at zero, so the ranker must rank by level.
    fn fixture(dataset: &str) -> (CorpusManifest, FeatureStore, RankerSet) {
        let mut records = Vec::new();
        let mut store = FeatureStore::new();
        let mut labels = Vec::new();
        let mut feats = Vec::new();
        for i in 0..6 {
            let id = format!("{dataset}-h{i}");
            records.push(record(&id, dataset, "happy"));
            store.insert(id, spec(0.5 + i as f32 * 0.3)).unwrap();
            labels.push("happy".to_string());
        }
        for i in 0..4 {
            let id = format!("{dataset}-n{i}");
            records.push(record(&id, dataset, "neutral"));
            store.insert(id, spec(i as f32 * 0.01)).unwrap();
            labels.push("neutral".to_string());
        }
        for r in &records {
            feats.push(store.functionals(&r.utterance_id, FeatureMode::Reduced).unwrap());
        }
        let pairs = build_pair_sets(
            &labels,
            &feats,
            "happy",
            dataset,
            "neutral",
            PairLimits::default(),
            7,
        )
        .unwrap();
        let fit = train_ranker(&pairs, &SolverConfig::default()).unwrap();
        let mut rankers = RankerSet::new();
        rankers.insert(fit.model);
        (CorpusManifest::from_records(records).unwrap(), store, rankers)
    }

    #[test]
    fn derivation_fills_emotional_rows_and_skips_neutral() {
        let (manifest, store, rankers) = fixture("setA");
        let derived =
            derive_ground_truth(&manifest, &store, &rankers, FeatureMode::Reduced).unwrap();
        for r in &derived.records {
            if r.emotion == "neutral" {
                assert_eq!(r.strength, None);
            } else {
                let s = r.strength.expect("derived");
                assert!((0.0..=1.0).contains(&s));
            }
        }
        // Levels rise with the index, so derived strengths must too.
        let scores: Vec<f64> = derived
            .records
            .iter()
            .filter(|r| r.emotion == "happy")
            .map(|r| r.strength.unwrap())
            .collect();
        for w in scores.windows(2) {
            assert!(w[1] >= w[0], "strengths not monotone: {scores:?}");
        }
        // The strongest utterance sits at its ranker's score ceiling.
        assert_eq!(scores.last(), Some(&1.0));
    }

    #[test]
    fn missing_ranker_is_reported_with_its_key() {
        let (manifest, store, _) = fixture("setA");
        let err = derive_ground_truth(&manifest, &store, &RankerSet::new(), FeatureMode::Reduced)
            .unwrap_err();
        assert!(matches!(
            err,
            DataError::MissingRanker { ref dataset, ref emotion }
                if dataset == "setA" && emotion == "happy"
        ));
    }

    #[test]
    fn domains_are_normalized_independently() {
        let (ma, store_a, rankers_a) = fixture("setA");
        let (mb, mut store_b, rankers_b) = fixture("setB");
        // Shift domain B's features; domain A's derived scores must not move.
        for i in 0..6 {
            store_b
                .insert(format!("setB-h{i}"), spec(5.0 + i as f32 * 0.3))
                .unwrap();
        }
        let mut rankers = RankerSet::new();
        for set in [rankers_a, rankers_b] {
            for (_, m) in set.models {
                rankers.insert(m);
            }
        }
        let mut store = FeatureStore::new();
        for (m, s) in [(&ma, &store_a), (&mb, &store_b)] {
            for r in &m.records {
                store
                    .insert(r.utterance_id.clone(), s.get_raw(&r.utterance_id).unwrap().clone())
                    .unwrap();
            }
        }
        let mut records = ma.records.clone();
        records.extend(mb.records.clone());
        let fused = CorpusManifest::from_records(records).unwrap();
        let derived = derive_ground_truth(&fused, &store, &rankers, FeatureMode::Reduced).unwrap();
        let alone = derive_ground_truth(&ma, &store_a, &rankers, FeatureMode::Reduced).unwrap();
        for (f, a) in derived.records.iter().zip(&alone.records) {
            assert_eq!(f.strength, a.strength, "domain A scores moved");
        }
    }
}
