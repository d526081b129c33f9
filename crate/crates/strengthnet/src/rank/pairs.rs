//! Ordered and similar pair construction.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{RankError, RankResult};

/// Caps on pair counts, applied after a seeded shuffle so the kept subset
/// is an unbiased deterministic sample.
#[derive(Debug, Clone, Copy)]
pub struct PairLimits {
    pub max_ordered: usize,
    pub max_similar: usize,
}

impl Default for PairLimits {
    fn default() -> Self {
        PairLimits { max_ordered: 5000, max_similar: 5000 }
    }
}

/// Training input for one ranker: a feature matrix plus index pairs.
///
/// `ordered` holds (stronger, weaker) pairs; `similar` holds pairs assumed
/// to carry comparable strength. Pairs index rows of `features`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSets {
    pub ordered: Vec<(usize, usize)>,
    pub similar: Vec<(usize, usize)>,
    pub features: Vec<Vec<f64>>,
    pub emotion: String,
    pub dataset_id: String,
}

impl PairSets {
    /// Checks index bounds, no self-pairs, and ordered/similar disjointness
    /// (as unordered pairs). Used by tests and debug assertions.
    pub fn is_well_formed(&self) -> bool {
        let m = self.features.len();
        let key = |&(i, j): &(usize, usize)| (i.min(j), i.max(j));
        let in_bounds = |&(i, j): &(usize, usize)| i < m && j < m && i != j;
        if !self.ordered.iter().all(in_bounds) || !self.similar.iter().all(in_bounds) {
            return false;
        }
        let ordered_keys: std::collections::HashSet<_> = self.ordered.iter().map(key).collect();
        self.similar.iter().all(|p| !ordered_keys.contains(&key(p)))
    }
}

/// Build pair sets for one target emotion against the neutral reference.
///
/// Every (emotional, neutral) combination becomes an ordered pair; every
/// within-category combination (neutral-neutral, emotional-emotional)
/// becomes a similar pair. Both lists are shuffled with the seed and
/// truncated to the limits.
///
/// `labels[i]` is the emotion of `features[i]`; rows with other labels are
/// ignored. Requires at least one neutral and two emotional utterances.
pub fn build_pair_sets(
    labels: &[String],
    features: &[Vec<f64>],
    emotion: &str,
    dataset_id: &str,
    neutral_label: &str,
    limits: PairLimits,
    seed: u64,
) -> RankResult<PairSets> {
    assert_eq!(labels.len(), features.len(), "one label per feature row");
    let neutral: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == neutral_label).collect();
    let emotional: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == emotion).collect();
    if neutral.is_empty() || emotional.len() < 2 {
        return Err(RankError::InsufficientData {
            emotion: emotion.to_string(),
            neutral: neutral.len(),
            emotional: emotional.len(),
        });
    }

    let mut ordered: Vec<(usize, usize)> = Vec::with_capacity(neutral.len() * emotional.len());
    for &e in &emotional {
        for &n in &neutral {
            ordered.push((e, n));
        }
    }
    let mut similar: Vec<(usize, usize)> = Vec::new();
    for group in [&neutral, &emotional] {
        for (a, &i) in group.iter().enumerate() {
            for &j in &group[a + 1..] {
                similar.push((i, j));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ordered.shuffle(&mut rng);
    similar.shuffle(&mut rng);
    ordered.truncate(limits.max_ordered);
    similar.truncate(limits.max_similar);

    let sets = PairSets {
        ordered,
        similar,
        features: features.to_vec(),
        emotion: emotion.to_string(),
        dataset_id: dataset_id.to_string(),
    };
    debug_assert!(sets.is_well_formed());
    Ok(sets)
}
