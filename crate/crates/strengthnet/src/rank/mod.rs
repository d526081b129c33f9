//! Pairwise strength ranking.
//!
//! Emotion strength has no absolute labels, so it is learned from relative
//! comparisons: emotional utterances outrank neutral ones (ordered pairs),
//! while same-category utterances are treated as similarly strong (similar
//! pairs). A linear ranking function trained on those pairs scores every
//! utterance, and min-max normalization over the training scores turns raw
//! projections into [0,1] strength values used as ground truth downstream.

mod io;
mod oracle;
mod pairs;
mod solver;

pub use io::{read_ranking_model, write_ranking_model};
pub use oracle::brute_force_rank_oracle;
pub use pairs::{build_pair_sets, PairLimits, PairSets};
pub use solver::{score, train_ranker, RankerFit, RankingModel, SolverConfig, StrengthScore};

/// Errors from pair building, training, scoring, and model files.
#[derive(Debug, thiserror::Error)]
pub enum RankError {
    #[error("insufficient data for emotion '{emotion}': {neutral} neutral and {emotional} emotional utterances (need >=1 and >=2)")]
    InsufficientData {
        emotion: String,
        neutral: usize,
        emotional: usize,
    },
    #[error("degenerate features: {0}")]
    DegenerateFeatures(String),
    #[error("feature dimension mismatch: model has {expected}, input has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("brute-force oracle supports at most {max} dimensions, got {dim}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("bad ranking model file: {0}")]
    BadModelFile(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type RankResult<V> = Result<V, RankError>;

#[cfg(test)]
pub(crate) mod testutil {
    use super::PairSets;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Strong cluster separated from the weak one along dimension 0;
    /// dimension 1 is uninformative noise.
    pub(crate) fn separable_2d(
        n_strong: usize,
        n_weak: usize,
        n_ordered: usize,
        n_similar: usize,
        seed: u64,
    ) -> PairSets {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut features = Vec::new();
        for _ in 0..n_strong {
            features.push(vec![rng.gen_range(2.0..3.0), rng.gen_range(0.0..1.0)]);
        }
        for _ in 0..n_weak {
            features.push(vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]);
        }
        let mut ordered = Vec::with_capacity(n_ordered);
        for _ in 0..n_ordered {
            ordered.push((rng.gen_range(0..n_strong), n_strong + rng.gen_range(0..n_weak)));
        }
        let mut similar = Vec::with_capacity(n_similar);
        while similar.len() < n_similar {
            let group =
                if similar.len() % 2 == 0 { 0..n_strong } else { n_strong..n_strong + n_weak };
            let i = rng.gen_range(group.clone());
            let j = rng.gen_range(group);
            if i != j {
                similar.push((i, j));
            }
        }
        PairSets {
            ordered,
            similar,
            features,
            emotion: "happy".into(),
            dataset_id: "synthetic".into(),
        }
    }
}
