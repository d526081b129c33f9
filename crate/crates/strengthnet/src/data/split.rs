//! Dataset fusion and stratified splitting.
//!
//! Each dataset is split on its own, stratified by emotion, then the
//! per-dataset splits are concatenated. Shuffle randomness is derived
//! from (seed, dataset, emotion) and records are put in a canonical
//! order first, so a dataset's split membership is identical whether it
//! is split alone or fused with others.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

use super::{CorpusManifest, DataError, DataResult, ManifestRecord};

/// Largest-remainder apportionment of `n` into parts proportional to
/// `ratio`; remainders tie toward earlier parts. Each count is within 1
/// of its exact quota and the counts sum to `n`.
fn apportion(n: usize, ratio: (u32, u32, u32)) -> [usize; 3] {
    let parts = [ratio.0 as usize, ratio.1 as usize, ratio.2 as usize];
    let total: usize = parts.iter().sum();
    let mut counts = [0usize; 3];
    let mut remainders = [(0usize, 0usize); 3];
    for i in 0..3 {
        counts[i] = n * parts[i] / total;
        remainders[i] = (n * parts[i] % total, i);
    }
    let assigned: usize = counts.iter().sum();
    let mut order = remainders;
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for k in 0..(n - assigned) {
        counts[order[k].1] += 1;
    }
    counts
}

/// Stable per-group seed from the global seed and the group's identity,
/// independent of platform and input order.
fn group_seed(seed: u64, dataset: &str, emotion: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(&seed.to_le_bytes());
    eat(dataset.as_bytes());
    eat(&[0xff]);
    eat(emotion.as_bytes());
    h
}

/// Split every dataset by `ratio` into train/val/test, stratified by
/// emotion, then concatenate the per-dataset splits.
pub fn fuse_and_split(
    manifests: &[CorpusManifest],
    ratio: (u32, u32, u32),
    seed: u64,
) -> DataResult<(CorpusManifest, CorpusManifest, CorpusManifest)> {
    if ratio.0 == 0 || (ratio.0 as u64 + ratio.1 as u64 + ratio.2 as u64) == 0 {
        return Err(DataError::BadManifest(format!("unusable split ratio {ratio:?}")));
    }
    let mut groups: BTreeMap<(String, String), Vec<&ManifestRecord>> = BTreeMap::new();
    for m in manifests {
        m.validate()?;
        for r in &m.records {
            groups.entry((r.dataset_id.clone(), r.emotion.clone())).or_default().push(r);
        }
    }
    if groups.is_empty() {
        return Err(DataError::EmptyManifest);
    }

    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for ((dataset, emotion), mut records) in groups {
        records.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));
        let mut rng = ChaCha8Rng::seed_from_u64(group_seed(seed, &dataset, &emotion));
        records.shuffle(&mut rng);
        let [n_train, n_val, _] = apportion(records.len(), ratio);
        for (i, r) in records.into_iter().enumerate() {
            let bucket =
                if i < n_train { &mut train } else if i < n_train + n_val { &mut val } else { &mut test };
            bucket.push(r.clone());
        }
    }
    Ok((
        CorpusManifest::from_records(train)?,
        CorpusManifest::from_records(val)?,
        CorpusManifest::from_records(test)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn manifest(dataset: &str, per_emotion: usize) -> CorpusManifest {
        let mut records = Vec::new();
        for emotion in ["angry", "happy", "neutral", "sad", "surprise"] {
            for i in 0..per_emotion {
                records.push(ManifestRecord {
                    utterance_id: format!("{dataset}-{emotion}-{i:03}"),
                    wav_path: format!("{dataset}/{emotion}/{i}.wav"),
                    dataset_id: dataset.to_string(),
                    emotion: emotion.to_string(),
                    strength: None,
                });
            }
        }
        CorpusManifest::from_records(records).unwrap()
    }

    fn ids(m: &CorpusManifest) -> HashSet<String> {
        m.records.iter().map(|r| r.utterance_id.clone()).collect()
    }

    #[test]
    fn hundred_utterances_split_80_10_10() {
        let m = manifest("setA", 20);
        let (train, val, test) = fuse_and_split(&[m], (8, 1, 1), 3).unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (80, 10, 10));
        // Stratified: each emotion contributes 16/2/2.
        for emotion in ["angry", "happy", "neutral", "sad", "surprise"] {
            let count = |m: &CorpusManifest| m.records.iter().filter(|r| r.emotion == emotion).count();
            assert_eq!((count(&train), count(&val), count(&test)), (16, 2, 2));
        }
    }

    #[test]
    fn splits_partition_the_input() {
        let m = manifest("setA", 13);
        let all = ids(&m);
        let (train, val, test) = fuse_and_split(&[m], (8, 1, 1), 11).unwrap();
        let (t, v, s) = (ids(&train), ids(&val), ids(&test));
        assert!(t.is_disjoint(&v) && t.is_disjoint(&s) && v.is_disjoint(&s));
        let union: HashSet<_> = t.union(&v).cloned().collect();
        let union: HashSet<_> = union.union(&s).cloned().collect();
        assert_eq!(union, all);
    }

    #[test]
    fn stratification_is_within_one_of_exact_ratio() {
        let m = manifest("setA", 13);
        let (train, val, test) = fuse_and_split(&[m], (8, 1, 1), 5).unwrap();
        for emotion in ["angry", "happy", "neutral", "sad", "surprise"] {
            let count =
                |m: &CorpusManifest| m.records.iter().filter(|r| r.emotion == emotion).count() as f64;
            assert!((count(&train) - 10.4).abs() <= 1.0);
            assert!((count(&val) - 1.3).abs() <= 1.0);
            assert!((count(&test) - 1.3).abs() <= 1.0);
        }
    }

    #[test]
    fn two_datasets_fuse_by_concatenation() {
        let (a, b) = (manifest("setA", 20), manifest("setB", 20));
        let (train, _, _) = fuse_and_split(&[a, b], (8, 1, 1), 9).unwrap();
        assert_eq!(train.len(), 160);
        assert!(train.records.iter().any(|r| r.dataset_id == "setA"));
        assert!(train.records.iter().any(|r| r.dataset_id == "setB"));
    }

    #[test]
    fn fusion_does_not_change_a_datasets_membership() {
        let (a, b) = (manifest("setA", 20), manifest("setB", 20));
        let alone = fuse_and_split(&[a.clone()], (8, 1, 1), 42).unwrap();
        let fused = fuse_and_split(&[a, b], (8, 1, 1), 42).unwrap();
        let only_a = |m: &CorpusManifest| {
            m.records
                .iter()
                .filter(|r| r.dataset_id == "setA")
                .map(|r| r.utterance_id.clone())
                .collect::<HashSet<_>>()
        };
        assert_eq!(only_a(&fused.0), ids(&alone.0));
        assert_eq!(only_a(&fused.1), ids(&alone.1));
        assert_eq!(only_a(&fused.2), ids(&alone.2));
    }

    #[test]
    fn same_seed_reproduces_membership_and_different_seed_moves_it() {
        let m = manifest("setA", 20);
        let s1 = fuse_and_split(&[m.clone()], (8, 1, 1), 7).unwrap();
        let s2 = fuse_and_split(&[m.clone()], (8, 1, 1), 7).unwrap();
        assert_eq!(s1.0, s2.0);
        assert_eq!(s1.1, s2.1);
        assert_eq!(s1.2, s2.2);
        let s3 = fuse_and_split(&[m], (8, 1, 1), 8).unwrap();
        assert_ne!(ids(&s1.1), ids(&s3.1));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(fuse_and_split(&[], (8, 1, 1), 0), Err(DataError::EmptyManifest)));
        let empty = CorpusManifest::default();
        assert!(matches!(
            fuse_and_split(&[empty], (8, 1, 1), 0),
            Err(DataError::EmptyManifest)
        ));
    }
}
