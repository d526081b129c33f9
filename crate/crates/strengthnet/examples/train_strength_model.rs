//! Trains the strength model on a small synthetic corpus whose ground
//! truth comes from pairwise rankers, then round-trips the checkpoint.

use std::path::Path;

use strengthnet::audio::{load_wav, mel_spectrogram, FeatureMode, MelConfig, NormStats};
use strengthnet::data::{
    derive_ground_truth, fuse_and_split, FeatureStore, RankerSet, MODEL_EMOTIONS, NEUTRAL_LABEL,
};
use strengthnet::model::{load_checkpoint, save_checkpoint, StrengthNet, StrengthNetConfig};
use strengthnet::rank::{build_pair_sets, train_ranker, PairLimits, SolverConfig};
use strengthnet::synth::{generate_corpus, SynthSpec};
use strengthnet::train::{fit, write_training_log, FitOptions, TrainingConfig};

fn main() {
    let dir = Path::new("target/example-train");
    std::fs::remove_dir_all(dir).ok();

    let spec = SynthSpec {
        num_utterances: 40,
        emotions: ["angry", "happy", "neutral"].iter().map(|s| s.to_string()).collect(),
        duration_range: (0.25, 0.35),
        seed: 17,
        dataset_id: "train-demo".into(),
        timbre_shift: 0.0,
    };
    let generated = generate_corpus(&spec, &dir.join("corpus")).unwrap();

    let cfg = MelConfig::default();
    let mut store = FeatureStore::new();
    for record in &generated.manifest.records {
        let clip = load_wav(&dir.join("corpus").join(&record.wav_path)).unwrap();
        store.insert(record.utterance_id.clone(), mel_spectrogram(&clip, &cfg).unwrap()).unwrap();
    }

    // One ranker per emotion present in the corpus. Similar pairs are
    // disabled: this corpus draws strength uniformly inside each
    // category, so only ordered (emotional vs neutral) pairs hold.
    let labels: Vec<String> =
        generated.manifest.records.iter().map(|r| r.emotion.clone()).collect();
    let feats: Vec<Vec<f64>> = generated
        .manifest
        .records
        .iter()
        .map(|r| store.functionals(&r.utterance_id, FeatureMode::Full).unwrap())
        .collect();
    let limits = PairLimits { max_similar: 0, ..PairLimits::default() };
    let mut rankers = RankerSet::new();
    for emotion in MODEL_EMOTIONS {
        if !labels.iter().any(|l| l == emotion) {
            continue;
        }
        let pairs =
            build_pair_sets(&labels, &feats, emotion, "train-demo", NEUTRAL_LABEL, limits, 5)
                .unwrap();
        rankers.insert(train_ranker(&pairs, &SolverConfig::default()).unwrap().model);
    }

    let labeled = derive_ground_truth(&generated.manifest, &store, &rankers, FeatureMode::Full)
        .unwrap();
    let scored = labeled.records.iter().filter(|r| r.strength.is_some()).count();
    println!("derived strength for {scored}/{} utterances", labeled.len());

    let (train_m, val_m, _test_m) = fuse_and_split(&[labeled], (8, 1, 1), 3).unwrap();
    println!("split: {} train, {} val", train_m.len(), val_m.len());

    let raw: Vec<_> = generated
        .manifest
        .records
        .iter()
        .map(|r| store.get_raw(&r.utterance_id).unwrap().clone())
        .collect();
    let stats = NormStats::from_corpus(&raw).unwrap();

    let model_config = StrengthNetConfig::default();
    let train_config = TrainingConfig { max_epochs: 10, seed: 1, ..TrainingConfig::default() };
    let mut options = FitOptions::default();
    options.on_epoch = Some(Box::new(|log| {
        println!(
            "epoch {:>2}  frame {:.4}  utter {:.4}  class {:.4}  total {:.4}  val mae {:.4}  val acc {:.2}",
            log.epoch, log.l_f_str, log.l_u_str, log.l_cat, log.l_total, log.val_mae, log.val_acc
        );
    }));
    let outcome = fit(&model_config, &train_config, &train_m, &val_m, &store, &stats, options)
        .unwrap();
    println!(
        "best epoch {} with val mae {:.4}, early stop {}",
        outcome.best_epoch, outcome.best_val_mae, outcome.stopped_early
    );

    let ckpt = dir.join("model.ckpt");
    save_checkpoint(&ckpt, &outcome.model.params, &outcome.model.config, &stats).unwrap();
    write_training_log(&dir.join("training.log"), &outcome.log).unwrap();

    // Reload and confirm the persisted model scores identically.
    let (params, config, stats2) = load_checkpoint(&ckpt).unwrap();
    let reloaded = StrengthNet::new(config, params).unwrap();
    let probe = &val_m.records[0];
    let spec_n = store.normalized(&probe.utterance_id, &stats).unwrap();
    let spec_n2 = store.normalized(&probe.utterance_id, &stats2).unwrap();
    let a = outcome.model.infer(&spec_n).unwrap();
    let b = reloaded.infer(&spec_n2).unwrap();
    assert_eq!(a.utterance_score.to_bits(), b.utterance_score.to_bits());
    println!(
        "checkpoint round-trip: {} scores {:.4} before and after reload",
        probe.utterance_id, a.utterance_score
    );
}
