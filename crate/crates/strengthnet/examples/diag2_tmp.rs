use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use strengthnet::audio::{functional_features, load_wav, mel_spectrogram, FeatureMode, MelConfig, NormStats};
use strengthnet::data::{derive_ground_truth, fuse_and_split, FeatureStore, RankerSet, MODEL_EMOTIONS, NEUTRAL_LABEL};
use strengthnet::eval::{is_strong, spearman};
use strengthnet::model::StrengthNetConfig;
use strengthnet::rank::{build_pair_sets, train_ranker, PairLimits, SolverConfig};
use strengthnet::synth::{generate_corpus, SynthSpec};
use strengthnet::train::{fit, FitOptions, TrainingConfig};

fn main() {
    let t0 = Instant::now();
    let spec = SynthSpec {
        num_utterances: 200,
        emotions: ["angry", "happy", "neutral", "sad", "surprise"].iter().map(|s| s.to_string()).collect(),
        duration_range: (0.3, 0.5),
        seed: 5,
        dataset_id: "synthA".into(),
        timbre_shift: 0.0,
    };
    let dir = Path::new("/tmp/diag2/corpus");
    std::fs::remove_dir_all(dir).ok();
    let generated = generate_corpus(&spec, dir).unwrap();
    let hidden: HashMap<String, f64> = generated.truth.iter().cloned().collect();

    let cfg = MelConfig::default();
    let mut store = FeatureStore::new();
    for r in &generated.manifest.records {
        let clip = load_wav(&dir.join(&r.wav_path)).unwrap();
        store.insert(r.utterance_id.clone(), mel_spectrogram(&clip, &cfg).unwrap()).unwrap();
    }
    println!("[{:.1}s] mels done", t0.elapsed().as_secs_f64());

    let mut labels = Vec::new();
    let mut feats = Vec::new();
    for r in &generated.manifest.records {
        labels.push(r.emotion.clone());
        feats.push(store.functionals(&r.utterance_id, FeatureMode::Full).unwrap());
    }
    let limits = PairLimits { max_similar: 0, ..PairLimits::default() };
    let mut rankers = RankerSet::new();
    for emo in MODEL_EMOTIONS {
        let pairs = build_pair_sets(&labels, &feats, emo, "synthA", NEUTRAL_LABEL, limits, 7).unwrap();
        let fitted = train_ranker(&pairs, &SolverConfig::default()).unwrap();
        rankers.insert(fitted.model);
    }
    println!("[{:.1}s] rankers done", t0.elapsed().as_secs_f64());

    let derived = derive_ground_truth(&generated.manifest, &store, &rankers, FeatureMode::Full).unwrap();
    // derived-vs-hidden calibration over all emotional records
    let (mut ds, mut hs) = (Vec::new(), Vec::new());
    for r in &derived.records {
        if let Some(s) = r.strength {
            ds.push(s);
            hs.push(hidden[&r.utterance_id]);
        }
    }
    let agree = ds.iter().zip(&hs).filter(|(d, h)| is_strong(**d) == is_strong(**h)).count();
    println!(
        "derived GT: rho {:.3}, thr-agree {}/{}, mae {:.3}",
        spearman(&ds, &hs).unwrap(),
        agree,
        ds.len(),
        ds.iter().zip(&hs).map(|(d, h)| (d - h).abs()).sum::<f64>() / ds.len() as f64
    );

    let (train_m, val_m, test_m) = fuse_and_split(&[derived], (8, 1, 1), 11).unwrap();
    println!("split sizes: {} / {} / {}", train_m.len(), val_m.len(), test_m.len());

    let raw_specs: Vec<_> = generated.manifest.records.iter().map(|r| store.get_raw(&r.utterance_id).unwrap().clone()).collect();
    let stats = NormStats::from_corpus(&raw_specs).unwrap();

    let model_config = StrengthNetConfig::default();
    let train_config = TrainingConfig { max_epochs: 150, seed: 3, ..TrainingConfig::default() };
    let mut options = FitOptions::default();
    let t_train = Instant::now();
    options.on_epoch = Some(Box::new(move |log| {
        if log.epoch % 10 == 0 || log.epoch == 1 {
            println!(
                "  epoch {:>3} l_total {:.4} val_mae {:.4} val_acc {:.3} [{:.1}s]",
                log.epoch, log.l_total, log.val_mae, log.val_acc, t_train.elapsed().as_secs_f64()
            );
        }
    }));
    let outcome = fit(&model_config, &train_config, &train_m, &val_m, &store, &stats, options).unwrap();
    println!(
        "[{:.1}s] best epoch {} val_mae {:.4} stopped_early {}",
        t0.elapsed().as_secs_f64(),
        outcome.best_epoch,
        outcome.best_val_mae,
        outcome.stopped_early
    );

    // test split: Spearman(pred, hidden) and 0.5-threshold confusion vs hidden
    let net = outcome.model;
    let (mut preds, mut hids) = (Vec::new(), Vec::new());
    for r in &test_m.records {
        if r.emotion == NEUTRAL_LABEL {
            continue;
        }
        let spec_n = store.normalized(&r.utterance_id, &stats).unwrap();
        let out = net.infer(&spec_n).unwrap();
        preds.push(out.utterance_score as f64);
        hids.push(hidden[&r.utterance_id]);
    }
    let rho = spearman(&preds, &hids).unwrap();
    let diag = preds.iter().zip(&hids).filter(|(p, h)| is_strong(**p) == is_strong(**h)).count();
    println!(
        "TEST: n {} spearman-vs-hidden {:.3} thr-diagonal {}/{} ({:.3})",
        preds.len(),
        rho,
        diag,
        preds.len(),
        diag as f64 / preds.len() as f64
    );
    println!("total [{:.1}s]", t0.elapsed().as_secs_f64());
}
