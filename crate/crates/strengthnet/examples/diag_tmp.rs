use std::path::Path;

use strengthnet::audio::{functional_features, load_wav, mel_spectrogram, FeatureMode, MelConfig, FUNCTIONALS};
use strengthnet::data::NEUTRAL_LABEL;
use strengthnet::rank::{build_pair_sets, score, train_ranker, PairLimits, SolverConfig};
use strengthnet::synth::{generate_corpus, SynthSpec};

fn main() {
    let spec = SynthSpec {
        num_utterances: 200,
        emotions: ["angry", "happy", "neutral", "sad", "surprise"].iter().map(|s| s.to_string()).collect(),
        duration_range: (0.3, 0.5),
        seed: 5,
        dataset_id: "smokeA".into(),
        timbre_shift: 0.0,
    };
    let dir = Path::new("/tmp/diag/corpus");
    std::fs::remove_dir_all(dir).ok();
    let generated = generate_corpus(&spec, dir).unwrap();
    let cfg = MelConfig::default();
    let mut labels = Vec::new();
    let mut feats = Vec::new();
    let mut hidden = Vec::new();
    for (r, (_, h)) in generated.manifest.records.iter().zip(&generated.truth) {
        let clip = load_wav(&dir.join(&r.wav_path)).unwrap();
        let mel = mel_spectrogram(&clip, &cfg).unwrap();
        feats.push(functional_features(&mel, FeatureMode::Full).unwrap());
        labels.push(r.emotion.clone());
        hidden.push(*h);
    }
    let limits = PairLimits { max_similar: 0, ..PairLimits::default() };
    let pairs = build_pair_sets(&labels, &feats, "happy", "smokeA", NEUTRAL_LABEL, limits, 3).unwrap();
    println!("pairs: {} ordered, {} similar", pairs.ordered.len(), pairs.similar.len());
    for (tag, cfg) in [
        ("C=1.0 ", SolverConfig::default()),
        ("C=0.1 ", SolverConfig { c: 0.1, ..SolverConfig::default() }),
        ("C=0.03", SolverConfig { c: 0.03, ..SolverConfig::default() }),
        ("C=0.01", SolverConfig { c: 0.01, ..SolverConfig::default() }),
    ] {
        let fitted = train_ranker(&pairs, &cfg).unwrap();
        let m = &fitted.model;
        let mut rows: Vec<(f64, f64)> = Vec::new();
        for i in 0..labels.len() {
            if labels[i] == "happy" {
                rows.push((hidden[i], score(m, &feats[i]).unwrap().value));
            }
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let rho = strengthnet::eval::spearman(
            &rows.iter().map(|r| r.0).collect::<Vec<_>>(),
            &rows.iter().map(|r| r.1).collect::<Vec<_>>(),
        ).unwrap();
        let agree = rows.iter().filter(|(h, s)| (*h >= 0.5) == (*s >= 0.5)).count();
        let mae: f64 = rows.iter().map(|(h, s)| (h - s).abs()).sum::<f64>() / rows.len() as f64;
        println!("\n{tag}: converged {} iters {} rho {:.3} thr-agree {}/{} mae-vs-hidden {:.3}", fitted.converged, fitted.iterations, rho, agree, rows.len(), mae);
        for (h, s) in rows.iter().step_by(4) {
            println!("  hidden {h:.4} -> norm {s:.6}");
        }
    }
}
