//! Extracts log-mel spectrograms and fixed-length functional features
//! from a synthesized waveform, then normalizes with corpus statistics.

use std::path::Path;

use strengthnet::audio::{
    functional_features, load_wav, mel_spectrogram, write_wav, FeatureMode, MelConfig,
    MelSpectrogram, NormStats, FUNCTIONALS,
};
use strengthnet::synth::{synth_waveform, SAMPLE_RATE};

fn main() {
    let dir = Path::new("target/example-mel-features");
    std::fs::create_dir_all(dir).unwrap();

    // One strong and one weak rendition of the same emotion.
    let strong = synth_waveform("happy", 0.9, 0.5, 0.0, 7);
    let weak = synth_waveform("happy", 0.1, 0.5, 0.0, 7);
    write_wav(&dir.join("strong.wav"), &strong, SAMPLE_RATE).unwrap();
    write_wav(&dir.join("weak.wav"), &weak, SAMPLE_RATE).unwrap();

    let cfg = MelConfig::default();
    println!(
        "mel config: {} channels, fft {}, hop {} samples, frame {} samples",
        cfg.channels, cfg.fft_size, cfg.hop, cfg.frame_len
    );

    let clip_strong = load_wav(&dir.join("strong.wav")).unwrap();
    let clip_weak = load_wav(&dir.join("weak.wav")).unwrap();
    let spec_strong = mel_spectrogram(&clip_strong, &cfg).unwrap();
    let spec_weak = mel_spectrogram(&clip_weak, &cfg).unwrap();
    println!(
        "strong clip: {} samples -> {} frames x {} channels",
        clip_strong.samples.len(),
        spec_strong.frames(),
        spec_strong.channels()
    );

    // Frame energy separates the two renditions before any learning.
    let mean_log_energy = |spec: &MelSpectrogram| {
        spec.data().iter().map(|&v| v as f64).sum::<f64>() / spec.data().len() as f64
    };
    let e_strong = mean_log_energy(&spec_strong);
    let e_weak = mean_log_energy(&spec_weak);
    println!("mean log-mel: strong {e_strong:.3}, weak {e_weak:.3}");
    assert!(e_strong > e_weak);

    // Functionals compress variable-length series to a fixed vector.
    // Reduced covers the mel channels; Full adds derived series such as
    // per-frame energy, spectral centroid, flux and channel deltas.
    let reduced = functional_features(&spec_strong, FeatureMode::Reduced).unwrap();
    let full = functional_features(&spec_strong, FeatureMode::Full).unwrap();
    println!(
        "functional vectors: reduced {} dims, full {} dims ({} functionals per series)",
        reduced.len(),
        full.len(),
        FUNCTIONALS.len()
    );
    println!("functionals: {}", FUNCTIONALS.join(", "));

    // Normalization stats come from raw spectrograms of the whole corpus.
    let stats = NormStats::from_corpus(&[spec_strong.clone(), spec_weak.clone()]).unwrap();
    let normalized = stats.apply(&spec_strong);
    assert!(normalized.is_normalized());
    let (lo, hi) = normalized
        .data()
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    println!("normalized value range: [{lo:.3}, {hi:.3}]");
}
