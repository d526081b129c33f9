//! Deterministic synthetic corpus generation.
//!
//! Each utterance is a harmonic signal anchored at a neutral template
//! (200 Hz, mid rolloff). A strength parameter in [0,1] interpolates
//! pitch and rolloff from that anchor toward the emotion's own template
//! and deepens amplitude and pitch modulation, so strength zero sounds
//! neutral and every acoustic cue grows monotonically with strength.
//! The manifest leaves the strength column empty; the generator
//! parameter goes to a separate truth sidecar so pipeline-derived
//! scores can be compared against it without circularity.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audio::write_wav;
use crate::data::{CorpusManifest, ManifestRecord, EMOTION_LABELS, NEUTRAL_LABEL};
use crate::train::mix_seed;

pub const SAMPLE_RATE: u32 = 16_000;
/// Manifest file name inside a generated corpus directory.
pub const MANIFEST_FILE: &str = "manifest.tsv";
/// Hidden generator-parameter sidecar, kept out of the manifest.
pub const TRUTH_FILE: &str = "truth.tsv";

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("bad synth spec: {0}")]
    BadSpec(String),
    #[error("bad truth file: {0}")]
    BadTruth(String),
    #[error(transparent)]
    Audio(#[from] crate::audio::AudioError),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad spec json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type SynthResult<V> = Result<V, SynthError>;

fn default_duration_range() -> (f64, f64) {
    (0.3, 0.6)
}

fn default_dataset_id() -> String {
    "synth".into()
}

/// Recipe for one corpus. `seed` determines everything: per-utterance
/// strength parameters, durations, and noise.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SynthSpec {
    pub num_utterances: usize,
    /// Emotion labels cycled over the utterances.
    pub emotions: Vec<String>,
    /// Seconds, min..max inclusive.
    #[serde(default = "default_duration_range")]
    pub duration_range: (f64, f64),
    pub seed: u64,
    #[serde(default = "default_dataset_id")]
    pub dataset_id: String,
    /// Shifts every template's pitch and rolloff; two values give two
    /// acoustically distinct domains.
    #[serde(default)]
    pub timbre_shift: f64,
}

impl SynthSpec {
    pub fn validate(&self) -> SynthResult<()> {
        let bad = |msg: String| Err(SynthError::BadSpec(msg));
        if self.num_utterances == 0 {
            return bad("num_utterances must be positive".into());
        }
        if self.emotions.is_empty() {
            return bad("emotions must be non-empty".into());
        }
        for e in &self.emotions {
            if !EMOTION_LABELS.contains(&e.as_str()) {
                return bad(format!("unknown emotion '{e}'"));
            }
        }
        let mut seen = self.emotions.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.emotions.len() {
            return bad("duplicate emotion in list".into());
        }
        let (lo, hi) = self.duration_range;
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.1 || hi < lo {
            return bad(format!("duration range {lo}..{hi} invalid (min 0.1 s, min <= max)"));
        }
        if !self.timbre_shift.is_finite() || self.timbre_shift.abs() > 1.0 {
            return bad(format!("timbre_shift {} outside [-1,1]", self.timbre_shift));
        }
        if self.dataset_id.is_empty() {
            return bad("dataset_id must be non-empty".into());
        }
        Ok(())
    }

    pub fn read_json(path: &Path) -> SynthResult<SynthSpec> {
        let spec: SynthSpec = serde_json::from_str(&fs::read_to_string(path)?)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn write_json(&self, path: &Path) -> SynthResult<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}

struct Template {
    f0: f64,
    rolloff: f64,
    vibrato_rate: f64,
    am_rate: f64,
}

fn template(emotion: &str, strength: f64, timbre_shift: f64) -> Template {
    let (f0_full, rolloff_full, vibrato_full, am_full) = match emotion {
        "angry" => (180.0, 0.8, 5.5, 3.0),
        "happy" => (260.0, 1.2, 6.5, 4.0),
        "sad" => (140.0, 2.0, 4.5, 2.0),
        "surprise" => (320.0, 1.0, 7.5, 5.0),
        _ => (200.0, 1.5, 5.0, 3.0),
    };
    let neutral = (200.0, 1.5, 5.0, 3.0);
    let lerp = |anchor: f64, full: f64| anchor + strength * (full - anchor);
    Template {
        f0: lerp(neutral.0, f0_full) * (1.0 + 0.25 * timbre_shift),
        rolloff: (lerp(neutral.1, rolloff_full) + 0.8 * timbre_shift).max(0.3),
        vibrato_rate: lerp(neutral.2, vibrato_full),
        am_rate: lerp(neutral.3, am_full),
    }
}

/// One deterministic harmonic utterance. Strength moves pitch and
/// rolloff from the neutral anchor toward the emotion's template,
/// raises gain exponentially (0.2 * 3.25^strength, so log-energy is
/// linear in strength), deepens amplitude modulation (depth
/// 0.05 + 0.9*strength), and widens a pitch vibrato that every
/// utterance carries at baseline (relative depth 0.02 + 0.10*strength).
/// Every cue is smooth and monotone in the parameter, and the dominant
/// cues are near-linear in it after log-mel analysis.
pub fn synth_waveform(
    emotion: &str,
    strength: f64,
    duration_s: f64,
    timbre_shift: f64,
    noise_seed: u64,
) -> Vec<f32> {
    use std::f64::consts::PI;
    let tpl = template(emotion, strength, timbre_shift);
    let n = (duration_s * SAMPLE_RATE as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let n_harm = ((7_600.0 / tpl.f0) as usize).clamp(3, 12);
    let amps: Vec<f64> = (1..=n_harm).map(|h| (h as f64).powf(-tpl.rolloff)).collect();
    let norm: f64 = amps.iter().sum();
    let gain = 0.2 * 3.25f64.powf(strength);
    let am_depth = 0.05 + 0.9 * strength;
    let vib_depth = 0.02 + 0.10 * strength;
    let dt = 1.0 / SAMPLE_RATE as f64;
    let fade = (0.03 * SAMPLE_RATE as f64) as usize;
    let mut phase = 0.0f64;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 * dt;
        let f = tpl.f0 * (1.0 + vib_depth * (2.0 * PI * tpl.vibrato_rate * t).sin());
        phase += f * dt;
        let mut s = 0.0;
        for (h, &a) in amps.iter().enumerate() {
            let k = h as f64 + 1.0;
            s += a * (2.0 * PI * k * phase + 2.399963 * k).sin();
        }
        s /= norm;
        let am = 1.0 - am_depth * 0.5 * (1.0 + (2.0 * PI * tpl.am_rate * t).sin());
        let mut v = gain * s * am;
        if i < fade {
            v *= i as f64 / fade as f64;
        }
        if n - 1 - i < fade {
            v *= (n - 1 - i) as f64 / fade as f64;
        }
        v += 0.002 * (rng.gen::<f64>() * 2.0 - 1.0);
        out.push(v as f32);
    }
    out
}

/// A generated corpus on disk plus its in-memory descriptions.
#[derive(Debug)]
pub struct GeneratedCorpus {
    pub manifest: CorpusManifest,
    /// (utterance_id, strength_param) in generation order.
    pub truth: Vec<(String, f64)>,
    pub manifest_path: PathBuf,
    pub truth_path: PathBuf,
}

/// Generate WAVs under `out_dir/wavs`, a manifest with an empty strength
/// column, and the hidden truth sidecar. Manifest wav paths are relative
/// to the manifest's directory.
pub fn generate_corpus(spec: &SynthSpec, out_dir: &Path) -> SynthResult<GeneratedCorpus> {
    spec.validate()?;
    let wav_dir = out_dir.join("wavs");
    fs::create_dir_all(&wav_dir)?;
    let mut records = Vec::with_capacity(spec.num_utterances);
    let mut truth = Vec::with_capacity(spec.num_utterances);
    for i in 0..spec.num_utterances {
        let id = format!("{}_{:04}", spec.dataset_id, i);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[spec.seed, i as u64]));
        let emotion = &spec.emotions[i % spec.emotions.len()];
        let (lo, hi) = spec.duration_range;
        let duration = rng.gen_range(lo..=hi);
        let strength = if emotion == NEUTRAL_LABEL { 0.0 } else { rng.gen::<f64>() };
        let noise_seed = mix_seed(&[spec.seed, i as u64, 0x50D5]);
        let samples = synth_waveform(emotion, strength, duration, spec.timbre_shift, noise_seed);
        write_wav(&wav_dir.join(format!("{id}.wav")), &samples, SAMPLE_RATE)?;
        records.push(ManifestRecord {
            utterance_id: id.clone(),
            wav_path: format!("wavs/{id}.wav"),
            dataset_id: spec.dataset_id.clone(),
            emotion: emotion.clone(),
            strength: None,
        });
        truth.push((id, strength));
    }
    let manifest = CorpusManifest::from_records(records)?;
    let manifest_path = out_dir.join(MANIFEST_FILE);
    manifest.write_tsv(&manifest_path)?;
    let truth_path = out_dir.join(TRUTH_FILE);
    write_truth(&truth_path, &truth)?;
    Ok(GeneratedCorpus { manifest, truth, manifest_path, truth_path })
}

const TRUTH_HEADER: &str = "utterance_id\tstrength_param";

pub fn write_truth(path: &Path, truth: &[(String, f64)]) -> SynthResult<()> {
    let mut out = String::from(TRUTH_HEADER);
    out.push('\n');
    for (id, s) in truth {
        out.push_str(&format!("{id}\t{s:.17}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_truth(path: &Path) -> SynthResult<Vec<(String, f64)>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(TRUTH_HEADER) => {}
        other => return Err(SynthError::BadTruth(format!("unexpected header {other:?}"))),
    }
    let mut truth = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let (id, s) = line
            .split_once('\t')
            .ok_or_else(|| SynthError::BadTruth(format!("line {}: no tab", lineno + 2)))?;
        let s: f64 = s
            .parse()
            .map_err(|_| SynthError::BadTruth(format!("line {}: bad number '{s}'", lineno + 2)))?;
        truth.push((id.to_string(), s));
    }
    Ok(truth)
}
