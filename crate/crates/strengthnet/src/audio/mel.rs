//! Log-mel spectrogram extraction and corpus normalization.

use rustfft::num_complex::Complex32;
use rustfft::FftPlanner;

use super::wav::AudioClip;
use super::{AudioError, AudioResult};

/// Analysis settings. Defaults give 50 ms frames and a 12.5 ms hop at
/// 16 kHz with 80 mel channels spanning 0 to 8 kHz.
#[derive(Debug, Clone)]
pub struct MelConfig {
    pub sample_rate: u32,
    pub frame_len: usize,
    pub hop: usize,
    pub fft_size: usize,
    pub channels: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub log_floor: f32,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            frame_len: 800,
            hop: 200,
            fft_size: 1024,
            channels: 80,
            fmin: 0.0,
            fmax: 8_000.0,
            log_floor: 1e-10,
        }
    }
}

impl MelConfig {
    /// Frames produced for a clip of `n` samples: 1 + floor((n-F)/H).
    pub fn frame_count(&self, n: usize) -> Option<usize> {
        if n < self.frame_len {
            None
        } else {
            Some(1 + (n - self.frame_len) / self.hop)
        }
    }
}

/// Grid of log-mel energies, `frames x channels` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    data: Vec<f32>,
    frames: usize,
    channels: usize,
    normalized: bool,
}

impl MelSpectrogram {
    pub fn new(frames: usize, channels: usize, data: Vec<f32>, normalized: bool) -> Self {
        assert_eq!(data.len(), frames * channels, "spectrogram shape mismatch");
        Self { data, frames, channels, normalized }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        &self.data[t * self.channels..(t + 1) * self.channels]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filterbank with unit peaks, evaluated at FFT bin
/// frequencies. Filter i rises over [edge_i, edge_i+1] and falls over
/// [edge_i+1, edge_i+2]; edges are uniform on the mel scale.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// Per filter: first touched FFT bin and the weights from there on.
    filters: Vec<(usize, Vec<f32>)>,
    centers: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(cfg: &MelConfig) -> Self {
        let n_edges = cfg.channels + 2;
        let (m_lo, m_hi) = (hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax));
        let edges: Vec<f64> = (0..n_edges)
            .map(|k| mel_to_hz(m_lo + (m_hi - m_lo) * k as f64 / (n_edges - 1) as f64))
            .collect();
        let bin_hz = cfg.sample_rate as f64 / cfg.fft_size as f64;
        let n_bins = cfg.fft_size / 2 + 1;

        let mut filters = Vec::with_capacity(cfg.channels);
        for ch in 0..cfg.channels {
            let (lo, mid, hi) = (edges[ch], edges[ch + 1], edges[ch + 2]);
            let mut start = None;
            let mut weights = Vec::new();
            for bin in 0..n_bins {
                let f = bin as f64 * bin_hz;
                let w = if f > lo && f <= mid {
                    (f - lo) / (mid - lo)
                } else if f > mid && f < hi {
                    (hi - f) / (hi - mid)
                } else {
                    0.0
                };
                if w > 0.0 {
                    if start.is_none() {
                        start = Some(bin);
                    }
                    weights.push(w as f32);
                } else if start.is_some() {
                    break;
                }
            }
            filters.push((start.unwrap_or(0), weights));
        }
        Self { filters, centers: edges[1..=cfg.channels].to_vec() }
    }

    /// Peak frequency of each filter, in Hz.
    pub fn center_frequencies(&self) -> &[f64] {
        &self.centers
    }

    /// Weighted sums of a power spectrum, one value per mel channel.
    pub fn apply(&self, power: &[f32], out: &mut [f32]) {
        for ((start, weights), o) in self.filters.iter().zip(out) {
            let mut acc = 0.0f32;
            for (w, &p) in weights.iter().zip(&power[*start..]) {
                acc += w * p;
            }
            *o = acc;
        }
    }
}

/// Pre-log mel energies, `frames x channels` row-major: Hann window,
/// zero-padded FFT, power spectrum, triangular filterbank.
pub fn mel_energies(clip: &AudioClip, cfg: &MelConfig) -> AudioResult<(Vec<f32>, usize)> {
    let n = clip.samples.len();
    let frames = cfg
        .frame_count(n)
        .ok_or(AudioError::TooShort { samples: n, needed: cfg.frame_len })?;

    // Periodic Hann.
    let window: Vec<f32> = (0..cfg.frame_len)
        .map(|i| {
            0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / cfg.frame_len as f64).cos()) as f32
        })
        .collect();
    let bank = MelFilterbank::new(cfg);
    let fft = FftPlanner::<f32>::new().plan_fft_forward(cfg.fft_size);

    let n_bins = cfg.fft_size / 2 + 1;
    let mut buf = vec![Complex32::new(0.0, 0.0); cfg.fft_size];
    let mut scratch = vec![Complex32::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut power = vec![0.0f32; n_bins];
    let mut out = vec![0.0f32; frames * cfg.channels];

    for t in 0..frames {
        let frame = &clip.samples[t * cfg.hop..t * cfg.hop + cfg.frame_len];
        for (b, (&s, &w)) in buf.iter_mut().zip(frame.iter().zip(&window)) {
            *b = Complex32::new(s * w, 0.0);
        }
        for b in buf.iter_mut().skip(cfg.frame_len) {
            *b = Complex32::new(0.0, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (p, b) in power.iter_mut().zip(&buf) {
            *p = b.re * b.re + b.im * b.im;
        }
        bank.apply(&power, &mut out[t * cfg.channels..(t + 1) * cfg.channels]);
    }
    Ok((out, frames))
}

/// Log-mel spectrogram: `ln(max(energy, log_floor))` per cell.
pub fn mel_spectrogram(clip: &AudioClip, cfg: &MelConfig) -> AudioResult<MelSpectrogram> {
    let (mut data, frames) = mel_energies(clip, cfg)?;
    for v in data.iter_mut() {
        *v = v.max(cfg.log_floor).ln();
    }
    Ok(MelSpectrogram::new(frames, cfg.channels, data, false))
}

/// Per-channel mean and standard deviation of a training corpus, reused
/// verbatim at validation/test/inference time.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub means: Vec<f32>,
    pub stds: Vec<f32>,
}

/// Standard deviations below this are treated as this at apply time.
pub const STD_FLOOR: f32 = 1e-8;

impl NormStats {
    /// Compute per-channel statistics over every frame of every input.
    /// Accumulation runs in f64; the stored values are f32 so that a
    /// stats file roundtrip changes nothing.
    pub fn from_corpus(specs: &[MelSpectrogram]) -> AudioResult<Self> {
        let channels = match specs.first() {
            None => return Err(AudioError::EmptyCorpus),
            Some(s) => s.channels(),
        };
        if specs.iter().any(|s| s.is_normalized()) {
            return Err(AudioError::AlreadyNormalized);
        }
        let mut sum = vec![0.0f64; channels];
        let mut sum_sq = vec![0.0f64; channels];
        let mut count = 0u64;
        for spec in specs {
            for t in 0..spec.frames() {
                for (c, &v) in spec.frame(t).iter().enumerate() {
                    sum[c] += v as f64;
                    sum_sq[c] += (v as f64) * (v as f64);
                }
                count += 1;
            }
        }
        let n = count as f64;
        let means: Vec<f32> = sum.iter().map(|&s| (s / n) as f32).collect();
        let stds: Vec<f32> = sum_sq
            .iter()
            .zip(&sum)
            .map(|(&sq, &s)| {
                let mean = s / n;
                ((sq / n - mean * mean).max(0.0)).sqrt() as f32
            })
            .collect();
        Ok(Self { means, stds })
    }

    /// `(v - mean) / max(std, 1e-8)` per channel.
    pub fn apply(&self, spec: &MelSpectrogram) -> MelSpectrogram {
        assert_eq!(spec.channels(), self.means.len(), "channel count mismatch");
        let mut data = Vec::with_capacity(spec.data().len());
        for t in 0..spec.frames() {
            for (c, &v) in spec.frame(t).iter().enumerate() {
                data.push((v - self.means[c]) / self.stds[c].max(STD_FLOOR));
            }
        }
        MelSpectrogram::new(spec.frames(), spec.channels(), data, true)
    }
}

/// Normalize a corpus to zero mean and unit variance per channel,
/// returning the transformed spectrograms and the reusable statistics.
pub fn normalize_corpus(
    specs: &[MelSpectrogram],
) -> AudioResult<(Vec<MelSpectrogram>, NormStats)> {
    let stats = NormStats::from_corpus(specs)?;
    let normalized = specs.iter().map(|s| stats.apply(s)).collect();
    Ok((normalized, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clip(samples: Vec<f32>) -> AudioClip {
        AudioClip { samples, sample_rate: 16_000, utterance_id: "test".into() }
    }

    #[test]
    fn one_second_clip_yields_77_frames() {
        let c = clip(vec![0.1; 16000]);
        let spec = mel_spectrogram(&c, &MelConfig::default()).unwrap();
        assert_eq!(spec.frames(), 77);
        assert_eq!(spec.channels(), 80);
    }

    #[test]
    fn framing_bounds_hold_for_many_lengths() {
        let cfg = MelConfig::default();
        for n in [800usize, 801, 999, 1000, 1001, 4800, 9600, 16000, 16199] {
            let t = cfg.frame_count(n).unwrap();
            assert!(800 + (t - 1) * 200 <= n, "n={n}, t={t}");
            assert!(n < 800 + t * 200, "n={n}, t={t}");
        }
        assert!(cfg.frame_count(799).is_none());
    }

    #[test]
    fn too_short_clip_is_rejected() {
        let c = clip(vec![0.0; 799]);
        assert!(matches!(
            mel_spectrogram(&c, &MelConfig::default()),
            Err(AudioError::TooShort { samples: 799, needed: 800 })
        ));
    }

    #[test]
    fn silence_hits_the_log_floor_everywhere() {
        let c = clip(vec![0.0; 1600]);
        let spec = mel_spectrogram(&c, &MelConfig::default()).unwrap();
        let floor = 1e-10f32.ln();
        assert!(spec.data().iter().all(|&v| v == floor));
    }

    #[test]
    fn filterbank_rows_are_positive_overlapping_and_ordered() {
        let cfg = MelConfig::default();
        let bank = MelFilterbank::new(&cfg);
        let centers = bank.center_frequencies();
        assert_eq!(centers.len(), 80);
        for w in centers.windows(2) {
            assert!(w[1] > w[0], "centers must increase");
        }
        let ones = vec![1.0f32; cfg.fft_size / 2 + 1];
        let mut sums = vec![0.0f32; 80];
        bank.apply(&ones, &mut sums);
        assert!(sums.iter().all(|&s| s > 0.0), "every row must sum positive");

        // Adjacent triangles overlap: filters i and i+1 share a frequency
        // region because i's falling edge is i+1's rising edge.
        for i in 0..79 {
            let (s0, w0) = &bank.filters[i];
            let (s1, w1) = &bank.filters[i + 1];
            let end0 = s0 + w0.len();
            let end1 = s1 + w1.len();
            assert!(*s1 < end0 && *s0 < end1, "filters {i} and {} must overlap", i + 1);
        }
    }

    #[test]
    fn pure_1khz_tone_peaks_in_the_channel_nearest_1khz() {
        let c = clip(
            (0..16000)
                .map(|i| (2.0 * std::f32::consts::PI * 1000.0 * i as f32 / 16000.0).sin() * 0.5)
                .collect(),
        );
        let cfg = MelConfig::default();
        let spec = mel_spectrogram(&c, &cfg).unwrap();

        let centers = MelFilterbank::new(&cfg).center_frequencies().to_vec();
        let nearest = centers
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 1000.0).abs().partial_cmp(&(b.1 - 1000.0).abs()).unwrap())
            .unwrap()
            .0;
        assert_eq!(nearest, 28, "filterbank geometry moved");

        for t in 0..spec.frames() {
            let frame = spec.frame(t);
            let argmax = frame
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(argmax, nearest, "frame {t}");
        }
    }

    #[test]
    fn doubling_amplitude_quadruples_pre_log_energies() {
        let base: Vec<f32> =
            (0..3200).map(|i| ((i as f32) * 0.11).sin() * 0.2 + ((i as f32) * 0.031).cos() * 0.1).collect();
        let doubled: Vec<f32> = base.iter().map(|&v| v * 2.0).collect();
        let cfg = MelConfig::default();
        let (e1, _) = mel_energies(&clip(base), &cfg).unwrap();
        let (e2, _) = mel_energies(&clip(doubled), &cfg).unwrap();
        for (&a, &b) in e1.iter().zip(&e2) {
            if a > 0.0 {
                assert!(((b / (4.0 * a)) as f64 - 1.0).abs() <= 1e-9, "{b} vs 4*{a}");
            } else {
                assert_eq!(b, 0.0);
            }
        }
    }

    #[test]
    fn determinism_same_bytes_same_output() {
        let samples: Vec<f32> = (0..4000).map(|i| ((i as f32) * 0.07).sin() * 0.3).collect();
        let cfg = MelConfig::default();
        let a = mel_spectrogram(&clip(samples.clone()), &cfg).unwrap();
        let b = mel_spectrogram(&clip(samples), &cfg).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn two_value_corpus_normalizes_to_plus_minus_one() {
        let ones = MelSpectrogram::new(1, 80, vec![1.0; 80], false);
        let threes = MelSpectrogram::new(1, 80, vec![3.0; 80], false);
        let (normed, stats) = normalize_corpus(&[ones, threes]).unwrap();
        assert!(normed[0].data().iter().all(|&v| v == -1.0));
        assert!(normed[1].data().iter().all(|&v| v == 1.0));
        assert!(stats.means.iter().all(|&m| m == 2.0));
        assert!(stats.stds.iter().all(|&s| s == 1.0));
        assert!(normed[0].is_normalized());
    }

    #[test]
    fn constant_corpus_normalizes_to_zero() {
        let spec = MelSpectrogram::new(3, 80, vec![0.7; 240], false);
        let (normed, _) = normalize_corpus(&[spec]).unwrap();
        assert!(normed[0].data().iter().all(|&v| v.abs() < 1e-6));
    }

    #[test]
    fn normalization_post_check_means_near_zero_variance_near_one() {
        // A synthetic corpus with per-channel structure.
        let mut specs = Vec::new();
        for s in 0..5 {
            let frames = 40 + s * 7;
            let mut data = Vec::with_capacity(frames * 80);
            for t in 0..frames {
                for c in 0..80 {
                    let v = ((t * 31 + c * 17 + s * 101) % 97) as f32 * 0.3 - 10.0 + c as f32;
                    data.push(v);
                }
            }
            specs.push(MelSpectrogram::new(frames, 80, data, false));
        }
        let (normed, _) = normalize_corpus(&specs).unwrap();
        let total_frames: usize = normed.iter().map(|s| s.frames()).sum();
        for c in 0..80 {
            let mut sum = 0.0f64;
            let mut sum_sq = 0.0f64;
            for spec in &normed {
                for t in 0..spec.frames() {
                    let v = spec.frame(t)[c] as f64;
                    sum += v;
                    sum_sq += v * v;
                }
            }
            let mean = sum / total_frames as f64;
            let var = sum_sq / total_frames as f64 - mean * mean;
            assert!(mean.abs() < 1e-6, "channel {c} mean {mean}");
            assert!((var - 1.0).abs() < 1e-3, "channel {c} var {var}");
        }
    }

    #[test]
    fn empty_corpus_is_rejected() {
        assert!(matches!(normalize_corpus(&[]), Err(AudioError::EmptyCorpus)));
    }

    #[test]
    fn renormalizing_is_rejected() {
        let spec = MelSpectrogram::new(1, 80, vec![1.0; 80], false);
        let (normed, _) = normalize_corpus(std::slice::from_ref(&spec)).unwrap();
        assert!(matches!(normalize_corpus(&normed), Err(AudioError::AlreadyNormalized)));
    }
}
