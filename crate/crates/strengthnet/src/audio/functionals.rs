//! Fixed-length utterance descriptors for strength ranking.
//!
//! Each utterance is summarized by 13 statistical functionals applied to
//! a set of per-frame series derived from its (raw, unnormalized) log-mel
//! spectrogram. The layout is channel-major and fixed:
//!
//! series order (full mode): mel channels 0..80, then 32 derived series:
//! frame energy, spectral centroid, spectral flux, 29 banded delta-mel
//! means; reduced mode keeps only the 32 derived series.
//!
//! functional order per series: mean, std, min, max, range, median, first
//! quartile, third quartile, skewness, excess kurtosis, linear slope over
//! time, mean absolute delta, max absolute delta.
//!
//! `out[series * 13 + functional]`, computed in f64.

use super::mel::MelSpectrogram;
use super::{AudioError, AudioResult};

/// Functional names in output order.
pub const FUNCTIONALS: [&str; 13] = [
    "mean", "std", "min", "max", "range", "median", "q1", "q3", "skewness", "kurtosis", "slope",
    "mean_abs_delta", "max_abs_delta",
];

/// Derived per-frame series count: energy, centroid, flux, 29 delta bands.
pub const DERIVED_CHANNELS: usize = 32;

const DELTA_BANDS: usize = 29;

/// Which series feed the feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureMode {
    /// All mel channels plus the derived series (13 x 112 = 1456 values
    /// for 80-channel input).
    #[default]
    Full,
    /// Derived series only (13 x 32 = 416 values).
    Reduced,
}

impl FeatureMode {
    /// Output dimension for a given mel channel count.
    pub fn dim(&self, mel_channels: usize) -> usize {
        match self {
            FeatureMode::Full => FUNCTIONALS.len() * (mel_channels + DERIVED_CHANNELS),
            FeatureMode::Reduced => FUNCTIONALS.len() * DERIVED_CHANNELS,
        }
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
    } else {
        sorted[lo]
    }
}

fn functionals_of(series: &[f64], out: &mut [f64]) {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = (series.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n).max(0.0);
    let std = var.sqrt();
    let min = series.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = series.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let (skew, kurt) = if std < 1e-12 {
        (0.0, 0.0)
    } else {
        let m3 = series.iter().map(|&v| (v - mean).powi(3)).sum::<f64>() / n;
        let m4 = series.iter().map(|&v| (v - mean).powi(4)).sum::<f64>() / n;
        (m3 / std.powi(3), m4 / (var * var) - 3.0)
    };

    // Ordinary least squares against the frame index.
    let x_mean = (n - 1.0) / 2.0;
    let sxx = n * (n * n - 1.0) / 12.0;
    let sxy = series
        .iter()
        .enumerate()
        .map(|(t, &v)| (t as f64 - x_mean) * (v - mean))
        .sum::<f64>();
    let slope = sxy / sxx;

    let mut sum_ad = 0.0;
    let mut max_ad = 0.0f64;
    for w in series.windows(2) {
        let d = (w[1] - w[0]).abs();
        sum_ad += d;
        max_ad = max_ad.max(d);
    }
    let mean_ad = sum_ad / (n - 1.0);

    out.copy_from_slice(&[
        mean,
        std,
        min,
        max,
        max - min,
        quantile(&sorted, 0.5),
        quantile(&sorted, 0.25),
        quantile(&sorted, 0.75),
        skew,
        kurt,
        slope,
        mean_ad,
        max_ad,
    ]);
}

/// Summarize one spectrogram into its fixed-length feature vector.
/// Needs at least two frames (delta series are zero-length otherwise).
pub fn functional_features(spec: &MelSpectrogram, mode: FeatureMode) -> AudioResult<Vec<f64>> {
    let t_len = spec.frames();
    if t_len < 2 {
        return Err(AudioError::TooFewFrames { frames: t_len, needed: 2 });
    }
    let channels = spec.channels();
    let nf = FUNCTIONALS.len();

    let mut series: Vec<Vec<f64>> = Vec::with_capacity(mode.dim(channels) / nf);
    if mode == FeatureMode::Full {
        for c in 0..channels {
            series.push((0..t_len).map(|t| spec.frame(t)[c] as f64).collect());
        }
    }

    let mut energy = Vec::with_capacity(t_len);
    let mut centroid = Vec::with_capacity(t_len);
    let mut flux = Vec::with_capacity(t_len);
    let mut delta = vec![vec![0.0f64; channels]; t_len];
    for t in 0..t_len {
        let frame = spec.frame(t);
        energy.push(frame.iter().map(|&v| v as f64).sum::<f64>() / channels as f64);
        let mut w_sum = 0.0f64;
        let mut cw_sum = 0.0f64;
        for (c, &v) in frame.iter().enumerate() {
            let e = (v as f64).exp();
            w_sum += e;
            cw_sum += c as f64 * e;
        }
        centroid.push(cw_sum / w_sum);
        if t == 0 {
            flux.push(0.0);
        } else {
            let prev = spec.frame(t - 1);
            let mut sq = 0.0f64;
            for (c, (&v, &p)) in frame.iter().zip(prev).enumerate() {
                let d = v as f64 - p as f64;
                delta[t][c] = d;
                sq += d * d;
            }
            flux.push(sq.sqrt());
        }
    }
    series.push(energy);
    series.push(centroid);
    series.push(flux);
    for band in 0..DELTA_BANDS {
        let lo = channels * band / DELTA_BANDS;
        let hi = channels * (band + 1) / DELTA_BANDS;
        // With fewer channels than bands some bands hold no channels;
        // their series stays zero so the layout never shifts.
        if hi == lo {
            series.push(vec![0.0; t_len]);
            continue;
        }
        let width = (hi - lo) as f64;
        series.push(
            (0..t_len)
                .map(|t| delta[t][lo..hi].iter().sum::<f64>() / width)
                .collect(),
        );
    }

    let mut out = vec![0.0f64; series.len() * nf];
    for (s, v) in series.iter().enumerate() {
        functionals_of(v, &mut out[s * nf..(s + 1) * nf]);
    }
    Ok(out)
}
