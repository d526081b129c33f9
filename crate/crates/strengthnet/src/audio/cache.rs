//! Binary caches for extracted spectrograms and normalization stats.
//!
//! Mel cache file, little-endian: magic "MELF", version u32, frame count
//! u32, channel count u32, then frames x channels f32 values row-major.
//! Only raw (unnormalized) spectrograms may be cached so one file serves
//! any later normalization.
//!
//! Norm stats file: magic "NRMS", version u32, then 80 means followed by
//! 80 standard deviations, f32.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::mel::{MelSpectrogram, NormStats};
use super::{AudioError, AudioResult};

const MEL_MAGIC: &[u8; 4] = b"MELF";
const MEL_VERSION: u32 = 1;
const STATS_MAGIC: &[u8; 4] = b"NRMS";
const STATS_VERSION: u32 = 1;
const STATS_CHANNELS: usize = 80;

fn read_u32<R: Read>(r: &mut R, what: &str) -> AudioResult<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| AudioError::BadCache(format!("truncated {what}")))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f32s<R: Read>(r: &mut R, n: usize, what: &str) -> AudioResult<Vec<f32>> {
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes)
        .map_err(|_| AudioError::BadCache(format!("truncated {what}")))?;
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AudioError::BadCache(format!("non-finite value in {what}")));
    }
    Ok(values)
}

fn check_header<R: Read>(r: &mut R, magic: &[u8; 4], version: u32) -> AudioResult<()> {
    let mut got = [0u8; 4];
    r.read_exact(&mut got)
        .map_err(|_| AudioError::BadCache("truncated header".into()))?;
    if &got != magic {
        return Err(AudioError::BadCache(format!(
            "bad magic {:?}, expected {:?}",
            got, magic
        )));
    }
    let v = read_u32(r, "version")?;
    if v != version {
        return Err(AudioError::BadCache(format!(
            "unsupported version {v}, expected {version}"
        )));
    }
    Ok(())
}

/// Write a raw spectrogram to a cache file. Normalized input is refused
/// because stats are corpus-dependent and do not belong in the cache.
pub fn write_mel_cache(path: &Path, spec: &MelSpectrogram) -> AudioResult<()> {
    if spec.is_normalized() {
        return Err(AudioError::AlreadyNormalized);
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MEL_MAGIC)?;
    w.write_all(&MEL_VERSION.to_le_bytes())?;
    w.write_all(&(spec.frames() as u32).to_le_bytes())?;
    w.write_all(&(spec.channels() as u32).to_le_bytes())?;
    for &v in spec.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Read a spectrogram cache written by [`write_mel_cache`].
pub fn read_mel_cache(path: &Path) -> AudioResult<MelSpectrogram> {
    let mut r = BufReader::new(File::open(path)?);
    check_header(&mut r, MEL_MAGIC, MEL_VERSION)?;
    let frames = read_u32(&mut r, "frame count")? as usize;
    let channels = read_u32(&mut r, "channel count")? as usize;
    if channels == 0 || frames.checked_mul(channels).is_none() {
        return Err(AudioError::BadCache("implausible dimensions".into()));
    }
    let data = read_f32s(&mut r, frames * channels, "mel data")?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(AudioError::BadCache("trailing bytes after mel data".into()));
    }
    Ok(MelSpectrogram::new(frames, channels, data, false))
}

/// Write per-channel normalization stats.
pub fn write_norm_stats(path: &Path, stats: &NormStats) -> AudioResult<()> {
    if stats.means.len() != STATS_CHANNELS || stats.stds.len() != STATS_CHANNELS {
        return Err(AudioError::BadCache(format!(
            "norm stats must cover {STATS_CHANNELS} channels, got {}",
            stats.means.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(STATS_MAGIC)?;
    w.write_all(&STATS_VERSION.to_le_bytes())?;
    for &v in stats.means.iter().chain(stats.stds.iter()) {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Read normalization stats written by [`write_norm_stats`].
pub fn read_norm_stats(path: &Path) -> AudioResult<NormStats> {
    let mut r = BufReader::new(File::open(path)?);
    check_header(&mut r, STATS_MAGIC, STATS_VERSION)?;
    let means = read_f32s(&mut r, STATS_CHANNELS, "means")?;
    let stds = read_f32s(&mut r, STATS_CHANNELS, "stds")?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(AudioError::BadCache("trailing bytes after stats".into()));
    }
    Ok(NormStats { means, stds })
}
