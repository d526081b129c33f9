//! Minimal RIFF/WAVE codec for 16 kHz mono PCM16 audio.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use super::{AudioError, AudioResult};

/// Decoded waveform. Samples are PCM16 values divided by 32768, so they
/// lie in [-1, 1).
#[derive(Debug, Clone)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub utterance_id: String,
}

pub const REQUIRED_SAMPLE_RATE: u32 = 16_000;

fn read_u32(b: &[u8], at: usize) -> Option<u32> {
    Some(u32::from_le_bytes(b.get(at..at + 4)?.try_into().ok()?))
}

fn read_u16(b: &[u8], at: usize) -> Option<u16> {
    Some(u16::from_le_bytes(b.get(at..at + 2)?.try_into().ok()?))
}

/// Decode a WAV file. Only RIFF/WAVE, PCM, 16-bit, mono, 16000 Hz is
/// accepted; any other rate, width, or channel count must be converted
/// before it reaches this crate. The utterance id is the file stem.
pub fn load_wav(path: &Path) -> AudioResult<AudioClip> {
    let bytes = fs::read(path)?;
    let name = path.display().to_string();
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::NotWav(name));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    let mut at = 12usize;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let size = read_u32(&bytes, at + 4).ok_or_else(|| AudioError::NotWav(name.clone()))? as usize;
        let body_end = at + 8 + size;
        if body_end > bytes.len() {
            return Err(AudioError::NotWav(format!("{name}: truncated chunk {:?}", id)));
        }
        let body = &bytes[at + 8..body_end];
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(AudioError::NotWav(format!("{name}: short fmt chunk")));
                }
                fmt = Some((
                    read_u16(body, 0).unwrap(),
                    read_u16(body, 2).unwrap(),
                    read_u32(body, 4).unwrap(),
                    read_u16(body, 14).unwrap(),
                ));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // Chunk bodies are word-aligned.
        at = body_end + (size & 1);
    }

    let (format, channels, rate, bits) =
        fmt.ok_or_else(|| AudioError::NotWav(format!("{name}: missing fmt chunk")))?;
    if format != 1 || bits != 16 {
        return Err(AudioError::UnsupportedFormat(format!(
            "{name}: need PCM 16-bit, got format {format} with {bits} bits"
        )));
    }
    if channels != 1 {
        return Err(AudioError::UnsupportedFormat(format!(
            "{name}: need mono, got {channels} channels"
        )));
    }
    if rate != REQUIRED_SAMPLE_RATE {
        return Err(AudioError::UnsupportedFormat(format!(
            "{name}: need {REQUIRED_SAMPLE_RATE} Hz, got {rate} Hz"
        )));
    }
    let data = data.ok_or_else(|| AudioError::NotWav(format!("{name}: missing data chunk")))?;
    if data.is_empty() {
        return Err(AudioError::UnsupportedFormat(format!("{name}: empty data chunk")));
    }

    let samples: Vec<f32> = data
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]) as f32 / 32768.0)
        .collect();
    let utterance_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| name.clone());
    Ok(AudioClip { samples, sample_rate: rate, utterance_id })
}

/// Encode samples (clamped to [-1, 1]) as a mono PCM16 WAV file.
pub fn write_wav(path: &Path, samples: &[f32], sample_rate: u32) -> AudioResult<()> {
    let data_len = samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&out)?;
    Ok(())
}
