//! Checkpoint persistence.
//!
//! Layout, little-endian: magic "STNT", version u32, config block (pair
//! count u32, then length-prefixed key/value strings), normalization
//! block (channel count u32, means f32 x c, stds f32 x c), tensor block
//! (count u32, then per tensor: length-prefixed name, rank u32, dims
//! u32 x rank, f32 data). Serialization order is canonical, so identical
//! models produce identical bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::audio::NormStats;
use crate::autodiff::Tensor;

use super::config::StrengthNetConfig;
use super::params::ParameterSet;
use super::{ModelError, ModelResult};

const MAGIC: &[u8; 4] = b"STNT";
const VERSION: u32 = 1;
const MAX_STRING: usize = 4096;
const MAX_RANK: usize = 8;
const MAX_NUMEL: usize = 1 << 28;

fn corrupt(msg: impl Into<String>) -> ModelError {
    ModelError::CorruptCheckpoint(msg.into())
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> ModelResult<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|_| corrupt(format!("truncated {what}")))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_string<R: Read>(r: &mut R, what: &str) -> ModelResult<String> {
    let len = read_u32(r, what)? as usize;
    if len > MAX_STRING {
        return Err(corrupt(format!("{what} length {len} exceeds {MAX_STRING}")));
    }
    let mut bytes = vec![0u8; len];
    r.read_exact(&mut bytes).map_err(|_| corrupt(format!("truncated {what}")))?;
    String::from_utf8(bytes).map_err(|_| corrupt(format!("{what} is not UTF-8")))
}

fn read_f32s<R: Read>(r: &mut R, n: usize, what: &str) -> ModelResult<Vec<f32>> {
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes).map_err(|_| corrupt(format!("truncated {what}")))?;
    Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}

fn write_string<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

fn write_f32s<W: Write>(w: &mut W, values: &[f32]) -> std::io::Result<()> {
    for &v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Write parameters, architecture, and normalization stats to one file.
pub fn save_checkpoint(
    path: &Path,
    params: &ParameterSet,
    config: &StrengthNetConfig,
    stats: &NormStats,
) -> ModelResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;

    let pairs = config.to_pairs();
    w.write_all(&(pairs.len() as u32).to_le_bytes())?;
    for (key, value) in &pairs {
        write_string(&mut w, key)?;
        write_string(&mut w, value)?;
    }

    w.write_all(&(stats.means.len() as u32).to_le_bytes())?;
    write_f32s(&mut w, &stats.means)?;
    write_f32s(&mut w, &stats.stds)?;

    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for (name, tensor) in params.entries() {
        write_string(&mut w, name)?;
        w.write_all(&(tensor.shape().len() as u32).to_le_bytes())?;
        for &d in tensor.shape() {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        write_f32s(&mut w, tensor.data())?;
    }
    w.flush()?;
    Ok(())
}

/// Load a checkpoint, validating structure and parameter shapes against
/// the stored config.
pub fn load_checkpoint(
    path: &Path,
) -> ModelResult<(ParameterSet, StrengthNetConfig, NormStats)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| corrupt("truncated header"))?;
    if &magic != MAGIC {
        return Err(corrupt(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut r, "version")?;
    if version != VERSION {
        return Err(ModelError::VersionMismatch { found: version, expected: VERSION });
    }

    let pair_count = read_u32(&mut r, "config pair count")? as usize;
    if pair_count > 256 {
        return Err(corrupt(format!("implausible config pair count {pair_count}")));
    }
    let mut pairs = Vec::with_capacity(pair_count);
    for _ in 0..pair_count {
        let key = read_string(&mut r, "config key")?;
        let value = read_string(&mut r, "config value")?;
        pairs.push((key, value));
    }
    let config = StrengthNetConfig::from_pairs(&pairs)
        .map_err(|e| corrupt(format!("config block: {e}")))?;

    let channels = read_u32(&mut r, "norm channel count")? as usize;
    if channels != config.mel_channels {
        return Err(ModelError::ShapeMismatch(format!(
            "norm stats cover {channels} channels, config has {}",
            config.mel_channels
        )));
    }
    let means = read_f32s(&mut r, channels, "norm means")?;
    let stds = read_f32s(&mut r, channels, "norm stds")?;
    if means.iter().chain(&stds).any(|v| !v.is_finite()) {
        return Err(corrupt("non-finite normalization stats"));
    }
    let stats = NormStats { means, stds };

    let tensor_count = read_u32(&mut r, "tensor count")? as usize;
    if tensor_count > 4096 {
        return Err(corrupt(format!("implausible tensor count {tensor_count}")));
    }
    let mut entries = Vec::with_capacity(tensor_count);
    for _ in 0..tensor_count {
        let name = read_string(&mut r, "tensor name")?;
        let rank = read_u32(&mut r, "tensor rank")? as usize;
        if rank > MAX_RANK {
            return Err(corrupt(format!("tensor '{name}' has rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u32(&mut r, "tensor dim")? as usize);
        }
        let numel: usize = shape.iter().product();
        if numel == 0 || numel > MAX_NUMEL {
            return Err(corrupt(format!("tensor '{name}' has {numel} elements")));
        }
        let data = read_f32s(&mut r, numel, "tensor data")?;
        entries.push((name, Tensor::new(shape, data)));
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(corrupt("trailing bytes after tensors"));
    }

    let params = ParameterSet::from_entries(entries);
    params.validate_against(&config)?;
    Ok((params, config, stats))
}

/// Reject a checkpoint whose architecture differs from what the caller
/// was built for.
pub fn ensure_config_matches(
    loaded: &StrengthNetConfig,
    expected: &StrengthNetConfig,
) -> ModelResult<()> {
    if loaded != expected {
        let diffs: Vec<String> = loaded
            .to_pairs()
            .iter()
            .zip(expected.to_pairs())
            .filter(|(a, b)| a.1 != b.1)
            .map(|(a, b)| format!("{}: checkpoint {} vs expected {}", a.0, a.1, b.1))
            .collect();
        return Err(ModelError::ShapeMismatch(format!(
            "config disagreement: {}",
            diffs.join("; ")
        )));
    }
    Ok(())
}
