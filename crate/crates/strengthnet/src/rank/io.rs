//! Ranking model persistence.
//!
//! File layout, little-endian: magic "RANK", version u32, emotion string,
//! dataset id string (each u32 length + UTF-8 bytes), weight count u32,
//! the weights as f64, then score_min and score_max as f64.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::solver::RankingModel;
use super::{RankError, RankResult};

const MAGIC: &[u8; 4] = b"RANK";
const VERSION: u32 = 1;
const MAX_STRING: usize = 4096;
const MAX_DIM: usize = 1 << 24;

fn bad(msg: impl Into<String>) -> RankError {
    RankError::BadModelFile(msg.into())
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> RankResult<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|_| bad(format!("truncated {what}")))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R, what: &str) -> RankResult<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(|_| bad(format!("truncated {what}")))?;
    let v = f64::from_le_bytes(buf);
    if !v.is_finite() {
        return Err(bad(format!("non-finite {what}")));
    }
    Ok(v)
}

fn read_string<R: Read>(r: &mut R, what: &str) -> RankResult<String> {
    let len = read_u32(r, what)? as usize;
    if len > MAX_STRING {
        return Err(bad(format!("{what} length {len} exceeds {MAX_STRING}")));
    }
    let mut bytes = vec![0u8; len];
    r.read_exact(&mut bytes).map_err(|_| bad(format!("truncated {what}")))?;
    String::from_utf8(bytes).map_err(|_| bad(format!("{what} is not UTF-8")))
}

fn write_string<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

/// Serialize a trained ranking model.
pub fn write_ranking_model(path: &Path, model: &RankingModel) -> RankResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    write_string(&mut w, &model.emotion)?;
    write_string(&mut w, &model.dataset_id)?;
    w.write_all(&(model.w.len() as u32).to_le_bytes())?;
    for &v in &model.w {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&model.score_min.to_le_bytes())?;
    w.write_all(&model.score_max.to_le_bytes())?;
    w.flush()?;
    Ok(())
}

/// Load a model written by [`write_ranking_model`], validating structure,
/// finiteness, and the score-bound invariant.
pub fn read_ranking_model(path: &Path) -> RankResult<RankingModel> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != MAGIC {
        return Err(bad(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut r, "version")?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let emotion = read_string(&mut r, "emotion")?;
    let dataset_id = read_string(&mut r, "dataset id")?;
    let dim = read_u32(&mut r, "weight count")? as usize;
    if dim == 0 || dim > MAX_DIM {
        return Err(bad(format!("implausible weight count {dim}")));
    }
    let mut w = Vec::with_capacity(dim);
    for _ in 0..dim {
        w.push(read_f64(&mut r, "weight")?);
    }
    let score_min = read_f64(&mut r, "score_min")?;
    let score_max = read_f64(&mut r, "score_max")?;
    if !(score_max > score_min) {
        return Err(bad("score_max must exceed score_min"));
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(bad("trailing bytes after model"));
    }
    Ok(RankingModel { w, score_min, score_max, emotion, dataset_id })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn tmp(name: &str) -> std::path::PathBuf {
        std::env::temp_dir().join(format!("strengthnet-rank-{}-{name}", std::process::id()))
    }

    fn sample() -> RankingModel {
        RankingModel {
            w: vec![0.25, -1.5, 3.0e-7, 42.0],
            score_min: -1.25,
            score_max: 7.5,
            emotion: "angry".into(),
            dataset_id: "domain-a".into(),
        }
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let path = tmp("roundtrip.rank");
        write_ranking_model(&path, &sample()).unwrap();
        let back = read_ranking_model(&path).unwrap();
        assert_eq!(back, sample());
        for (a, b) in back.w.iter().zip(&sample().w) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        fs::remove_file(&path).unwrap();
    }

    #[test]
    fn corrupted_magic_is_rejected() {
        let path = tmp("magic.rank");
        write_ranking_model(&path, &sample()).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[1] = b'X';
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_ranking_model(&path), Err(RankError::BadModelFile(_))));
        fs::remove_file(&path).unwrap();
    }

    #[test]
    fn truncation_is_rejected() {
        let path = tmp("trunc.rank");
        write_ranking_model(&path, &sample()).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_ranking_model(&path), Err(RankError::BadModelFile(_))));
        fs::remove_file(&path).unwrap();
    }

    #[test]
    fn inverted_bounds_are_rejected() {
        let path = tmp("bounds.rank");
        let mut model = sample();
        model.score_min = 9.0;
        write_ranking_model(&path, &model).unwrap();
        assert!(matches!(read_ranking_model(&path), Err(RankError::BadModelFile(_))));
        fs::remove_file(&path).unwrap();
    }
}
