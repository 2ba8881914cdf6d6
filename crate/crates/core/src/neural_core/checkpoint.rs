//! Binary checkpoints: magic bytes, format version, config record, codebook
//! hash, then the raw parameter array. Everything little-endian; parameters
//! stored as f64 regardless of the in-memory precision.

use super::model::{Layout, Model, ModelConfig};
use super::scalar::Scalar;
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"BVPLCKP\x01";
const VERSION: u32 = 1;

pub fn save_checkpoint<T: Scalar>(model: &Model<T>, codebook_hash: u64, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let cfg = serde_json::to_vec(&model.cfg).map_err(|e| Error::data(e.to_string()))?;
    w.write_all(&(cfg.len() as u32).to_le_bytes())?;
    w.write_all(&cfg)?;
    w.write_all(&codebook_hash.to_le_bytes())?;
    w.write_all(&(model.params.len() as u64).to_le_bytes())?;
    for p in &model.params {
        w.write_all(&p.to_f64().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Load a checkpoint, verifying structure and, when given, the codebook
/// fingerprint. Returns the model and the stored hash.
pub fn load_checkpoint<T: Scalar>(
    path: &Path,
    expected_codebook_hash: Option<u64>,
) -> Result<(Model<T>, u64)> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::data("checkpoint truncated: missing magic"))?;
    if &magic != MAGIC {
        return Err(Error::data("not a checkpoint file (bad magic bytes)"));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::data(format!("unsupported checkpoint version {version}")));
    }
    let cfg_len = read_u32(&mut r)? as usize;
    if cfg_len > 1 << 20 {
        return Err(Error::data("unreasonable config record length"));
    }
    let mut cfg_bytes = vec![0u8; cfg_len];
    r.read_exact(&mut cfg_bytes)
        .map_err(|_| Error::data("checkpoint truncated: config record"))?;
    let cfg: ModelConfig = serde_json::from_slice(&cfg_bytes)
        .map_err(|e| Error::data(format!("bad config record: {e}")))?;
    cfg.validate()?;
    let stored_hash = read_u64(&mut r)?;
    if let Some(expected) = expected_codebook_hash {
        if expected != stored_hash {
            return Err(Error::data(format!(
                "codebook hash mismatch: checkpoint {stored_hash:#018x}, current {expected:#018x}"
            )));
        }
    }
    let n = read_u64(&mut r)? as usize;
    let layout = Layout::new(&cfg);
    if n != layout.total {
        return Err(Error::data(format!(
            "parameter count {n} does not match config ({} expected)",
            layout.total
        )));
    }
    let mut params = Vec::with_capacity(n);
    let mut buf = [0u8; 8];
    for i in 0..n {
        r.read_exact(&mut buf)
            .map_err(|_| Error::data(format!("checkpoint truncated at parameter {i}")))?;
        let v = f64::from_le_bytes(buf);
        if !v.is_finite() {
            return Err(Error::data(format!("non-finite parameter at index {i}")));
        }
        params.push(T::from_f64(v));
    }
    Ok((Model { cfg, layout, params }, stored_hash))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| Error::data("checkpoint truncated"))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|_| Error::data("checkpoint truncated"))?;
    Ok(u64::from_le_bytes(b))
}
