//! Versioned binary checkpoint archive.
//!
//! Layout (all integers and reals little-endian; see
//! docs/checkpoint-format.md for the byte-level reference):
//!
//! ```text
//! magic            4 bytes   "SCKP"
//! version          u32       currently 1
//! arch             u8        0 fused_lstm, 1 price_lstm, 2 dnn
//! window           u32
//! feature_dim      u32
//! seed             u64
//! epoch            u32       1-based best epoch
//! validation_loss  f64
//! scaler_min       f64
//! scaler_max       f64
//! block_count      u32
//! block*           name_len u32, name bytes (utf-8),
//!                  learnable u8, rank u32, dims u32 × rank,
//!                  values f64 × product(dims)
//! ```
//!
//! Writes are atomic: the archive is written to a sibling temp file and
//! renamed into place.

use std::path::Path;

use crate::dataset::MinMaxScaler;
use crate::error::{Error, Result};
use crate::models::{Architecture, ModelParams};
use crate::training::Checkpoint;

const MAGIC: &[u8; 4] = b"SCKP";
const VERSION: u32 = 1;

/// Serializes a checkpoint to bytes.
pub fn to_bytes(checkpoint: &Checkpoint) -> Vec<u8> {
    let params = &checkpoint.params;
    let blocks = params.blocks();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(params.arch.tag());
    out.extend_from_slice(&(params.window as u32).to_le_bytes());
    out.extend_from_slice(&(params.feature_dim as u32).to_le_bytes());
    out.extend_from_slice(&checkpoint.seed.to_le_bytes());
    out.extend_from_slice(&(checkpoint.epoch as u32).to_le_bytes());
    out.extend_from_slice(&checkpoint.validation_loss.to_le_bytes());
    out.extend_from_slice(&checkpoint.scaler.min.to_le_bytes());
    out.extend_from_slice(&checkpoint.scaler.max.to_le_bytes());
    out.extend_from_slice(&(blocks.len() as u32).to_le_bytes());
    for block in blocks {
        out.extend_from_slice(&(block.name.len() as u32).to_le_bytes());
        out.extend_from_slice(block.name.as_bytes());
        out.push(block.learnable as u8);
        out.extend_from_slice(&(block.shape.len() as u32).to_le_bytes());
        for &dim in &block.shape {
            out.extend_from_slice(&(dim as u32).to_le_bytes());
        }
        for &v in block.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.offset + n > self.bytes.len() {
            return Err(Error::format(
                format!(
                    "checkpoint truncated: wanted {n} bytes at offset {}, file has {}",
                    self.offset,
                    self.bytes.len()
                ),
                None,
            ));
        }
        let slice = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Deserializes a checkpoint, validating magic, version, and block shapes
/// against a freshly constructed parameter skeleton.
pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
    let mut cur = Cursor { bytes, offset: 0 };
    if cur.take(4)? != MAGIC {
        return Err(Error::format("not a checkpoint file (bad magic)", None));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::format(
            format!("unsupported checkpoint version {version} (expected {VERSION})"),
            None,
        ));
    }
    let arch = Architecture::from_tag(cur.u8()?)?;
    let window = cur.u32()? as usize;
    let feature_dim = cur.u32()? as usize;
    let seed = cur.u64()?;
    let epoch = cur.u32()? as usize;
    let validation_loss = cur.f64()?;
    let scaler = MinMaxScaler { min: cur.f64()?, max: cur.f64()? };

    let mut params = ModelParams::new(arch, window, seed)?;
    if params.feature_dim != feature_dim {
        return Err(Error::format(
            format!(
                "checkpoint feature_dim {feature_dim} does not match {arch} (expected {})",
                params.feature_dim
            ),
            None,
        ));
    }

    let expected: Vec<(String, Vec<usize>)> =
        params.blocks().iter().map(|b| (b.name.clone(), b.shape.clone())).collect();
    let block_count = cur.u32()? as usize;
    if block_count != expected.len() {
        return Err(Error::format(
            format!("checkpoint has {block_count} blocks, {arch} expects {}", expected.len()),
            None,
        ));
    }
    for (name, shape) in expected {
        let name_len = cur.u32()? as usize;
        let stored_name = std::str::from_utf8(cur.take(name_len)?)
            .map_err(|_| Error::format("block name is not valid utf-8", None))?
            .to_string();
        if stored_name != name {
            return Err(Error::format(
                format!("block order mismatch: found '{stored_name}', expected '{name}'"),
                None,
            ));
        }
        let _learnable = cur.u8()?;
        let rank = cur.u32()? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(cur.u32()? as usize);
        }
        if dims != shape {
            return Err(Error::format(
                format!("block '{name}' has shape {dims:?}, expected {shape:?}"),
                None,
            ));
        }
        let count: usize = dims.iter().product();
        let data = params
            .block_data_mut(&name)
            .expect("expected block names come from the same skeleton");
        debug_assert_eq!(data.len(), count);
        for slot in data.iter_mut() {
            *slot = cur.f64()?;
        }
    }
    if cur.offset != bytes.len() {
        return Err(Error::format(
            format!("{} trailing bytes after final block", bytes.len() - cur.offset),
            None,
        ));
    }
    Ok(Checkpoint { params, epoch, validation_loss, scaler, seed })
}

/// Writes the archive atomically (temp file in the same directory, then
/// rename).
pub fn save(path: impl AsRef<Path>, checkpoint: &Checkpoint) -> Result<()> {
    let path = path.as_ref();
    let bytes = to_bytes(checkpoint);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
