//! Checkpoint layout.
//!
//! `<name>.bin` holds, all little endian: the magic `RFCK`, a `u32` format
//! version, a `u32` tensor count, then per tensor a `u32` name length, the
//! UTF-8 name, a `u32` rank, `u64` dimensions and the `f32` values.
//! `<name>.json` indexes the same tensors with the byte offset of their
//! values plus free-form metadata.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParamStore;
use crate::Real;

const MAGIC: &[u8; 4] = b"RFCK";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset of the first value in the binary file.
    pub offset: u64,
    #[serde(skip)]
    pub data: Vec<f32>,
}

#[derive(Serialize, Deserialize)]
struct Index {
    format: String,
    version: u32,
    dtype: String,
    metadata: serde_json::Value,
    tensors: Vec<CheckpointEntry>,
}

fn index_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

/// Writes `path` (binary) and its `.json` index next to it.
pub fn save_checkpoint<T: Real>(store: &ParamStore<T>, path: &Path, metadata: serde_json::Value) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(store.len() as u32).to_le_bytes());
    let mut tensors = Vec::with_capacity(store.len());
    for (name, t) in store.iter() {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
        tensors.push(CheckpointEntry { name: name.to_string(), shape: t.shape().to_vec(), offset: buf.len() as u64, data: Vec::new() });
        for v in t.data() {
            buf.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
    }
    std::fs::write(path, &buf)?;
    let index = Index { format: "rfsep-checkpoint".into(), version: VERSION, dtype: "f32-le".into(), metadata, tensors };
    std::fs::write(index_path(path), serde_json::to_vec_pretty(&index)?)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint { path: self.path.into(), reason: format!("truncated at byte {}", self.pos) });
        }
        self.pos += n;
        Ok(&self.buf[self.pos - n..self.pos])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Reads the binary file and returns its tensors and the index metadata
/// (`null` when the index is missing).
pub fn load_checkpoint(path: &Path) -> Result<(Vec<CheckpointEntry>, serde_json::Value)> {
    let bytes = std::fs::read(path)?;
    let bad = |reason: String| Error::Checkpoint { path: path.into(), reason };
    let mut r = Reader { buf: &bytes, pos: 0, path };
    if r.take(4)? != MAGIC {
        return Err(bad("missing RFCK magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let count = r.u32()? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let n = r.u32()? as usize;
        let name = String::from_utf8(r.take(n)?.to_vec()).map_err(|_| bad("tensor name is not UTF-8".into()))?;
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let numel = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or_else(|| bad("shape overflows".into()))?;
        let offset = r.pos as u64;
        let raw = r.take(numel.checked_mul(4).ok_or_else(|| bad("shape overflows".into()))?)?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
        out.push(CheckpointEntry { name, shape, offset, data });
    }
    if r.pos != bytes.len() {
        return Err(bad(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let metadata = match std::fs::read(index_path(path)) {
        Ok(b) => serde_json::from_slice::<Index>(&b)?.metadata,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => serde_json::Value::Null,
        Err(e) => return Err(e.into()),
    };
    Ok((out, metadata))
}

impl<T: Real> ParamStore<T> {
    /// Loads values saved by [`save_checkpoint`] into a store of identical layout.
    pub fn load(&mut self, path: &Path) -> Result<serde_json::Value> {
        let (entries, meta) = load_checkpoint(path)?;
        self.assign(entries.iter().map(|e| (e.name.as_str(), e.shape.as_slice(), e.data.as_slice())))?;
        Ok(meta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Tensor;

    #[test]
    fn round_trip_and_index_offsets() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.bin");
        let mut s = ParamStore::<f32>::new();
        s.add("a.w", Tensor::new(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.5]).unwrap()).unwrap();
        s.add("b", Tensor::new(&[1], vec![-7.25]).unwrap()).unwrap();
        save_checkpoint(&s, &path, serde_json::json!({"model": "toy"})).unwrap();

        let (entries, meta) = load_checkpoint(&path).unwrap();
        assert_eq!(meta["model"], "toy");
        assert_eq!(entries[0].shape, vec![2, 3]);
        let bytes = std::fs::read(&path).unwrap();
        let off = entries[1].offset as usize;
        assert_eq!(f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()), -7.25);

        let mut t = ParamStore::<f32>::new();
        t.add("a.w", Tensor::zeros(&[2, 3])).unwrap();
        t.add("b", Tensor::zeros(&[1])).unwrap();
        t.load(&path).unwrap();
        assert_eq!(t.get(t.id("a.w").unwrap()).data(), s.get(s.id("a.w").unwrap()).data());

        let mut wrong = ParamStore::<f32>::new();
        wrong.add("a.w", Tensor::zeros(&[3, 2])).unwrap();
        wrong.add("b", Tensor::zeros(&[1])).unwrap();
        assert!(wrong.load(&path).is_err());
    }

    #[test]
    fn rejects_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"RFCK\x01\x00\x00\x00\x05\x00\x00\x00").unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint { .. })));
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
