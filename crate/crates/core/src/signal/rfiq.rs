//! RFIQ baseband file format.
//!
//! ```text
//! offset  size  field
//! 0       4     magic, ASCII "RFIQ"
//! 4       4     version, u32 little-endian (currently 1)
//! 8       8     sample rate in Hz, f64 little-endian
//! 16      8*N   N samples, each I then Q as f32 little-endian
//! ```
//!
//! The sample count is implied by the file length.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex;

use super::IqSignal;
use crate::error::{Error, Result};
use crate::Scalar;

pub const MAGIC: &[u8; 4] = b"RFIQ";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;

pub fn encode<T: Scalar>(x: &IqSignal<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * x.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&x.sample_rate_hz().to_le_bytes());
    for s in x.samples() {
        out.extend_from_slice(&(s.re.as_f64() as f32).to_le_bytes());
        out.extend_from_slice(&(s.im.as_f64() as f32).to_le_bytes());
    }
    out
}

pub fn decode<T: Scalar>(bytes: &[u8], origin: &Path) -> Result<IqSignal<T>> {
    let bad = |reason: String| Error::Format { what: "RFIQ file", path: origin.to_path_buf(), reason };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the 16-byte header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("missing RFIQ magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let fs = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let body = &bytes[HEADER_LEN..];
    if body.len() % 8 != 0 {
        return Err(bad(format!("payload of {} bytes is not a whole number of I/Q pairs", body.len())));
    }
    let samples = body
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[..4].try_into().unwrap());
            let im = f32::from_le_bytes(c[4..].try_into().unwrap());
            Complex::new(T::lit(re as f64), T::lit(im as f64))
        })
        .collect();
    IqSignal::new(samples, fs).map_err(|e| bad(e.to_string()))
}

pub fn write<T: Scalar>(path: impl AsRef<Path>, x: &IqSignal<T>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(x))?;
    Ok(())
}

pub fn read<T: Scalar>(path: impl AsRef<Path>) -> Result<IqSignal<T>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes, path)
}
