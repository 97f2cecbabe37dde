//! `ESL1` binary container: magic, side `n` (u64 LE), seed (u64 LE),
//! 32-byte config digest, then the lower triangle row-major as f64 LE.

use std::io::{Read, Write};

use super::sample::SymmetricMatrixSample;
use crate::error::{EslError, Result};

pub const MAGIC: &[u8; 4] = b"ESL1";

pub fn write_sample<W: Write>(sample: &SymmetricMatrixSample, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(sample.n() as u64).to_le_bytes())?;
    w.write_all(&sample.seed().to_le_bytes())?;
    w.write_all(sample.digest())?;
    let mut buf = Vec::with_capacity(8 * 4096);
    for chunk in sample.lower().chunks(4096) {
        buf.clear();
        for x in chunk {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sample<R: Read>(mut r: R) -> Result<SymmetricMatrixSample> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(EslError::Io(format!("bad magic {magic:?}, expected ESL1")));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let seed = u64::from_le_bytes(word);
    let mut digest = [0u8; 32];
    r.read_exact(&mut digest)?;
    let len = n * (n + 1) / 2;
    let mut lower = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut word)?;
        lower.push(f64::from_le_bytes(word));
    }
    SymmetricMatrixSample::from_lower(n, lower, seed, digest)
}
