//! Binary dump format for dense complex blocks.
//!
//! Layout: the 8-byte magic `AGSPVEC1`, a little-endian `u64` block count,
//! then per block `u64` rows, `u64` cols and `rows * cols` pairs of
//! little-endian `f64` (re, im) in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

pub const MAGIC: &[u8; 8] = b"AGSPVEC1";

pub fn encode_blocks<W: Write>(mut w: W, blocks: &[CMat]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(blocks.len() as u64).to_le_bytes())?;
    for b in blocks {
        w.write_all(&(b.nrows() as u64).to_le_bytes())?;
        w.write_all(&(b.ncols() as u64).to_le_bytes())?;
        for r in 0..b.nrows() {
            for c in 0..b.ncols() {
                let z = b[(r, c)];
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

pub fn decode_blocks<R: Read>(mut r: R) -> Result<Vec<CMat>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::InvalidInput("not an AGSPVEC1 artifact".into()));
    }
    let count = read_u64(&mut r)?;
    let mut out = Vec::new();
    for _ in 0..count {
        let rows = usize::try_from(read_u64(&mut r)?).map_err(|_| Error::InvalidInput("rows".into()))?;
        let cols = usize::try_from(read_u64(&mut r)?).map_err(|_| Error::InvalidInput("cols".into()))?;
        let mut m = CMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let re = read_f64(&mut r)?;
                let im = read_f64(&mut r)?;
                m[(i, j)] = C64::new(re, im);
            }
        }
        out.push(m);
    }
    Ok(out)
}

pub fn write_blocks(path: &Path, blocks: &[CMat]) -> Result<()> {
    encode_blocks(BufWriter::new(File::create(path)?), blocks)
}

pub fn read_blocks(path: &Path) -> Result<Vec<CMat>> {
    decode_blocks(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_bits() {
        let a = CMat::from_fn(2, 3, |r, c| C64::new(r as f64 + 0.1, -(c as f64) / 3.0));
        let b = CMat::from_element(1, 1, C64::new(f64::MIN_POSITIVE, 1e300));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        write_blocks(&path, &[a.clone(), b.clone()]).unwrap();
        let back = read_blocks(&path).unwrap();
        assert_eq!(back, vec![a, b]);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(bytes.len(), 8 + 8 + 2 * 16 + 16 * 7);
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let bytes = b"NOTMAGIC\0\0\0\0\0\0\0\0".to_vec();
        assert!(decode_blocks(&bytes[..]).is_err());
    }
}
