//! Little-endian binary formats for dense (`TTDT`) and TT (`TTTC`) tensors.
//!
//! ```text
//! TTDT: magic "TTDT" | u32 version = 1 | u32 m | m × u64 dims | d* × f64 values
//! TTTC: magic "TTTC" | u32 version = 1 | u32 m | m × (u64 r_{i-1}, u64 d_i, u64 r_i) | core data
//! ```
//! Values follow the crate-wide first-index-fastest order; core data is
//! written core by core.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{ensure, Error, Result};

use super::{Core, DenseTensor, TtTensor};

pub const DENSE_MAGIC: &[u8; 4] = b"TTDT";
pub const TT_MAGIC: &[u8; 4] = b"TTTC";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_dense<W: Write>(w: &mut W, x: &DenseTensor) -> Result<()> {
    w.write_all(DENSE_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(x.order() as u32).to_le_bytes())?;
    for &d in x.dims() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    write_f64s(w, x.values())
}

pub fn read_dense<R: Read>(r: &mut R) -> Result<DenseTensor> {
    read_header(r, DENSE_MAGIC)?;
    let m = read_u32(r)? as usize;
    ensure!(m >= 1, Format, "tensor order 0 in header");
    let dims = (0..m).map(|_| read_u64(r).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    let total = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format(format!("dims {dims:?} overflow")))?;
    let values = read_f64s(r, total)?;
    DenseTensor::new(dims, values)
}

pub fn write_tt<W: Write>(w: &mut W, t: &TtTensor) -> Result<()> {
    w.write_all(TT_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(t.order() as u32).to_le_bytes())?;
    for c in t.cores() {
        let (a, d, b) = c.shape();
        for v in [a, d, b] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
    }
    for c in t.cores() {
        write_f64s(w, c.data())?;
    }
    Ok(())
}

pub fn read_tt<R: Read>(r: &mut R) -> Result<TtTensor> {
    read_header(r, TT_MAGIC)?;
    let m = read_u32(r)? as usize;
    ensure!(m >= 1, Format, "tensor order 0 in header");
    let mut shapes = Vec::with_capacity(m);
    for _ in 0..m {
        let a = read_u64(r)? as usize;
        let d = read_u64(r)? as usize;
        let b = read_u64(r)? as usize;
        shapes.push((a, d, b));
    }
    let cores = shapes
        .into_iter()
        .map(|(a, d, b)| {
            let n = a
                .checked_mul(d)
                .and_then(|v| v.checked_mul(b))
                .ok_or_else(|| Error::Format("core size overflows".into()))?;
            Core::new(a, d, b, read_f64s(r, n)?)
        })
        .collect::<Result<Vec<_>>>()?;
    TtTensor::new(cores)
}

pub fn save_dense(path: impl AsRef<Path>, x: &DenseTensor) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_dense(&mut w, x)?;
    w.flush()?;
    Ok(())
}

pub fn load_dense(path: impl AsRef<Path>) -> Result<DenseTensor> {
    read_dense(&mut std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn save_tt(path: impl AsRef<Path>, t: &TtTensor) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_tt(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn load_tt(path: impl AsRef<Path>) -> Result<TtTensor> {
    read_tt(&mut std::io::BufReader::new(std::fs::File::open(path)?))
}

fn read_header<R: Read>(r: &mut R, magic: &[u8; 4]) -> Result<()> {
    let mut got = [0u8; 4];
    r.read_exact(&mut got)?;
    ensure!(&got == magic, Format, "bad magic {:?}, expected {:?}", got, magic);
    let version = read_u32(r)?;
    ensure!(version == FORMAT_VERSION, Format, "unsupported format version {version}");
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn write_f64s<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n.min(1 << 24));
    let mut b = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut b)?;
        out.push(f64::from_le_bytes(b));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_header_layout() {
        let x = DenseTensor::new(vec![2, 1, 3], (0..6).map(f64::from).collect()).unwrap();
        let mut buf = Vec::new();
        write_dense(&mut buf, &x).unwrap();
        assert_eq!(&buf[..4], b"TTDT");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(buf[12..20].try_into().unwrap()), 2);
        assert_eq!(buf.len(), 12 + 3 * 8 + 6 * 8);
        // value for (1,0,0) is the second f64
        assert_eq!(f64::from_le_bytes(buf[44..52].try_into().unwrap()), 1.0);
        assert_eq!(read_dense(&mut buf.as_slice()).unwrap(), x);
    }

    #[test]
    fn tt_round_trip() {
        let t = TtTensor::new(vec![
            Core::from_fn(1, 2, 3, |a, x, b| (a + x + b) as f64),
            Core::from_fn(3, 4, 1, |a, x, b| (a * x) as f64 - b as f64),
        ])
        .unwrap();
        let mut buf = Vec::new();
        write_tt(&mut buf, &t).unwrap();
        assert_eq!(&buf[..4], b"TTTC");
        assert_eq!(read_tt(&mut buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let mut buf = b"XXXX".to_vec();
        buf.extend_from_slice(&[1, 0, 0, 0]);
        assert!(matches!(read_dense(&mut buf.as_slice()), Err(Error::Format(_))));
        let x = DenseTensor::new(vec![2, 2], vec![1.0; 4]).unwrap();
        let mut good = Vec::new();
        write_dense(&mut good, &x).unwrap();
        good.truncate(good.len() - 3);
        assert!(matches!(read_dense(&mut good.as_slice()), Err(Error::Io(_))));
    }
}
