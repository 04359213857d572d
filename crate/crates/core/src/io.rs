//! Binary tensor (`TKR1`) and decomposition (`TKD1`) files.
//!
//! `TKR1`: magic `TKR1`, `u8` order `q`, `q` little-endian `u64` dims, then
//! `∏ n_j` little-endian `f64` values in layout order (first index fastest).
//!
//! `TKD1`: magic `TKD1`, `u8` order `q`, `q` pairs of little-endian `u64`
//! `(n_j, R_j)`, the core values in layout order, then each factor
//! `n_j x R_j` in column-major order; all values little-endian `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tensor::DenseTensor;
use crate::tucker::TuckerDecomposition;

pub const TENSOR_MAGIC: &[u8; 4] = b"TKR1";
pub const DECOMPOSITION_MAGIC: &[u8; 4] = b"TKD1";

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated {what}")),
        _ => Error::Io(e),
    })
}

fn read_u64<R: Read>(r: &mut R, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, count: usize, what: &str) -> Result<Vec<f64>> {
    let bytes = count
        .checked_mul(8)
        .ok_or_else(|| Error::Format(format!("{what} too large")))?;
    let mut buf = vec![0u8; bytes];
    read_exact(r, &mut buf, what)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn write_f64s<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_header<R: Read>(r: &mut R, magic: &[u8; 4]) -> Result<usize> {
    let mut m = [0u8; 4];
    read_exact(r, &mut m, "header")?;
    if &m != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let mut q = [0u8; 1];
    read_exact(r, &mut q, "header")?;
    if q[0] == 0 {
        return Err(Error::Format("order 0".into()));
    }
    Ok(q[0] as usize)
}

fn read_dim<R: Read>(r: &mut R, what: &str) -> Result<usize> {
    let d = read_u64(r, what)?;
    if d == 0 {
        return Err(Error::Format(format!("zero {what}")));
    }
    usize::try_from(d).map_err(|_| Error::Format(format!("{what} {d} does not fit in memory")))
}

fn expect_eof<R: Read>(r: &mut R) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok(()),
        _ => Err(Error::Format("trailing bytes after payload".into())),
    }
}

fn order_byte(q: usize) -> Result<u8> {
    u8::try_from(q).map_err(|_| Error::Format(format!("order {q} exceeds 255")))
}

pub fn write_tensor<W: Write>(w: &mut W, x: &DenseTensor) -> Result<()> {
    w.write_all(TENSOR_MAGIC)?;
    w.write_all(&[order_byte(x.order())?])?;
    for &n in x.shape() {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    write_f64s(w, x.data())
}

pub fn read_tensor<R: Read>(r: &mut R) -> Result<DenseTensor> {
    let q = read_header(r, TENSOR_MAGIC)?;
    let shape = (0..q)
        .map(|_| read_dim(r, "dimension"))
        .collect::<Result<Vec<_>>>()?;
    let len = shape
        .iter()
        .try_fold(1usize, |a, &n| a.checked_mul(n))
        .ok_or_else(|| Error::Format("tensor size overflows".into()))?;
    let data = read_f64s(r, len, "tensor payload")?;
    expect_eof(r)?;
    DenseTensor::new(shape, data)
}

pub fn write_decomposition<W: Write>(w: &mut W, t: &TuckerDecomposition) -> Result<()> {
    w.write_all(DECOMPOSITION_MAGIC)?;
    w.write_all(&[order_byte(t.order())?])?;
    for (f, &r) in t.factors().iter().zip(t.ranks()) {
        w.write_all(&(f.rows() as u64).to_le_bytes())?;
        w.write_all(&(r as u64).to_le_bytes())?;
    }
    write_f64s(w, t.core().data())?;
    for f in t.factors() {
        write_f64s(w, f.as_slice())?;
    }
    Ok(())
}

/// Reads a decomposition; the orthogonal flag is set when every factor
/// passes the orthonormality check.
pub fn read_decomposition<R: Read>(r: &mut R) -> Result<TuckerDecomposition> {
    let q = read_header(r, DECOMPOSITION_MAGIC)?;
    let mut dims = Vec::with_capacity(q);
    let mut ranks = Vec::with_capacity(q);
    for _ in 0..q {
        dims.push(read_dim(r, "dimension")?);
        ranks.push(read_dim(r, "rank")?);
    }
    let core_len = ranks
        .iter()
        .try_fold(1usize, |a, &n| a.checked_mul(n))
        .ok_or_else(|| Error::Format("core size overflows".into()))?;
    let core = DenseTensor::new(ranks.clone(), read_f64s(r, core_len, "core payload")?)?;
    let mut factors = Vec::with_capacity(q);
    for (&n, &rk) in dims.iter().zip(&ranks) {
        let len = n
            .checked_mul(rk)
            .ok_or_else(|| Error::Format("factor size overflows".into()))?;
        factors.push(Matrix::from_col_major(n, rk, read_f64s(r, len, "factor payload")?)?);
    }
    expect_eof(r)?;
    match TuckerDecomposition::new_orthogonal(core.clone(), factors.clone()) {
        Ok(t) => Ok(t),
        Err(Error::InvalidConfig(_)) => TuckerDecomposition::new(core, factors),
        Err(e) => Err(e),
    }
}

pub fn save_tensor(path: impl AsRef<Path>, x: &DenseTensor) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor(&mut w, x)?;
    w.flush()?;
    Ok(())
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    read_tensor(&mut BufReader::new(File::open(path)?))
}

pub fn save_decomposition(path: impl AsRef<Path>, t: &TuckerDecomposition) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_decomposition(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn load_decomposition(path: impl AsRef<Path>) -> Result<TuckerDecomposition> {
    read_decomposition(&mut BufReader::new(File::open(path)?))
}
