//! Binary parameter checkpoints.
//!
//! Layout (little-endian): the 8-byte magic `LCGNNCK1`, then for `w0` and
//! `w1` in order a `u64` row count, a `u64` column count and `rows * cols`
//! IEEE-754 doubles in row-major order. Values round-trip bit-exactly.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::gcn::GcnParams;
use crate::tensor::DenseMatrix;

const MAGIC: &[u8; 8] = b"LCGNNCK1";

pub fn encode(params: &GcnParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 32 + 8 * (params.w0.data().len() + params.w1.data().len()));
    out.extend_from_slice(MAGIC);
    for m in [&params.w0, &params.w1] {
        out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
        for v in m.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.buf.len() < n {
            return Err(Error::Checkpoint("truncated file".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn matrix(&mut self) -> Result<DenseMatrix> {
        let rows = self.u64()? as usize;
        let cols = self.u64()? as usize;
        let len = rows
            .checked_mul(cols)
            .filter(|&l| l.checked_mul(8).is_some_and(|b| b <= self.buf.len()))
            .ok_or_else(|| Error::Checkpoint(format!("bad shape {rows}x{cols}")))?;
        let bytes = self.take(len * 8)?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        DenseMatrix::from_vec(rows, cols, data)
    }
}

pub fn decode(bytes: &[u8]) -> Result<GcnParams> {
    let mut r = Reader { buf: bytes };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let w0 = r.matrix()?;
    let w1 = r.matrix()?;
    if !r.buf.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", r.buf.len())));
    }
    if w0.cols() != w1.rows() {
        return Err(Error::Checkpoint(format!(
            "w0 is {}x{} but w1 is {}x{}",
            w0.rows(),
            w0.cols(),
            w1.rows(),
            w1.cols()
        )));
    }
    Ok(GcnParams { w0, w1 })
}

pub fn save(params: &GcnParams, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode(params))
}

pub fn load(path: impl AsRef<Path>) -> Result<GcnParams> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_corruption() {
        let p = GcnParams::init(4, 3, 2, 1);
        let bytes = encode(&p);
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode(&extra).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let p = GcnParams::init(6, 4, 3, 9);
        save(&p, &path).unwrap();
        assert_eq!(load(&path).unwrap(), p);
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            p in 1usize..8, d in 1usize..6, m in 1usize..5,
            vals in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 8 * 6 + 6 * 5),
        ) {
            let w0 = DenseMatrix::from_vec(p, d, vals[..p * d].to_vec()).unwrap();
            let w1 = DenseMatrix::from_vec(d, m, vals[p * d..p * d + d * m].to_vec()).unwrap();
            let params = GcnParams { w0, w1 };
            let back = decode(&encode(&params)).unwrap();
            for (a, b) in params.w0.data().iter().chain(params.w1.data()).zip(back.w0.data().iter().chain(back.w1.data())) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
