//! Versioned binary persistence for [`QuantileGrid`].
//!
//! Layout: an 8-byte magic, the key fields (rho, cutoff, level, range,
//! tolerances) and node count, the raw f64 node values, and a trailing
//! FNV-1a checksum over everything before it. Values round-trip bit-exactly;
//! any corruption is caught by the checksum.

use std::io::{Read, Write};

use crate::dist::{ModelParams, Tolerances};
use crate::error::{Error, Result};

use super::QuantileGrid;

const MAGIC: &[u8; 8] = b"PSELGRD1";

/// Stable hash of a grid request, usable as a cache file name component.
pub fn cache_key(
    params: ModelParams,
    level: f64,
    lo: f64,
    hi: f64,
    step: f64,
    tol: Tolerances,
) -> u64 {
    let mut h = Fnv::new();
    h.write(MAGIC);
    for x in [params.rho(), params.cutoff(), level, lo, hi, step, tol.quad_abs_tol, tol.root_tol] {
        h.write(&x.to_le_bytes());
    }
    h.write(&(tol.quad_max_subdivisions as u64).to_le_bytes());
    h.finish()
}

/// Serializes a grid. The written stream is deterministic.
pub fn write_grid<W: Write>(grid: &QuantileGrid, mut w: W) -> Result<()> {
    let mut buf = Vec::with_capacity(96 + 8 * grid.len());
    buf.extend_from_slice(MAGIC);
    let tol = grid.tolerances();
    for x in [
        grid.params().rho(),
        grid.params().cutoff(),
        grid.level(),
        grid.gamma_lo(),
        grid.gamma_hi(),
        tol.quad_abs_tol,
        tol.root_tol,
    ] {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    buf.extend_from_slice(&(tol.quad_max_subdivisions as u64).to_le_bytes());
    buf.extend_from_slice(&(grid.len() as u64).to_le_bytes());
    for v in grid.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut h = Fnv::new();
    h.write(&buf);
    buf.extend_from_slice(&h.finish().to_le_bytes());
    w.write_all(&buf)
        .map_err(|e| Error::Cache(format!("write failed: {e}")))
}

/// Deserializes a grid, verifying magic and checksum.
pub fn read_grid<R: Read>(mut r: R) -> Result<QuantileGrid> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)
        .map_err(|e| Error::Cache(format!("read failed: {e}")))?;
    if buf.len() < 8 + 7 * 8 + 16 + 8 || &buf[..8] != MAGIC {
        return Err(Error::Cache("bad magic or truncated file".into()));
    }
    let (body, tail) = buf.split_at(buf.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().expect("8 bytes"));
    let mut h = Fnv::new();
    h.write(body);
    if h.finish() != stored {
        return Err(Error::Cache("checksum mismatch".into()));
    }

    let mut off = 8;
    let mut next_f64 = || -> f64 {
        let v = f64::from_le_bytes(body[off..off + 8].try_into().expect("8 bytes"));
        off += 8;
        v
    };
    let rho = next_f64();
    let cutoff = next_f64();
    let level = next_f64();
    let lo = next_f64();
    let hi = next_f64();
    let quad_abs_tol = next_f64();
    let root_tol = next_f64();
    let max_sub = u64::from_le_bytes(body[off..off + 8].try_into().expect("8 bytes")) as usize;
    off += 8;
    let n = u64::from_le_bytes(body[off..off + 8].try_into().expect("8 bytes")) as usize;
    off += 8;
    if body.len() != off + 8 * n {
        return Err(Error::Cache("value block length mismatch".into()));
    }
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        values.push(f64::from_le_bytes(
            body[off + 8 * i..off + 8 * (i + 1)].try_into().expect("8 bytes"),
        ));
    }
    if n < 4 {
        return Err(Error::Cache("grid too small".into()));
    }

    let params = ModelParams::new(rho, cutoff).map_err(|e| Error::Cache(e.to_string()))?;
    let tol = Tolerances {
        quad_abs_tol,
        quad_max_subdivisions: max_sub,
        root_tol,
    };
    tol.validate().map_err(|e| Error::Cache(e.to_string()))?;
    if !(level > 0.0 && level < 1.0 && lo < hi) {
        return Err(Error::Cache("invalid header fields".into()));
    }
    Ok(QuantileGrid::from_parts(params, level, lo, hi, values, tol))
}

/// Whether a deserialized grid answers exactly the given request.
pub fn matches_request(
    grid: &QuantileGrid,
    params: ModelParams,
    level: f64,
    lo: f64,
    hi: f64,
    step: f64,
    tol: Tolerances,
) -> bool {
    let n = (((hi - lo) / step).ceil() as usize + 1).max(4);
    grid.params() == params
        && grid.level() == level
        && grid.gamma_lo() == lo
        && grid.gamma_hi() == hi
        && grid.len() == n
        && grid.tolerances() == tol
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> QuantileGrid {
        let params = ModelParams::new(0.5, 1.96).unwrap();
        QuantileGrid::build(params, 0.1, -2.0, 2.0, 0.5, Tolerances::default()).unwrap()
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let grid = small_grid();
        let mut buf = Vec::new();
        write_grid(&grid, &mut buf).unwrap();
        let back = read_grid(&buf[..]).unwrap();
        assert_eq!(grid.len(), back.len());
        for i in 0..grid.len() {
            assert_eq!(grid.value(i).to_bits(), back.value(i).to_bits());
            assert_eq!(grid.node(i).to_bits(), back.node(i).to_bits());
        }
        assert!(matches_request(
            &back,
            grid.params(),
            grid.level(),
            grid.gamma_lo(),
            grid.gamma_hi(),
            0.5,
            grid.tolerances()
        ));
    }

    #[test]
    fn corruption_is_detected() {
        let grid = small_grid();
        let mut buf = Vec::new();
        write_grid(&grid, &mut buf).unwrap();
        let mid = buf.len() / 2;
        buf[mid] ^= 0x40;
        assert!(matches!(read_grid(&buf[..]), Err(Error::Cache(_))));
    }

    #[test]
    fn truncation_is_detected() {
        let grid = small_grid();
        let mut buf = Vec::new();
        write_grid(&grid, &mut buf).unwrap();
        buf.truncate(buf.len() - 9);
        assert!(matches!(read_grid(&buf[..]), Err(Error::Cache(_))));
    }

    #[test]
    fn key_depends_on_tolerances() {
        let params = ModelParams::new(0.5, 1.96).unwrap();
        let t1 = Tolerances::default();
        let t2 = Tolerances {
            quad_abs_tol: 1e-9,
            ..t1
        };
        let k1 = cache_key(params, 0.05, -50.0, 50.0, 0.01, t1);
        let k2 = cache_key(params, 0.05, -50.0, 50.0, 0.01, t2);
        assert_ne!(k1, k2);
    }
}
