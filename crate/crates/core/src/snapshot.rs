//! Binary snapshot files.
//!
//! Layout, all little-endian: magic `MXSP`, `u32` version, `u32` dims,
//! `3 x u64` points per axis, `3 x f64` spacings, `u32` component count,
//! `f64` time, then each component lattice as `f64` samples in grid order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;

pub const MAGIC: [u8; 4] = *b"MXSP";
pub const VERSION: u32 = 1;

/// Decoded snapshot contents.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub dims: u32,
    pub n: [u64; 3],
    pub dr: [f64; 3],
    pub time: f64,
    pub components: Vec<Vec<f64>>,
}

/// Serializes `components` sampled on `grid` at `time`.
pub fn write_snapshot<W: Write, T: Real>(mut w: W, grid: &Grid<T>, time: T, components: &[&[T]]) -> std::io::Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.dims() as u32).to_le_bytes())?;
    for n in grid.n() {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    for dr in grid.dr() {
        w.write_all(&dr.to_f64_lossy().to_le_bytes())?;
    }
    w.write_all(&(components.len() as u32).to_le_bytes())?;
    w.write_all(&time.to_f64_lossy().to_le_bytes())?;
    for comp in components {
        for &x in comp.iter() {
            w.write_all(&x.to_f64_lossy().to_le_bytes())?;
        }
    }
    w.flush()
}

/// Writes a snapshot file at `path`.
pub fn save_snapshot<T: Real>(path: &Path, grid: &Grid<T>, time: T, components: &[&[T]]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_snapshot(BufWriter::new(file), grid, time, components).map_err(|e| Error::io(path, e))
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Snapshot(format!("truncated snapshot: {e}")))?;
    Ok(buf)
}

impl Snapshot {
    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let magic: [u8; 4] = read_array(&mut r)?;
        if magic != MAGIC {
            return Err(Error::Snapshot("bad magic, not a snapshot file".into()));
        }
        let version = u32::from_le_bytes(read_array(&mut r)?);
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let dims = u32::from_le_bytes(read_array(&mut r)?);
        let mut n = [0u64; 3];
        for v in &mut n {
            *v = u64::from_le_bytes(read_array(&mut r)?);
        }
        let mut dr = [0f64; 3];
        for v in &mut dr {
            *v = f64::from_le_bytes(read_array(&mut r)?);
        }
        let count = u32::from_le_bytes(read_array(&mut r)?) as usize;
        let time = f64::from_le_bytes(read_array(&mut r)?);
        let len = n
            .iter()
            .try_fold(1u64, |acc, &x| acc.checked_mul(x))
            .ok_or_else(|| Error::Snapshot("grid size overflows".into()))? as usize;
        let mut components = Vec::with_capacity(count);
        let mut bytes = vec![0u8; len * 8];
        for _ in 0..count {
            r.read_exact(&mut bytes)
                .map_err(|e| Error::Snapshot(format!("truncated snapshot data: {e}")))?;
            components.push(
                bytes
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                    .collect(),
            );
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra).map_err(|e| Error::Snapshot(e.to_string()))? != 0 {
            return Err(Error::Snapshot("trailing bytes after snapshot data".into()));
        }
        Ok(Snapshot {
            dims,
            n,
            dr,
            time,
            components,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file))
    }

    /// Reconstructs the grid (wave speed is not stored and defaults to 1).
    pub fn grid<T: Real>(&self) -> Result<Grid<T>> {
        let dims = self.dims as usize;
        if !(1..=3).contains(&dims) {
            return Err(Error::Snapshot(format!("invalid dims {dims}")));
        }
        let n: Vec<usize> = self.n[..dims].iter().map(|&x| x as usize).collect();
        let dr: Vec<T> = self.dr[..dims].iter().map(|&x| T::lit(x)).collect();
        Grid::new(&n, &dr)
    }

    /// True when the stored grid has the shape and spacing of `grid`.
    pub fn matches<T: Real>(&self, grid: &Grid<T>) -> bool {
        self.dims as usize == grid.dims()
            && self.n.iter().zip(grid.n()).all(|(&a, b)| a as usize == b)
            && self
                .dr
                .iter()
                .zip(grid.dr())
                .all(|(&a, b)| a == b.to_f64_lossy())
    }

    pub fn components_as<T: Real>(&self) -> Vec<Vec<T>> {
        self.components
            .iter()
            .map(|c| c.iter().map(|&x| T::lit(x)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Grid::<f64>::new(&[3, 2], &[0.1, 0.3]).unwrap();
        let a: Vec<f64> = (0..6).map(|i| (i as f64).sin() * 1e-300).collect();
        let b: Vec<f64> = vec![f64::MIN_POSITIVE, -0.0, 1.0 / 3.0, 7.5, -2.25, f64::MAX];
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &g, 0.125, &[&a, &b]).unwrap();
        assert_eq!(&buf[..4], b"MXSP");
        let s = Snapshot::read(buf.as_slice()).unwrap();
        assert_eq!(s.time, 0.125);
        assert_eq!(s.n, [3, 2, 1]);
        for (x, y) in s.components[0].iter().zip(&a) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in s.components[1].iter().zip(&b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert!(s.matches(&g));
        assert_eq!(s.grid::<f64>().unwrap().n(), g.n());
    }

    #[test]
    fn corrupt_input_is_rejected() {
        assert!(Snapshot::read(&b"NOPE"[..]).is_err());
        let g = Grid::<f64>::new(&[4], &[1.0]).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &g, 0.0, &[&[1.0, 2.0, 3.0, 4.0][..]]).unwrap();
        assert!(Snapshot::read(&buf[..buf.len() - 3]).is_err());
        buf.push(0);
        assert!(Snapshot::read(buf.as_slice()).is_err());
    }
}
