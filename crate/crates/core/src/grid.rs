//! Periodic rectangular lattice and real-valued fields sampled on it.
//!
//! Points are stored with the x index fastest: `ix + nx * (iy + ny * iz)`.
//! A 1D or 2D grid keeps three components per vector field; the suppressed
//! axes have a single point and no wavevector (translational invariance).

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Real samples of a scalar quantity, one per grid point.
pub type ScalarField<T> = Vec<T>;

/// Uniform periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    dims: usize,
    n: [usize; 3],
    dr: [T; 3],
    c: T,
}

impl<T: Real> Grid<T> {
    /// Grid with one entry of `n` and `dr` per active axis and `c = 1`.
    pub fn new(n: &[usize], dr: &[T]) -> Result<Self> {
        let dims = n.len();
        if !(1..=3).contains(&dims) {
            return Err(Error::InvalidGrid(format!(
                "dims must be 1, 2 or 3, got {dims}"
            )));
        }
        if dr.len() != dims {
            return Err(Error::InvalidGrid(format!(
                "{dims} axis sizes but {} spacings",
                dr.len()
            )));
        }
        let mut nn = [1usize; 3];
        let mut dd = [T::one(); 3];
        for axis in 0..dims {
            if n[axis] < 2 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} needs at least 2 points, got {}",
                    n[axis]
                )));
            }
            if !(dr[axis] > T::zero()) || !dr[axis].is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} spacing must be positive, got {}",
                    dr[axis]
                )));
            }
            nn[axis] = n[axis];
            dd[axis] = dr[axis];
        }
        Ok(Grid {
            dims,
            n: nn,
            dr: dd,
            c: T::one(),
        })
    }

    /// Replaces the wave speed.
    pub fn with_c(mut self, c: T) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::InvalidGrid(format!("c must be positive, got {c}")));
        }
        self.c = c;
        Ok(self)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Points per axis; suppressed axes report 1.
    pub fn n(&self) -> [usize; 3] {
        self.n
    }

    /// Spacing per axis; suppressed axes report 1.
    pub fn dr(&self) -> [T; 3] {
        self.dr
    }

    pub fn c(&self) -> T {
        self.c
    }

    /// Total number of points.
    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume element: product of spacings over active axes.
    pub fn cell_volume(&self) -> T {
        (0..self.dims).fold(T::one(), |v, a| v * self.dr[a])
    }

    /// Box length `n * dr` along `axis`.
    pub fn extent(&self, axis: usize) -> T {
        T::from_count(self.n[axis]) * self.dr[axis]
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.n[0] * (iy + self.n[1] * iz)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let ix = idx % self.n[0];
        let rest = idx / self.n[0];
        [ix, rest % self.n[1], rest / self.n[1]]
    }

    /// Position of point `idx`, with the origin at index zero.
    pub fn position(&self, idx: usize) -> [T; 3] {
        let c = self.coords(idx);
        [
            T::from_count(c[0]) * self.dr[0],
            T::from_count(c[1]) * self.dr[1],
            T::from_count(c[2]) * self.dr[2],
        ]
    }

    /// Nyquist wavenumber `pi / dr` on an active axis.
    pub fn nyquist(&self, axis: usize) -> T {
        T::PI() / self.dr[axis]
    }

    /// Wavenumber of Fourier index `m` along `axis`: `2 pi m~ / (n dr)` with
    /// `m~` the centered alias. The unpaired Nyquist index of an even axis
    /// maps to zero so that every spectral operator keeps real fields real.
    pub fn wavenumber(&self, axis: usize, m: usize) -> T {
        let n = self.n[axis];
        if n == 1 {
            return T::zero();
        }
        if n % 2 == 0 && m == n / 2 {
            return T::zero();
        }
        let signed = if m <= n / 2 {
            T::from_count(m)
        } else {
            -T::from_count(n - m)
        };
        T::TAU() * signed / self.extent(axis)
    }

    /// Largest wavevector magnitude carried by the grid.
    pub fn k_max(&self) -> T {
        let mut s = T::zero();
        for axis in 0..self.dims {
            let n = self.n[axis];
            // Largest retained centered index.
            let m = if n % 2 == 0 { n / 2 - 1 } else { n / 2 };
            let k = self.wavenumber(axis, m);
            s = s + k * k;
        }
        s.sqrt()
    }

    /// Minimum-image displacement `x - x0` along `axis` in a periodic box.
    pub fn min_image(&self, axis: usize, d: T) -> T {
        let l = self.extent(axis);
        d - l * (d / l).round()
    }
}

/// Three real component lattices; 1D/2D fields still carry all three.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField<T> {
    pub comp: [Vec<T>; 3],
}

impl<T: Real> VectorField<T> {
    pub fn zeros(len: usize) -> Self {
        VectorField {
            comp: [vec![T::zero(); len], vec![T::zero(); len], vec![T::zero(); len]],
        }
    }

    /// Samples `f(position)` at every grid point.
    pub fn from_fn(grid: &Grid<T>, f: impl Fn([T; 3]) -> [T; 3]) -> Self {
        let mut v = Self::zeros(grid.len());
        for i in 0..grid.len() {
            let val = f(grid.position(i));
            for a in 0..3 {
                v.comp[a][i] = val[a];
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.comp[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.comp.iter().all(|c| c.iter().all(|x| x.is_finite()))
    }

    /// Unweighted sum of squares over all components.
    pub fn sum_sq(&self) -> T {
        self.comp
            .iter()
            .map(|c| c.iter().map(|&x| x * x).sum::<T>())
            .sum()
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: T, other: &Self) {
        for a in 0..3 {
            for (x, &y) in self.comp[a].iter_mut().zip(&other.comp[a]) {
                *x = *x + s * y;
            }
        }
    }

    pub fn scale(&mut self, s: T) {
        for c in &mut self.comp {
            for x in c.iter_mut() {
                *x = *x * s;
            }
        }
    }

    /// Largest absolute sample.
    pub fn max_abs(&self) -> T {
        self.comp
            .iter()
            .flat_map(|c| c.iter())
            .fold(T::zero(), |m, &x| m.max(x.magnitude()))
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        for c in &self.comp {
            if c.len() != len {
                return Err(Error::ShapeMismatch {
                    expected: len,
                    found: c.len(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::<f64>::new(&[1], &[0.1]).is_err());
        assert!(Grid::<f64>::new(&[8], &[0.0]).is_err());
        assert!(Grid::<f64>::new(&[8, 8], &[0.1]).is_err());
        assert!(Grid::<f64>::new(&[4, 4, 4, 4], &[1.0; 4]).is_err());
        assert!(Grid::<f64>::new(&[8], &[0.1]).unwrap().with_c(-1.0).is_err());
    }

    #[test]
    fn wavenumbers_are_centered_and_bounded() {
        let g = Grid::<f64>::new(&[8], &[0.5]).unwrap();
        let l = 4.0;
        assert_eq!(g.wavenumber(0, 0), 0.0);
        assert!((g.wavenumber(0, 1) - std::f64::consts::TAU / l).abs() < 1e-15);
        assert!((g.wavenumber(0, 7) + std::f64::consts::TAU / l).abs() < 1e-15);
        assert_eq!(g.wavenumber(0, 4), 0.0);
        for m in 0..8 {
            assert!(g.wavenumber(0, m).abs() <= g.nyquist(0));
        }
        let odd = Grid::<f64>::new(&[5], &[1.0]).unwrap();
        assert!((odd.wavenumber(0, 3) + 2.0 * std::f64::consts::TAU / 5.0).abs() < 1e-15);
    }

    #[test]
    fn index_and_coords_agree() {
        let g = Grid::<f64>::new(&[3, 4, 5], &[1.0, 1.0, 1.0]).unwrap();
        for idx in 0..g.len() {
            let [i, j, k] = g.coords(idx);
            assert_eq!(g.index(i, j, k), idx);
        }
        assert_eq!(g.len(), 60);
    }

    #[test]
    fn suppressed_axes_do_not_enter_volume() {
        let g = Grid::<f64>::new(&[4, 6], &[0.5, 0.25]).unwrap();
        assert_eq!(g.n(), [4, 6, 1]);
        assert_eq!(g.cell_volume(), 0.125);
        assert_eq!(g.wavenumber(2, 0), 0.0);
    }

    #[test]
    fn min_image_wraps() {
        let g = Grid::<f64>::new(&[10], &[1.0]).unwrap();
        assert_eq!(g.min_image(0, 9.0), -1.0);
        assert_eq!(g.min_image(0, -6.0), 4.0);
        assert_eq!(g.min_image(0, 3.0), 3.0);
    }
}
