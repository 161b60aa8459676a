//! Small dense real matrices for per-point local operators.
//!
//! Local blocks act on one Cartesian component of `(E or D, xi^1 .. xi^2N)`,
//! so they are `(1 + 2N)`-square and tiny. Nothing here is tuned for large
//! sizes.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[&[T]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix rows must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a - b)
    }

    pub fn scale(&self, s: T) -> Self {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|&a| a * s).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j];
            }
        }
        out
    }

    fn zip(&self, rhs: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.n, rhs.n);
        Matrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `out = self * v`, in place over a caller-provided buffer.
    #[inline]
    pub fn apply(&self, v: &[T], out: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            out[i] = row.iter().zip(v).fold(T::zero(), |acc, (&a, &x)| acc + a * x);
        }
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> T {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self.data[i * n + j].magnitude()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.magnitude()))
    }

    /// Solves `self * X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        let scale = self.max_abs().max(T::min_positive_value());
        let tiny = scale * T::epsilon() * T::from_count(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[i * n + col]
                        .magnitude()
                        .partial_cmp(&a[j * n + col].magnitude())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(col);
            if !(a[pivot * n + col].magnitude() > tiny) {
                return Err(Error::SingularMatrix("dense LU solve"));
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                    b.swap(col * n + j, pivot * n + j);
                }
            }
            let p = a[col * n + col];
            for i in col + 1..n {
                let f = a[i * n + col] / p;
                if f == T::zero() {
                    continue;
                }
                for j in col..n {
                    a[i * n + j] = a[i * n + j] - f * a[col * n + j];
                }
                for j in 0..n {
                    b[i * n + j] = b[i * n + j] - f * b[col * n + j];
                }
            }
        }
        for col in (0..n).rev() {
            let p = a[col * n + col];
            for j in 0..n {
                let mut s = b[col * n + j];
                for k in col + 1..n {
                    s = s - a[col * n + k] * b[k * n + j];
                }
                b[col * n + j] = s / p;
            }
        }
        Ok(Matrix { n, data: b })
    }

    /// Matrix exponential by scaling and squaring with a degree-13 Padé
    /// approximant.
    pub fn expm(&self) -> Self {
        const B: [f64; 14] = [
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ];
        const THETA13: f64 = 5.371920351148152;
        let n = self.n;
        let norm = self.norm_1().to_f64_lossy();
        let squarings = if norm > THETA13 {
            (norm / THETA13).log2().ceil() as i32
        } else {
            0
        };
        let a = self.scale(T::lit(0.5f64.powi(squarings)));
        let b = |i: usize| T::lit(B[i]);
        let id = Self::identity(n);
        let a2 = a.mul(&a);
        let a4 = a2.mul(&a2);
        let a6 = a4.mul(&a2);
        let u_inner = a6
            .mul(&a6.scale(b(13)).add(&a4.scale(b(11))).add(&a2.scale(b(9))))
            .add(&a6.scale(b(7)))
            .add(&a4.scale(b(5)))
            .add(&a2.scale(b(3)))
            .add(&id.scale(b(1)));
        let u = a.mul(&u_inner);
        let v = a6
            .mul(&a6.scale(b(12)).add(&a4.scale(b(10))).add(&a2.scale(b(8))))
            .add(&a6.scale(b(6)))
            .add(&a4.scale(b(4)))
            .add(&a2.scale(b(2)))
            .add(&id.scale(b(0)));
        let mut r = v
            .sub(&u)
            .solve(&v.add(&u))
            .expect("Padé denominator is nonsingular after scaling");
        for _ in 0..squarings {
            r = r.mul(&r);
        }
        r
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// Order of the rational approximation in [`pade_exponential`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PadeOrder {
    /// `(1 + dt B/2) / (1 - dt B/2)`, third-order local error.
    First,
    /// `(1 + dt B/2 + dt^2 B^2/12) / (1 - dt B/2 + dt^2 B^2/12)`, fifth-order local error.
    Second,
}

/// Diagonal Padé approximation of `exp(dt * b)`.
///
/// Skew-symmetric `b` yields an exactly orthogonal result (Cayley transform).
pub fn pade_exponential<T: Real>(b: &Matrix<T>, dt: T, order: PadeOrder) -> Result<Matrix<T>> {
    let n = b.dim();
    let id = Matrix::identity(n);
    let half = b.scale(dt * T::lit(0.5));
    let (num, den) = match order {
        PadeOrder::First => (id.add(&half), id.sub(&half)),
        PadeOrder::Second => {
            let quad = b.mul(b).scale(dt * dt / T::lit(12.0));
            (id.add(&half).add(&quad), id.sub(&half).add(&quad))
        }
    };
    den.solve(&num)
        .map_err(|_| Error::SingularMatrix("Padé denominator"))
}
