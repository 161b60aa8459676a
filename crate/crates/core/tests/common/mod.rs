//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use maxsplit::grid::{Grid, VectorField};
use maxsplit::medium::{LorentzResonance, MediumMap};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// Dense scaling-and-squaring matrix exponential of `t * a`.
pub fn expm(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    (a * t).exp()
}

/// Relative max-norm distance.
pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1e-300)
}

/// `(r, t)` amplitudes at normal incidence from vacuum onto `layers`
/// (refractive index, thickness), with vacuum behind.
pub fn tmm(layers: &[(C64, f64)], k_vac: f64) -> (C64, C64) {
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let mut m = [[one, C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), one]];
    for &(n, d) in layers {
        let delta = n * k_vac * d;
        let (c, s) = (delta.cos(), delta.sin());
        let l = [[c, -i * s / n], [-i * n * s, c]];
        m = [
            [m[0][0] * l[0][0] + m[0][1] * l[1][0], m[0][0] * l[0][1] + m[0][1] * l[1][1]],
            [m[1][0] * l[0][0] + m[1][1] * l[1][0], m[1][0] * l[0][1] + m[1][1] * l[1][1]],
        ];
    }
    let den = m[0][0] + m[0][1] + m[1][0] + m[1][1];
    let r = (m[0][0] + m[0][1] - m[1][0] - m[1][1]) / den;
    (r, 2.0 * one / den)
}

/// `|R|^2, |T|^2` of a uniform slab of permittivity `eps` and thickness `d`.
pub fn slab_rt(eps: C64, d: f64, omega: f64, c: f64) -> (f64, f64) {
    let (r, t) = tmm(&[(eps.sqrt(), d)], omega / c);
    (r.norm_sqr(), t.norm_sqr())
}

/// Lorentz permittivity written out directly.
pub fn lorentz_eps(omega: f64, res: &[(f64, f64, f64)]) -> C64 {
    let mut eps = C64::new(1.0, 0.0);
    for &(w0, g, wp) in res {
        eps += wp * wp / C64::new(w0 * w0 - omega * omega, -2.0 * g * omega);
    }
    eps
}

/// Real-space spectral derivative matrix on a periodic axis with odd `n`.
pub fn derivative_matrix(n: usize, dr: f64) -> DMatrix<f64> {
    assert!(n % 2 == 1, "odd n has no Nyquist mode");
    let len = n as f64 * dr;
    let half = (n as i64 - 1) / 2;
    DMatrix::from_fn(n, n, |i, j| {
        let mut s = 0.0;
        for m in -half..=half {
            let k = std::f64::consts::TAU * m as f64 / len;
            let phase = k * (i as f64 - j as f64) * dr;
            // Re(i k e^{i phase})
            s += -k * phase.sin();
        }
        s / n as f64
    })
}

/// `d/dx_axis` on flattened grid data.
pub fn axis_derivative(grid: &Grid<f64>, axis: usize) -> DMatrix<f64> {
    let len = grid.len();
    if axis >= grid.dims() {
        return DMatrix::zeros(len, len);
    }
    let d1 = derivative_matrix(grid.n()[axis], grid.dr()[axis]);
    DMatrix::from_fn(len, len, |i, j| {
        let (ci, cj) = (grid.coords(i), grid.coords(j));
        let same = (0..3).all(|a| a == axis || ci[a] == cj[a]);
        if same {
            d1[(ci[axis], cj[axis])]
        } else {
            0.0
        }
    })
}

/// Curl as a `3 len x 3 len` block matrix acting on `(x, y, z)` stacked components.
pub fn curl_matrix(grid: &Grid<f64>) -> DMatrix<f64> {
    let len = grid.len();
    let d: Vec<DMatrix<f64>> = (0..3).map(|a| axis_derivative(grid, a)).collect();
    let mut m = DMatrix::zeros(3 * len, 3 * len);
    // (curl v)_a = d_b v_c - d_c v_b for cyclic (a, b, c)
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        m.view_mut((a * len, c * len), (len, len)).copy_from(&d[b]);
        m.view_mut((a * len, b * len), (len, len)).copy_from(&(-&d[c]));
    }
    m
}

pub fn flatten(v: &VectorField<f64>) -> Vec<f64> {
    v.comp.iter().flatten().copied().collect()
}

pub fn unflatten(x: &[f64]) -> VectorField<f64> {
    let len = x.len() / 3;
    VectorField {
        comp: [x[..len].to_vec(), x[len..2 * len].to_vec(), x[2 * len..].to_vec()],
    }
}

/// Deterministic pseudo-random numbers in `[-1, 1)` (SplitMix64).
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed)
    }

    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * 0.5 * (self.next_f64() + 1.0)
    }

    pub fn field(&mut self, len: usize) -> VectorField<f64> {
        VectorField {
            comp: [0, 1, 2].map(|_| (0..len).map(|_| self.next_f64()).collect()),
        }
    }
}

/// Resonances whose plasma frequency is `wp` on `[from, to)` along x and zero elsewhere.
pub fn slab_medium(grid: &Grid<f64>, from: f64, to: f64, res: &[(f64, f64, f64)], sigma: Option<Vec<f64>>) -> MediumMap<f64> {
    let inside: Vec<bool> = (0..grid.len())
        .map(|i| {
            let x = grid.position(i)[0];
            x >= from && x < to
        })
        .collect();
    let list = res
        .iter()
        .map(|&(w0, g, wp)| {
            LorentzResonance::new(w0, g, inside.iter().map(|&b| if b { wp } else { 0.0 }).collect()).unwrap()
        })
        .collect();
    MediumMap::new(grid, list, sigma).unwrap()
}
