//! Unitary discrete Fourier transform on a [`Grid`] and the operators that
//! are diagonal in Fourier space: projectors, curl, divergence and the exact
//! vacuum propagator.
//!
//! Real lattices are transformed to the conjugate-symmetric half spectrum:
//! real-to-complex along x (`nx/2 + 1` bins), full complex along y and z.
//! Both directions are scaled by `1/sqrt(N)`, so `sum |f|^2` equals the
//! weighted spectral sum returned by [`Spectral::spectral_sum_sq`].

use std::sync::Arc;

use num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::grid::{Grid, VectorField};
use crate::scalar::Real;

/// Half-spectrum coefficients, index `jx + hx * (jy + ny * jz)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T> {
    pub data: Vec<Complex<T>>,
}

/// FFT plans and wavevector tables for one grid.
pub struct Spectral<T: Real> {
    grid: Grid<T>,
    hx: usize,
    r2c: Arc<dyn RealToComplex<T>>,
    c2r: Arc<dyn ComplexToReal<T>>,
    fwd_y: Option<Arc<dyn Fft<T>>>,
    inv_y: Option<Arc<dyn Fft<T>>>,
    fwd_z: Option<Arc<dyn Fft<T>>>,
    inv_z: Option<Arc<dyn Fft<T>>>,
    kx: Vec<T>,
    ky: Vec<T>,
    kz: Vec<T>,
    scale: T,
}

impl<T: Real> std::fmt::Debug for Spectral<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl<T: Real> Spectral<T> {
    pub fn new(grid: &Grid<T>) -> Self {
        let [nx, ny, nz] = grid.n();
        let mut real_planner = RealFftPlanner::<T>::new();
        let mut planner = FftPlanner::<T>::new();
        let mut plan_pair = |n: usize| {
            if n > 1 {
                (
                    Some(planner.plan_fft_forward(n)),
                    Some(planner.plan_fft_inverse(n)),
                )
            } else {
                (None, None)
            }
        };
        let (fwd_y, inv_y) = plan_pair(ny);
        let (fwd_z, inv_z) = plan_pair(nz);
        let hx = nx / 2 + 1;
        Spectral {
            grid: grid.clone(),
            hx,
            r2c: real_planner.plan_fft_forward(nx),
            c2r: real_planner.plan_fft_inverse(nx),
            fwd_y,
            inv_y,
            fwd_z,
            inv_z,
            kx: (0..hx).map(|m| grid.wavenumber(0, m)).collect(),
            ky: (0..ny).map(|m| grid.wavenumber(1, m)).collect(),
            kz: (0..nz).map(|m| grid.wavenumber(2, m)).collect(),
            scale: T::one() / T::from_count(grid.len()).sqrt(),
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// Number of half-spectrum coefficients.
    pub fn spectrum_len(&self) -> usize {
        let [_, ny, nz] = self.grid.n();
        self.hx * ny * nz
    }

    pub fn zero_spectrum(&self) -> Spectrum<T> {
        Spectrum {
            data: vec![Complex::new(T::zero(), T::zero()); self.spectrum_len()],
        }
    }

    /// Parseval multiplicity of half-spectrum column `jx` (its conjugate
    /// partner is not stored unless it is the DC or Nyquist column).
    #[inline]
    pub fn weight(&self, jx: usize) -> T {
        let nx = self.grid.n()[0];
        if jx == 0 || (nx % 2 == 0 && jx == nx / 2) {
            T::one()
        } else {
            T::lit(2.0)
        }
    }

    /// Wavevector of half-spectrum index `idx`.
    #[inline]
    pub fn k_at(&self, idx: usize) -> [T; 3] {
        let jx = idx % self.hx;
        let rest = idx / self.hx;
        let ny = self.grid.n()[1];
        [self.kx[jx], self.ky[rest % ny], self.kz[rest / ny]]
    }

    /// Calls `f(idx, jx, k)` for every half-spectrum coefficient.
    #[inline]
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, usize, [T; 3])) {
        let [_, ny, nz] = self.grid.n();
        let mut idx = 0;
        for jz in 0..nz {
            for jy in 0..ny {
                for jx in 0..self.hx {
                    f(idx, jx, [self.kx[jx], self.ky[jy], self.kz[jz]]);
                    idx += 1;
                }
            }
        }
    }

    /// Forward unitary transform of a real lattice.
    pub fn forward(&self, f: &[T]) -> Spectrum<T> {
        let mut out = self.zero_spectrum();
        self.forward_into(f, &mut out);
        out
    }

    pub fn forward_into(&self, f: &[T], out: &mut Spectrum<T>) {
        assert_eq!(f.len(), self.grid.len(), "field length does not match grid");
        let [nx, ny, nz] = self.grid.n();
        let hx = self.hx;
        let mut line = vec![T::zero(); nx];
        let mut scratch = self.r2c.make_scratch_vec();
        for row in 0..ny * nz {
            line.copy_from_slice(&f[row * nx..(row + 1) * nx]);
            self.r2c
                .process_with_scratch(&mut line, &mut out.data[row * hx..(row + 1) * hx], &mut scratch)
                .expect("real FFT buffer sizes match the plan");
        }
        if let Some(fft) = &self.fwd_y {
            self.transform_y(fft.as_ref(), &mut out.data);
        }
        if let Some(fft) = &self.fwd_z {
            self.transform_z(fft.as_ref(), &mut out.data);
        }
        let s = self.scale;
        for c in &mut out.data {
            *c = *c * s;
        }
    }

    /// Inverse unitary transform; `s` is used as scratch and left undefined.
    pub fn inverse_into(&self, s: &mut Spectrum<T>, out: &mut [T]) {
        assert_eq!(out.len(), self.grid.len(), "field length does not match grid");
        let [nx, ny, nz] = self.grid.n();
        let hx = self.hx;
        if let Some(fft) = &self.inv_z {
            self.transform_z(fft.as_ref(), &mut s.data);
        }
        if let Some(fft) = &self.inv_y {
            self.transform_y(fft.as_ref(), &mut s.data);
        }
        let mut scratch = self.c2r.make_scratch_vec();
        let scale = self.scale;
        for row in 0..ny * nz {
            let spec = &mut s.data[row * hx..(row + 1) * hx];
            // DC and Nyquist bins of a real line are real; drop roundoff.
            spec[0].im = T::zero();
            if nx % 2 == 0 {
                spec[hx - 1].im = T::zero();
            }
            let dst = &mut out[row * nx..(row + 1) * nx];
            self.c2r
                .process_with_scratch(spec, dst, &mut scratch)
                .expect("real FFT buffer sizes match the plan");
            for x in dst.iter_mut() {
                *x = *x * scale;
            }
        }
    }

    pub fn inverse(&self, mut s: Spectrum<T>) -> Vec<T> {
        let mut out = vec![T::zero(); self.grid.len()];
        self.inverse_into(&mut s, &mut out);
        out
    }

    fn transform_y(&self, fft: &dyn Fft<T>, data: &mut [Complex<T>]) {
        let [_, ny, nz] = self.grid.n();
        let hx = self.hx;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); hx * ny];
        let mut scratch =
            vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        for jz in 0..nz {
            let plane = &mut data[jz * hx * ny..(jz + 1) * hx * ny];
            for jy in 0..ny {
                for jx in 0..hx {
                    buf[jx * ny + jy] = plane[jy * hx + jx];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for jy in 0..ny {
                for jx in 0..hx {
                    plane[jy * hx + jx] = buf[jx * ny + jy];
                }
            }
        }
    }

    fn transform_z(&self, fft: &dyn Fft<T>, data: &mut [Complex<T>]) {
        let [_, ny, nz] = self.grid.n();
        let hx = self.hx;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); hx * nz];
        let mut scratch =
            vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        for jy in 0..ny {
            for jz in 0..nz {
                for jx in 0..hx {
                    buf[jx * nz + jz] = data[jx + hx * (jy + ny * jz)];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for jz in 0..nz {
                for jx in 0..hx {
                    data[jx + hx * (jy + ny * jz)] = buf[jx * nz + jz];
                }
            }
        }
    }

    /// `sum |f|^2` evaluated from spectral coefficients.
    pub fn spectral_sum_sq(&self, s: &Spectrum<T>) -> T {
        let mut acc = T::zero();
        for (idx, c) in s.data.iter().enumerate() {
            acc = acc + self.weight(idx % self.hx) * c.norm_sqr();
        }
        acc
    }

    pub fn forward_vec(&self, v: &VectorField<T>) -> [Spectrum<T>; 3] {
        [
            self.forward(&v.comp[0]),
            self.forward(&v.comp[1]),
            self.forward(&v.comp[2]),
        ]
    }

    pub fn inverse_vec(&self, s: [Spectrum<T>; 3]) -> VectorField<T> {
        let [a, b, c] = s;
        VectorField {
            comp: [self.inverse(a), self.inverse(b), self.inverse(c)],
        }
    }

    fn map_vec(
        &self,
        v: &VectorField<T>,
        f: impl Fn([T; 3], [Complex<T>; 3]) -> [Complex<T>; 3],
    ) -> VectorField<T> {
        let mut s = self.forward_vec(v);
        self.for_each_mode(|idx, _, k| {
            let out = f(k, [s[0].data[idx], s[1].data[idx], s[2].data[idx]]);
            for a in 0..3 {
                s[a].data[idx] = out[a];
            }
        });
        self.inverse_vec(s)
    }

    /// Transverse projector `1 - grad lap^-1 div`; identity at `k = 0`.
    pub fn project_transverse(&self, v: &VectorField<T>) -> VectorField<T> {
        self.map_vec(v, |k, c| {
            let l = longitudinal_part(k, c);
            [c[0] - l[0], c[1] - l[1], c[2] - l[2]]
        })
    }

    /// Longitudinal projector `grad lap^-1 div`; zero at `k = 0`.
    pub fn project_longitudinal(&self, v: &VectorField<T>) -> VectorField<T> {
        self.map_vec(v, longitudinal_part)
    }

    /// `scale * curl v`.
    pub fn curl(&self, v: &VectorField<T>, scale: T) -> VectorField<T> {
        self.map_vec(v, |k, c| {
            let ik = cross_ik(k, c);
            [ik[0] * scale, ik[1] * scale, ik[2] * scale]
        })
    }

    pub fn divergence(&self, v: &VectorField<T>) -> Vec<T> {
        let s = self.forward_vec(v);
        let mut out = self.zero_spectrum();
        self.for_each_mode(|idx, _, k| {
            let d = s[0].data[idx] * k[0] + s[1].data[idx] * k[1] + s[2].data[idx] * k[2];
            out.data[idx] = Complex::new(-d.im, d.re);
        });
        self.inverse(out)
    }

    pub fn gradient(&self, phi: &[T]) -> VectorField<T> {
        let s = self.forward(phi);
        let mut out = [self.zero_spectrum(), self.zero_spectrum(), self.zero_spectrum()];
        self.for_each_mode(|idx, _, k| {
            let c = s.data[idx];
            let ic = Complex::new(-c.im, c.re);
            for a in 0..3 {
                out[a].data[idx] = ic * k[a];
            }
        });
        self.inverse_vec(out)
    }

    /// Kernel of `exp(t H0)` for a fixed `t`, reusable across steps.
    pub fn free_kernel(&self, t: T) -> FreeKernel<T> {
        let c = self.grid.c();
        let mut cos = Vec::with_capacity(self.spectrum_len());
        let mut sin_k = Vec::with_capacity(self.spectrum_len());
        self.for_each_mode(|_, _, k| {
            let kk = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
            let theta = c * kk * t;
            cos.push(theta.cos());
            // sin(theta) / |k| = c t sinc(theta)
            let sinc = if theta.magnitude() < T::lit(1e-4) {
                let th2 = theta * theta;
                T::one() - th2 / T::lit(6.0) + th2 * th2 / T::lit(120.0)
            } else {
                theta.sin() / theta
            };
            sin_k.push(c * t * sinc);
        });
        FreeKernel { t, cos, sin_k }
    }

    /// Exact vacuum evolution `exp(t H0)` of the pair `(E, H)`.
    pub fn free_propagator_apply(&self, e: &mut VectorField<T>, h: &mut VectorField<T>, t: T) {
        let kernel = self.free_kernel(t);
        kernel.apply(self, e, h);
    }
}

/// Precomputed per-mode factors of the free propagator for one time `t`.
#[derive(Clone, Debug)]
pub struct FreeKernel<T> {
    t: T,
    cos: Vec<T>,
    sin_k: Vec<T>,
}

impl<T: Real> FreeKernel<T> {
    pub fn time(&self) -> T {
        self.t
    }

    /// In-place `(E, H) <- exp(t H0) (E, H)`.
    ///
    /// Per mode: `E' = cos E + (1 - cos) k^(k^.E) + c s i k x H` and
    /// `H' = cos H + (1 - cos) k^(k^.H) - c s i k x E`, `s = sin(c|k|t)/(c|k|)`.
    pub fn apply(&self, sp: &Spectral<T>, e: &mut VectorField<T>, h: &mut VectorField<T>) {
        let mut se = sp.forward_vec(e);
        let mut sh = sp.forward_vec(h);
        self.apply_spectral(sp, &mut se, &mut sh);
        for a in 0..3 {
            let s = std::mem::replace(&mut se[a], Spectrum { data: Vec::new() });
            let mut s = s;
            sp.inverse_into(&mut s, &mut e.comp[a]);
            let mut s = std::mem::replace(&mut sh[a], Spectrum { data: Vec::new() });
            sp.inverse_into(&mut s, &mut h.comp[a]);
        }
    }

    /// The same update on already transformed fields.
    pub fn apply_spectral(&self, sp: &Spectral<T>, se: &mut [Spectrum<T>; 3], sh: &mut [Spectrum<T>; 3]) {
        sp.for_each_mode(|idx, _, k| {
            let cs = self.cos[idx];
            let g = self.sin_k[idx];
            let ev = [se[0].data[idx], se[1].data[idx], se[2].data[idx]];
            let hv = [sh[0].data[idx], sh[1].data[idx], sh[2].data[idx]];
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            let (le, lh) = if k2 > T::zero() {
                let one_minus = (T::one() - cs) / k2;
                let ke = ev[0] * k[0] + ev[1] * k[1] + ev[2] * k[2];
                let kh = hv[0] * k[0] + hv[1] * k[1] + hv[2] * k[2];
                (ke * one_minus, kh * one_minus)
            } else {
                (Complex::new(T::zero(), T::zero()), Complex::new(T::zero(), T::zero()))
            };
            let ch = cross_ik(k, hv);
            let ce = cross_ik(k, ev);
            for a in 0..3 {
                se[a].data[idx] = ev[a] * cs + le * k[a] + ch[a] * g;
                sh[a].data[idx] = hv[a] * cs + lh * k[a] - ce[a] * g;
            }
        });
    }
}

/// `i k x c`.
#[inline]
pub(crate) fn cross_ik<T: Real>(k: [T; 3], c: [Complex<T>; 3]) -> [Complex<T>; 3] {
    let x = c[2] * k[1] - c[1] * k[2];
    let y = c[0] * k[2] - c[2] * k[0];
    let z = c[1] * k[0] - c[0] * k[1];
    let i = |w: Complex<T>| Complex::new(-w.im, w.re);
    [i(x), i(y), i(z)]
}

#[inline]
pub(crate) fn longitudinal_part<T: Real>(k: [T; 3], c: [Complex<T>; 3]) -> [Complex<T>; 3] {
    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if k2 == T::zero() {
        return [Complex::new(T::zero(), T::zero()); 3];
    }
    let d = (c[0] * k[0] + c[1] * k[1] + c[2] * k[2]) / k2;
    [d * k[0], d * k[1], d * k[2]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den.max(1e-300)).sqrt()
    }

    fn pseudo_random(len: usize, seed: u64) -> Vec<f64> {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..len)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect()
    }

    #[test]
    fn constant_field_lands_in_dc() {
        let g = Grid::new(&[8], &[1.0]).unwrap();
        let sp = Spectral::new(&g);
        let s = sp.forward(&[1.0; 8]);
        assert!((s.data[0].re - 8f64.sqrt()).abs() < 1e-14);
        for c in &s.data[1..] {
            assert!(c.norm() < 1e-14);
        }
    }

    #[test]
    fn single_harmonic_has_one_stored_mode() {
        let g = Grid::new(&[8], &[1.0]).unwrap();
        let sp = Spectral::new(&g);
        let f: Vec<f64> = (0..8).map(|i| (TAU * i as f64 / 8.0).cos()).collect();
        let s = sp.forward(&f);
        for (j, c) in s.data.iter().enumerate() {
            if j == 1 {
                assert!((c.re - 8f64.sqrt() / 2.0).abs() < 1e-14);
            } else {
                assert!(c.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn round_trip_and_parseval_in_3d() {
        for n in [[8usize, 6, 5], [7, 4, 2], [2, 3, 4]] {
            let g = Grid::new(&n, &[0.3, 0.7, 1.1]).unwrap();
            let sp = Spectral::new(&g);
            let f = pseudo_random(g.len(), 3);
            let s = sp.forward(&f);
            let direct: f64 = f.iter().map(|x| x * x).sum();
            assert!((sp.spectral_sum_sq(&s) - direct).abs() < 1e-12 * direct);
            let back = sp.inverse(s);
            assert!(rel_err(&back, &f) < 1e-13);
        }
    }

    #[test]
    fn curl_of_single_harmonic() {
        let g = Grid::new(&[16], &[0.25]).unwrap();
        let sp = Spectral::new(&g);
        let k1 = TAU / 4.0;
        let v = VectorField::from_fn(&g, |r| [0.0, (k1 * r[0]).sin(), 0.0]);
        let c = sp.curl(&v, 1.0);
        for i in 0..g.len() {
            let x = g.position(i)[0];
            assert!((c.comp[2][i] - k1 * (k1 * x).cos()).abs() < 1e-12);
            assert!(c.comp[0][i].abs() < 1e-13 && c.comp[1][i].abs() < 1e-13);
        }
    }

    #[test]
    fn projectors_split_random_field() {
        let g = Grid::new(&[8, 6], &[0.5, 0.4]).unwrap();
        let sp = Spectral::new(&g);
        let v = VectorField {
            comp: [
                pseudo_random(g.len(), 1),
                pseudo_random(g.len(), 2),
                pseudo_random(g.len(), 3),
            ],
        };
        let t = sp.project_transverse(&v);
        let l = sp.project_longitudinal(&v);
        let tt = sp.project_transverse(&t);
        for a in 0..3 {
            for i in 0..g.len() {
                assert!((t.comp[a][i] + l.comp[a][i] - v.comp[a][i]).abs() < 1e-13);
                assert!((tt.comp[a][i] - t.comp[a][i]).abs() < 1e-13);
            }
        }
        let div = sp.divergence(&t);
        assert!(div.iter().all(|d| d.abs() < 1e-12));
        let cc = sp.divergence(&sp.curl(&v, 1.0));
        assert!(cc.iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn gradient_is_longitudinal() {
        let g = Grid::new(&[16], &[0.5]).unwrap();
        let sp = Spectral::new(&g);
        let k1 = TAU / 8.0;
        let phi: Vec<f64> = (0..16).map(|i| (k1 * 0.5 * i as f64).sin()).collect();
        let grad = sp.gradient(&phi);
        let t = sp.project_transverse(&grad);
        assert!(t.max_abs() < 1e-13);
        let l = sp.project_longitudinal(&grad);
        for a in 0..3 {
            for i in 0..16 {
                assert!((l.comp[a][i] - grad.comp[a][i]).abs() < 1e-13);
            }
        }
        assert!(sp.curl(&grad, 1.0).max_abs() < 1e-13);
    }

    #[test]
    fn free_propagator_zero_time_is_identity() {
        let g = Grid::new(&[8, 4], &[1.0, 1.0]).unwrap();
        let sp = Spectral::new(&g);
        let e0 = VectorField {
            comp: [
                pseudo_random(g.len(), 4),
                pseudo_random(g.len(), 5),
                pseudo_random(g.len(), 6),
            ],
        };
        let h0 = VectorField {
            comp: [
                pseudo_random(g.len(), 7),
                pseudo_random(g.len(), 8),
                pseudo_random(g.len(), 9),
            ],
        };
        let (mut e, mut h) = (e0.clone(), h0.clone());
        sp.free_propagator_apply(&mut e, &mut h, 0.0);
        for a in 0..3 {
            assert!(rel_err(&e.comp[a], &e0.comp[a]) < 1e-14);
            assert!(rel_err(&h.comp[a], &h0.comp[a]) < 1e-14);
        }
    }

    #[test]
    fn plane_wave_moves_right_at_c() {
        let n = 32;
        let dr = 0.25;
        let g = Grid::new(&[n], &[dr]).unwrap().with_c(1.5).unwrap();
        let sp = Spectral::new(&g);
        let k = 3.0 * TAU / (n as f64 * dr);
        let mut e = VectorField::from_fn(&g, |r| [0.0, (k * r[0]).cos(), 0.0]);
        let mut h = VectorField::from_fn(&g, |r| [0.0, 0.0, (k * r[0]).cos()]);
        let t = 0.37;
        sp.free_propagator_apply(&mut e, &mut h, t);
        for i in 0..n {
            let x = g.position(i)[0];
            let want = (k * x - k * 1.5 * t).cos();
            assert!((e.comp[1][i] - want).abs() < 1e-13);
            assert!((h.comp[2][i] - want).abs() < 1e-13);
        }
    }

    #[test]
    fn static_longitudinal_field_is_unchanged() {
        let g = Grid::new(&[16], &[0.5]).unwrap();
        let sp = Spectral::new(&g);
        let phi: Vec<f64> = (0..16).map(|i| (TAU * i as f64 / 16.0).sin()).collect();
        let e0 = sp.gradient(&phi);
        let mut e = e0.clone();
        let mut h = VectorField::zeros(16);
        sp.free_propagator_apply(&mut e, &mut h, 12.3);
        assert!(h.max_abs() < 1e-13);
        for i in 0..16 {
            assert!((e.comp[0][i] - e0.comp[0][i]).abs() < 1e-13);
        }
    }

    #[test]
    fn small_angle_kernel_uses_series() {
        let g = Grid::new(&[8], &[1.0]).unwrap();
        let sp = Spectral::new(&g);
        let kern = sp.free_kernel(1e-9);
        assert_eq!(kern.cos[0], 1.0);
        assert_eq!(kern.sin_k[0], 1e-9);
        assert!((kern.sin_k[1] - 1e-9f64).abs() < 1e-24);
    }
}
