//! Band-limited transverse wavepackets.
//!
//! With `g(r) = A exp(-kappa^2 r^2 / 2)`, `f_c = g cos(k0.r)` and
//! `f_s = g sin(k0.r)`, the s-polarized packet is
//!
//! ```text
//! E = P_perp(e2 f_c),   B^(k) = i (k/|k|) x e2 f_s^(k)
//! ```
//!
//! which travels along `+k0`. The p-polarized packet is its dual,
//! `E_p = B_s`, `B_p = -E_s`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, VectorField};
use crate::scalar::Real;
use crate::spectral::{cross_ik, Spectral};

/// Polarization of the packet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Polarization<T> {
    /// Electric field along `e2`.
    S,
    /// Magnetic field along `-e2`.
    P,
    /// `s_weight * S + p_weight * P` with the p carrier advanced by `phase`.
    Elliptic { s_weight: T, p_weight: T, phase: T },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseSpec<T> {
    pub k0: [T; 3],
    pub kappa: T,
    pub amplitude: T,
    pub polarization: Polarization<T>,
    pub center: [T; 3],
    /// Polarization direction; chosen automatically when `None`.
    pub e2: Option<[T; 3]>,
}

/// Envelope at the box edge must drop below about `1e-12`.
pub const EDGE_DECAY: f64 = 7.5;
/// Carrier plus this many widths must stay below the Nyquist wavenumber.
pub const BANDWIDTH_WIDTHS: f64 = 4.0;

fn dot<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm<T: Real>(a: [T; 3]) -> T {
    dot(a, a).sqrt()
}

impl<T: Real> PulseSpec<T> {
    pub fn new(k0: [T; 3], kappa: T, amplitude: T, center: [T; 3]) -> Self {
        PulseSpec {
            k0,
            kappa,
            amplitude,
            polarization: Polarization::S,
            center,
            e2: None,
        }
    }

    pub fn with_polarization(mut self, p: Polarization<T>) -> Self {
        self.polarization = p;
        self
    }

    pub fn k0_norm(&self) -> T {
        norm(self.k0)
    }

    /// Largest wavenumber with appreciable weight, `|k0| + 4 kappa`.
    pub fn k_band(&self) -> T {
        self.k0_norm() + T::lit(BANDWIDTH_WIDTHS) * self.kappa
    }

    /// Checks direction, width, resolution and edge decay on `grid`.
    pub fn validate(&self, grid: &Grid<T>) -> Result<()> {
        let k = self.k0_norm();
        if !(k > T::zero()) || !k.is_finite() {
            return Err(Error::InvalidPulse("k0 must be a nonzero finite vector".into()));
        }
        if !(self.kappa > T::zero()) || !self.kappa.is_finite() {
            return Err(Error::InvalidPulse(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::InvalidPulse("amplitude must be finite".into()));
        }
        for axis in grid.dims()..3 {
            if self.k0[axis] != T::zero() {
                return Err(Error::InvalidPulse(format!(
                    "k0 has a component along suppressed axis {axis} of a {}D grid",
                    grid.dims()
                )));
            }
        }
        let nyquist = (0..grid.dims()).map(|a| grid.nyquist(a)).fold(T::infinity(), T::min);
        let required = self.k_band();
        if required > nyquist {
            return Err(Error::BandwidthNotResolved {
                required: required.to_f64_lossy(),
                nyquist: nyquist.to_f64_lossy(),
            });
        }
        for axis in 0..grid.dims() {
            let half = self.kappa * grid.extent(axis) / T::lit(2.0);
            if !(half > T::lit(EDGE_DECAY)) {
                return Err(Error::InvalidPulse(format!(
                    "envelope does not decay within the box on axis {axis}: kappa*L/2 = {half}, need > {EDGE_DECAY}"
                )));
            }
        }
        self.polarization_vector(grid).map(|_| ())
    }

    /// Unit `e2` orthogonal to `k0`: the given direction Gram-Schmidt
    /// corrected, else the invariant axis of 1D/2D grids (y in 1D, z in 2D),
    /// else the coordinate axis least aligned with `k0`.
    pub fn polarization_vector(&self, grid: &Grid<T>) -> Result<[T; 3]> {
        let khat = {
            let k = self.k0_norm();
            [self.k0[0] / k, self.k0[1] / k, self.k0[2] / k]
        };
        let seed = match (self.e2, grid.dims()) {
            (Some(v), _) => v,
            (None, 1) => [T::zero(), T::one(), T::zero()],
            (None, 2) => [T::zero(), T::zero(), T::one()],
            (None, _) => {
                let axis = (0..3)
                    .min_by(|&a, &b| {
                        khat[a]
                            .magnitude()
                            .partial_cmp(&khat[b].magnitude())
                            .expect("finite")
                    })
                    .expect("three axes");
                let mut v = [T::zero(); 3];
                v[axis] = T::one();
                v
            }
        };
        let p = dot(seed, khat);
        let v = [seed[0] - p * khat[0], seed[1] - p * khat[1], seed[2] - p * khat[2]];
        let n = norm(v);
        if !(n > T::lit(1e-6) * norm(seed)) || !n.is_finite() {
            return Err(Error::InvalidPulse("polarization direction is parallel to k0".into()));
        }
        Ok([v[0] / n, v[1] / n, v[2] / n])
    }
}

/// `(f_c, f_s)` with carrier phase shifted by `phase`.
fn carriers<T: Real>(spec: &PulseSpec<T>, grid: &Grid<T>, phase: T) -> (Vec<T>, Vec<T>) {
    let len = grid.len();
    let mut fc = Vec::with_capacity(len);
    let mut fs = Vec::with_capacity(len);
    let half_k2 = spec.kappa * spec.kappa / T::lit(2.0);
    for i in 0..len {
        let pos = grid.position(i);
        let mut d = [T::zero(); 3];
        for axis in 0..grid.dims() {
            d[axis] = grid.min_image(axis, pos[axis] - spec.center[axis]);
        }
        let g = spec.amplitude * (-half_k2 * dot(d, d)).exp();
        let arg = dot(spec.k0, d) + phase;
        fc.push(g * arg.cos());
        fs.push(g * arg.sin());
    }
    (fc, fs)
}

/// s-polarized fields for a given carrier phase.
fn s_fields<T: Real>(spec: &PulseSpec<T>, sp: &Spectral<T>, e2: [T; 3], phase: T) -> (VectorField<T>, VectorField<T>) {
    let grid = sp.grid();
    let (fc, fs) = carriers(spec, grid, phase);
    let mut e = VectorField::zeros(grid.len());
    for a in 0..3 {
        for (x, &f) in e.comp[a].iter_mut().zip(&fc) {
            *x = e2[a] * f;
        }
    }
    let e = sp.project_transverse(&e);
    let fs_hat = sp.forward(&fs);
    let mut out = [sp.zero_spectrum(), sp.zero_spectrum(), sp.zero_spectrum()];
    sp.for_each_mode(|idx, _, k| {
        let kk = norm(k);
        if kk == T::zero() {
            return;
        }
        let f = fs_hat.data[idx];
        let v = [
            f * e2[0] / kk,
            f * e2[1] / kk,
            f * e2[2] / kk,
        ];
        let b = cross_ik(k, v);
        for a in 0..3 {
            out[a].data[idx] = b[a];
        }
    });
    (e, sp.inverse_vec(out))
}

/// Initial `(E, B)` of the packet.
pub fn build_pulse<T: Real>(spec: &PulseSpec<T>, grid: &Grid<T>) -> Result<(VectorField<T>, VectorField<T>)> {
    spec.validate(grid)?;
    let sp = Spectral::new(grid);
    let e2 = spec.polarization_vector(grid)?;
    Ok(match spec.polarization {
        Polarization::S => s_fields(spec, &sp, e2, T::zero()),
        Polarization::P => {
            let (e, b) = s_fields(spec, &sp, e2, T::zero());
            dual(e, b)
        }
        Polarization::Elliptic {
            s_weight,
            p_weight,
            phase,
        } => {
            let (mut e, mut b) = s_fields(spec, &sp, e2, T::zero());
            e.scale(s_weight);
            b.scale(s_weight);
            let (pe, pb) = {
                let (se, sb) = s_fields(spec, &sp, e2, phase);
                dual(se, sb)
            };
            e.axpy(p_weight, &pe);
            b.axpy(p_weight, &pb);
            (e, b)
        }
    })
}

/// `(E, B) -> (B, -E)`.
fn dual<T: Real>(mut e: VectorField<T>, b: VectorField<T>) -> (VectorField<T>, VectorField<T>) {
    e.scale(-T::one());
    (b, e)
}

/// One shell of [`pulse_spectrum`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumBin {
    /// Bin center `|k|`.
    pub k: f64,
    /// `sqrt` of the spectral power of `(E, B)` in the shell.
    pub amplitude: f64,
}

/// Shell-binned spectral magnitude of `(E, B)`, bin width equal to the
/// coarsest wavenumber spacing of the grid.
pub fn pulse_spectrum<T: Real>(e: &VectorField<T>, b: &VectorField<T>, grid: &Grid<T>) -> Vec<SpectrumBin> {
    let sp = Spectral::new(grid);
    let dk = (0..grid.dims())
        .map(|a| T::TAU() / grid.extent(a))
        .fold(T::zero(), T::max)
        .to_f64_lossy();
    let kmax = (0..grid.dims())
        .map(|a| grid.nyquist(a).to_f64_lossy().powi(2))
        .sum::<f64>()
        .sqrt();
    let nbins = (kmax / dk).floor() as usize + 2;
    let mut power = vec![0.0f64; nbins];
    let se = sp.forward_vec(e);
    let sb = sp.forward_vec(b);
    sp.for_each_mode(|idx, jx, k| {
        let kk = norm(k).to_f64_lossy();
        let bin = ((kk / dk).round() as usize).min(nbins - 1);
        let w = sp.weight(jx).to_f64_lossy();
        let p: f64 = (0..3)
            .map(|a| {
                let x: Complex<T> = se[a].data[idx];
                let y: Complex<T> = sb[a].data[idx];
                (x.norm_sqr() + y.norm_sqr()).to_f64_lossy()
            })
            .sum();
        power[bin] += w * p;
    });
    power
        .into_iter()
        .enumerate()
        .map(|(i, p)| SpectrumBin {
            k: i as f64 * dk,
            amplitude: p.sqrt(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::divergence_residual;

    fn grid2() -> Grid<f64> {
        Grid::new(&[64, 64], &[0.25, 0.25]).unwrap()
    }

    fn spec2() -> PulseSpec<f64> {
        PulseSpec::new([3.0, 1.0, 0.0], 1.5, 1.0, [8.0, 8.0, 0.0])
    }

    #[test]
    fn s_pulse_is_transverse_and_real() {
        let g = grid2();
        let (e, b) = build_pulse(&spec2(), &g).unwrap();
        let sp = Spectral::new(&g);
        assert!(divergence_residual(&sp, &e) < 1e-13);
        assert!(divergence_residual(&sp, &b) < 1e-13);
        assert!(e.is_finite() && b.is_finite());
        assert!(e.max_abs() > 0.5);
        // In 2D the s-pulse electric field lies along the invariant axis.
        assert!(e.comp[0].iter().chain(&e.comp[1]).all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn p_pulse_is_dual_of_s_pulse() {
        let g = grid2();
        let (es, bs) = build_pulse(&spec2(), &g).unwrap();
        let (ep, bp) = build_pulse(&spec2().with_polarization(Polarization::P), &g).unwrap();
        for a in 0..3 {
            for i in 0..g.len() {
                assert!((ep.comp[a][i] - bs.comp[a][i]).abs() < 1e-13);
                assert!((bp.comp[a][i] + es.comp[a][i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn bandwidth_violation_reports_both_numbers() {
        let g = Grid::new(&[64], &[0.5]).unwrap();
        let s = PulseSpec::new([6.0, 0.0, 0.0], 0.5, 1.0, [16.0, 0.0, 0.0]);
        match s.validate(&g) {
            Err(Error::BandwidthNotResolved { required, nyquist }) => {
                assert_eq!(required, 8.0);
                assert!((nyquist - 2.0 * std::f64::consts::PI).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        let narrow_box = PulseSpec::new([1.0, 0.0, 0.0], 0.1, 1.0, [16.0, 0.0, 0.0]);
        assert!(narrow_box.validate(&g).is_err());
        let off_axis = PulseSpec::new([1.0, 1.0, 0.0], 1.0, 1.0, [16.0, 0.0, 0.0]);
        assert!(off_axis.validate(&g).is_err());
    }

    #[test]
    fn three_d_polarization_is_orthogonal() {
        let g = Grid::new(&[32, 32, 32], &[0.5, 0.5, 0.5]).unwrap();
        let mut s = PulseSpec::new([1.0, 1.5, 0.5], 1.0, 1.0, [8.0, 8.0, 8.0]);
        let e2: [f64; 3] = s.polarization_vector(&g).unwrap();
        assert!(dot(e2, s.k0).abs() < 1e-14);
        assert!((norm(e2) - 1.0).abs() < 1e-14);
        s.e2 = Some([2.0, 3.0, 1.0]);
        assert!(s.polarization_vector(&g).is_err());
        s.e2 = Some([1.0, 0.0, 0.0]);
        let (e, b) = build_pulse(&s, &g).unwrap();
        let sp = Spectral::new(&g);
        assert!(divergence_residual(&sp, &e) < 1e-13);
        assert!(divergence_residual(&sp, &b) < 1e-13);
    }

    #[test]
    fn spectrum_peaks_at_carrier() {
        let g = Grid::new(&[512], &[0.125]).unwrap();
        let s = PulseSpec::new([2.0 * std::f64::consts::PI, 0.0, 0.0], 1.0, 1.0, [32.0, 0.0, 0.0]);
        let (e, b) = build_pulse(&s, &g).unwrap();
        let bins = pulse_spectrum(&e, &b, &g);
        let peak = bins
            .iter()
            .max_by(|x, y| x.amplitude.partial_cmp(&y.amplitude).unwrap())
            .unwrap();
        let dk = bins[1].k;
        assert!((peak.k - s.k0_norm()).abs() <= dk);
        let zero = pulse_spectrum(&VectorField::zeros(512), &VectorField::zeros(512), &g);
        assert!(zero.iter().all(|b| b.amplitude == 0.0));
    }
}
