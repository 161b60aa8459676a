//! Lorentz/Drude media: per-point resonance parameters, the permittivity,
//! and the closed-form local exponentials used by the steppers.
//!
//! Per Cartesian component the local operators act on the vector
//! `u = (E or D, xi^1, xi^2, .., xi^2N)` of length `m = 1 + 2N`. In the field
//! representation resonance `a` obeys
//!
//! ```text
//! d/dt xi^{2a-1} = alpha_a xi^{2a}
//! d/dt xi^{2a}   = -beta_a xi^{2a-1} - 2 gamma_a xi^{2a} + omega_pa E
//! d/dt E        = c curl H - sum_a omega_pa xi^{2a} - 4 pi sigma E
//! ```
//!
//! with `alpha = beta = omega_a` for a Lorentz resonance. A Drude resonance
//! (`omega_a = 0`) uses `xi^{2a-1} = P^a` itself, giving `alpha = omega_pa(x)`,
//! `beta = 0`, and a unit polarization coefficient `r_a = 1` instead of
//! `omega_pa / omega_a`.

use std::collections::HashMap;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{Grid, VectorField};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::spectral::{FreeKernel, Spectral};
use crate::state::{FieldState, InductionState, MatterPair};

/// 2x2 real matrix, row-major.
pub type Mat2<T> = [[T; 2]; 2];

/// One damped oscillator with a spatially varying plasma frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct LorentzResonance<T> {
    pub omega: T,
    pub gamma: T,
    pub omega_p: Vec<T>,
}

impl<T: Real> LorentzResonance<T> {
    pub fn new(omega: T, gamma: T, omega_p: Vec<T>) -> Result<Self> {
        if !(omega >= T::zero()) || !omega.is_finite() {
            return Err(Error::InvalidMedium(format!("omega must be >= 0, got {omega}")));
        }
        if !(gamma >= T::zero()) || !gamma.is_finite() {
            return Err(Error::InvalidMedium(format!("gamma must be >= 0, got {gamma}")));
        }
        if let Some(bad) = omega_p.iter().find(|w| !(**w >= T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidMedium(format!(
                "plasma frequency must be >= 0 everywhere, found {bad}"
            )));
        }
        Ok(LorentzResonance {
            omega,
            gamma,
            omega_p,
        })
    }

    /// Resonance with the same plasma frequency at every point.
    pub fn uniform(omega: T, gamma: T, omega_p: T, len: usize) -> Result<Self> {
        Self::new(omega, gamma, vec![omega_p; len])
    }

    pub fn is_drude(&self) -> bool {
        self.omega == T::zero()
    }

    /// `(alpha, beta)` of the matter generator at plasma frequency `wp`.
    #[inline]
    pub fn generator(&self, wp: T) -> (T, T) {
        if self.is_drude() {
            (wp, T::zero())
        } else {
            (self.omega, self.omega)
        }
    }

    /// Coefficient of `xi^{2a-1}` in the polarization at plasma frequency `wp`.
    #[inline]
    pub fn r(&self, wp: T) -> T {
        if self.is_drude() {
            T::one()
        } else {
            wp / self.omega
        }
    }
}

/// Resonances plus Ohmic conductivity over a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MediumMap<T> {
    resonances: Vec<LorentzResonance<T>>,
    sigma: Vec<T>,
}

impl<T: Real> MediumMap<T> {
    /// Validates shapes and signs. Conductivity may only be nonzero where
    /// every plasma frequency vanishes (absorbers sit in vacuum).
    pub fn new(grid: &Grid<T>, resonances: Vec<LorentzResonance<T>>, sigma: Option<Vec<T>>) -> Result<Self> {
        let len = grid.len();
        let sigma = sigma.unwrap_or_else(|| vec![T::zero(); len]);
        if sigma.len() != len {
            return Err(Error::ShapeMismatch {
                expected: len,
                found: sigma.len(),
            });
        }
        if let Some(bad) = sigma.iter().find(|s| !(**s >= T::zero()) || !s.is_finite()) {
            return Err(Error::InvalidMedium(format!("conductivity must be >= 0, found {bad}")));
        }
        for (a, res) in resonances.iter().enumerate() {
            if res.omega_p.len() != len {
                return Err(Error::ShapeMismatch {
                    expected: len,
                    found: res.omega_p.len(),
                });
            }
            LorentzResonance::new(res.omega, res.gamma, Vec::new())?;
            if let Some(bad) = res.omega_p.iter().find(|w| !(**w >= T::zero()) || !w.is_finite()) {
                return Err(Error::InvalidMedium(format!(
                    "plasma frequency must be >= 0 everywhere, found {bad}"
                )));
            }
            if let Some(i) = (0..len).find(|&i| sigma[i] > T::zero() && res.omega_p[i] > T::zero()) {
                return Err(Error::InvalidMedium(format!(
                    "conductivity overlaps resonance {a} at point {i}; absorbing layers must be vacuum-backed"
                )));
            }
        }
        Ok(MediumMap { resonances, sigma })
    }

    pub fn vacuum(grid: &Grid<T>) -> Self {
        MediumMap {
            resonances: Vec::new(),
            sigma: vec![T::zero(); grid.len()],
        }
    }

    pub fn resonance_count(&self) -> usize {
        self.resonances.len()
    }

    pub fn resonances(&self) -> &[LorentzResonance<T>] {
        &self.resonances
    }

    pub fn sigma(&self) -> &[T] {
        &self.sigma
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// Local block size `1 + 2N`.
    pub fn block_size(&self) -> usize {
        1 + 2 * self.resonances.len()
    }

    /// `sqrt(sum_a omega_pa^2)` at point `i`.
    pub fn total_plasma_frequency(&self, i: usize) -> T {
        self.resonances
            .iter()
            .map(|r| r.omega_p[i] * r.omega_p[i])
            .sum::<T>()
            .sqrt()
    }

    pub fn max_plasma_frequency(&self) -> T {
        (0..self.len())
            .map(|i| self.total_plasma_frequency(i))
            .fold(T::zero(), T::max)
    }

    pub fn max_sigma(&self) -> T {
        self.sigma.iter().copied().fold(T::zero(), T::max)
    }

    /// Component `a` of `R xi` at point `i`.
    #[inline]
    pub fn polarization_at(&self, matter: &[MatterPair<T>], a: usize, i: usize) -> T {
        self.resonances
            .iter()
            .zip(matter)
            .map(|(res, p)| res.r(res.omega_p[i]) * p.odd.comp[a][i])
            .sum()
    }

    /// `target += s * R xi`.
    pub fn add_polarization(&self, matter: &[MatterPair<T>], s: T, target: &mut VectorField<T>) {
        for (res, p) in self.resonances.iter().zip(matter) {
            for a in 0..3 {
                for i in 0..target.len() {
                    let r = res.r(res.omega_p[i]);
                    if r != T::zero() {
                        target.comp[a][i] = target.comp[a][i] + s * r * p.odd.comp[a][i];
                    }
                }
            }
        }
    }

    /// Plasma frequencies of every resonance at point `i`.
    pub fn plasma_at(&self, i: usize) -> Vec<T> {
        self.resonances.iter().map(|r| r.omega_p[i]).collect()
    }

    /// Static permittivity `1 + sum omega_pa^2 / omega_a^2` at point `i`.
    pub fn static_permittivity(&self, i: usize) -> Result<T> {
        let mut eps = T::one();
        for res in &self.resonances {
            let wp = res.omega_p[i];
            if wp == T::zero() {
                continue;
            }
            if res.is_drude() {
                return Err(Error::InvalidMedium(
                    "a Drude resonance has no static permittivity".into(),
                ));
            }
            eps = eps + wp * wp / (res.omega * res.omega);
        }
        Ok(eps)
    }

    fn point_key(&self, i: usize) -> Vec<u64> {
        let mut key = Vec::with_capacity(1 + self.resonances.len());
        key.push(self.sigma[i].to_f64_lossy().to_bits());
        key.extend(self.resonances.iter().map(|r| r.omega_p[i].to_f64_lossy().to_bits()));
        key
    }
}

/// Parameters of one resonance at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointResonance<T> {
    pub omega: T,
    pub gamma: T,
    pub omega_p: T,
}

/// `eps(w) = 1 + sum_a omega_pa^2 / (omega_a^2 - w^2 - 2 i gamma_a w)`.
pub fn permittivity<T: Real>(w: T, params: &[PointResonance<T>]) -> Result<Complex<T>> {
    let mut eps = Complex::new(T::one(), T::zero());
    for p in params {
        if p.omega_p == T::zero() {
            continue;
        }
        let den = Complex::new(p.omega * p.omega - w * w, -T::lit(2.0) * p.gamma * w);
        if den.re == T::zero() && den.im == T::zero() {
            return Err(Error::PoleOnRealAxis {
                omega: w.to_f64_lossy(),
            });
        }
        eps = eps + Complex::new(p.omega_p * p.omega_p, T::zero()) / den;
    }
    Ok(eps)
}

/// `exp(t [[0, alpha], [-beta, -2 gamma]])` in closed form.
///
/// Writes the result as `e^{-gamma t}[C + S (H + gamma)]` with
/// `nu~^2 = gamma^2 - alpha beta`: hyperbolic for `nu~^2 > 0`, trigonometric
/// for `nu~^2 < 0`, and a series in `nu~^2 t^2` near the critical point.
pub fn matter_exponential_general<T: Real>(alpha: T, beta: T, gamma: T, t: T) -> Mat2<T> {
    let nu2 = gamma * gamma - alpha * beta;
    let s = nu2 * t * t;
    let decay = (-gamma * t).exp();
    // (C', S') = e^{-gamma t} (C, S)
    let (c, sn) = if s.magnitude() < T::lit(1e-8) {
        (
            decay * (T::one() + s / T::lit(2.0) + s * s / T::lit(24.0)),
            decay * t * (T::one() + s / T::lit(6.0) + s * s / T::lit(120.0)),
        )
    } else if nu2 < T::zero() {
        let nu = (-nu2).sqrt();
        (decay * (nu * t).cos(), decay * (nu * t).sin() / nu)
    } else {
        // Combine the exponentials to avoid overflow of cosh for large t.
        let nu = nu2.sqrt();
        let plus = ((nu - gamma) * t).exp();
        let minus = ((-nu - gamma) * t).exp();
        (
            (plus + minus) / T::lit(2.0),
            (plus - minus) / (T::lit(2.0) * nu),
        )
    };
    [
        [c + sn * gamma, sn * alpha],
        [-sn * beta, c - sn * gamma],
    ]
}

/// Exact `exp(t H_M)` for a Lorentz resonance, `H_M = [[0, w], [-w, -2 gamma]]`.
pub fn matter_exponential<T: Real>(omega: T, gamma: T, t: T) -> Mat2<T> {
    matter_exponential_general(omega, omega, gamma, t)
}

/// Applies the coupling exponential
/// `1 + (sin(w_p t)/w_p) V + 2 (sin(w_p t/2)/w_p)^2 V^2` pointwise, where `V`
/// exchanges `E` with the `xi^{2a}` fields and `w_p^2 = sum_a w_pa^2`.
pub fn coupling_exponential_apply<T: Real>(state: &mut FieldState<T>, medium: &MediumMap<T>, dt: T) {
    let res = medium.resonances();
    for i in 0..medium.len() {
        let wp = medium.total_plasma_frequency(i);
        if wp == T::zero() {
            continue;
        }
        let a1 = (wp * dt).sin() / wp;
        let half = (wp * dt / T::lit(2.0)).sin() / wp;
        let a2 = T::lit(2.0) * half * half;
        for c in 0..3 {
            let e = state.e.comp[c][i];
            // (V u)_E
            let ve = -res
                .iter()
                .zip(&state.matter)
                .map(|(r, p)| r.omega_p[i] * p.even.comp[c][i])
                .sum::<T>();
            state.e.comp[c][i] = e + a1 * ve - a2 * wp * wp * e;
            for (r, p) in res.iter().zip(state.matter.iter_mut()) {
                let w = r.omega_p[i];
                let x = p.even.comp[c][i];
                p.even.comp[c][i] = x + a1 * w * e + a2 * w * ve;
            }
        }
    }
}

/// `exp(t H0^I)`: free evolution of `(E, B)` with `E = D - P`, polarization held fixed.
pub fn induction_free_exponential_apply<T: Real>(
    state: &mut InductionState<T>,
    medium: &MediumMap<T>,
    spectral: &Spectral<T>,
    t: T,
) {
    let kernel = spectral.free_kernel(t);
    induction_free_apply_kernel(state, medium, spectral, &kernel);
}

pub(crate) fn induction_free_apply_kernel<T: Real>(
    state: &mut InductionState<T>,
    medium: &MediumMap<T>,
    spectral: &Spectral<T>,
    kernel: &FreeKernel<T>,
) {
    medium.add_polarization(&state.matter, -T::one(), &mut state.d);
    kernel.apply(spectral, &mut state.d, &mut state.b);
    medium.add_polarization(&state.matter, T::one(), &mut state.d);
}

/// `exp(dt V^I)` applied pointwise; `(D, B)` are unchanged when `sigma = 0`.
pub fn induction_local_exponential_apply<T: Real>(state: &mut InductionState<T>, medium: &MediumMap<T>, dt: T) {
    LocalTable::split_induction(medium, dt).apply(&mut state.d, &mut state.matter);
}

/// Generator of the induction-representation local part at one point,
/// acting on `(D, xi^1 .. xi^2N)` for one component.
pub fn induction_local_generator<T: Real>(res: &[LorentzResonance<T>], wp: &[T], sigma: T) -> Matrix<T> {
    let m = 1 + 2 * res.len();
    let mut a = Matrix::zeros(m);
    let four_pi_sigma = T::lit(4.0) * T::PI() * sigma;
    a[(0, 0)] = -four_pi_sigma;
    for (b, r) in res.iter().enumerate() {
        a[(0, 1 + 2 * b)] = four_pi_sigma * r.r(wp[b]);
    }
    for (k, r) in res.iter().enumerate() {
        let (alpha, beta) = r.generator(wp[k]);
        let odd = 1 + 2 * k;
        let even = odd + 1;
        a[(odd, even)] = alpha;
        a[(even, 0)] = wp[k];
        a[(even, odd)] = a[(even, odd)] - beta;
        a[(even, even)] = -T::lit(2.0) * r.gamma;
        for (b, rb) in res.iter().enumerate() {
            let idx = (even, 1 + 2 * b);
            a[idx] = a[idx] - wp[k] * rb.r(wp[b]);
        }
    }
    a
}

/// Generator of the field-representation local part (matter, coupling and
/// conductivity) at one point.
pub fn field_local_generator<T: Real>(res: &[LorentzResonance<T>], wp: &[T], sigma: T) -> Matrix<T> {
    let m = 1 + 2 * res.len();
    let mut a = Matrix::zeros(m);
    a[(0, 0)] = -T::lit(4.0) * T::PI() * sigma;
    for (k, r) in res.iter().enumerate() {
        let (alpha, beta) = r.generator(wp[k]);
        let odd = 1 + 2 * k;
        let even = odd + 1;
        a[(odd, even)] = alpha;
        a[(even, odd)] = -beta;
        a[(even, even)] = -T::lit(2.0) * r.gamma;
        a[(0, even)] = -wp[k];
        a[(even, 0)] = wp[k];
    }
    a
}

/// Underdamped eigenvalue `lambda = -gamma + i nu`, `nu = sqrt(omega^2 - gamma^2)`.
pub fn complex_rep_eigenvalue<T: Real>(omega: T, gamma: T) -> Result<Complex<T>> {
    if !(gamma < omega) {
        return Err(Error::Overdamped {
            gamma: gamma.to_f64_lossy(),
            omega: omega.to_f64_lossy(),
        });
    }
    Ok(Complex::new(-gamma, (omega * omega - gamma * gamma).sqrt()))
}

/// Complex matter amplitude `zeta` of the pair `(xi^{2a-1}, xi^{2a})`.
/// It evolves as `zeta(t) = e^{lambda t} zeta(0)`.
pub fn complex_rep<T: Real>(xi1: T, xi2: T, omega: T, gamma: T) -> Result<Complex<T>> {
    let lambda = complex_rep_eigenvalue(omega, gamma)?;
    let re = lambda.im * xi1 / omega;
    Ok(Complex::new(re, -xi2 - gamma * xi1 / omega))
}

/// Inverse of [`complex_rep`]: `xi1 = (omega/nu) Re zeta`, `xi2 = Re(lambda zeta)/nu`.
pub fn complex_rep_inverse<T: Real>(zeta: Complex<T>, omega: T, gamma: T) -> Result<(T, T)> {
    let lambda = complex_rep_eigenvalue(omega, gamma)?;
    let nu = lambda.im;
    Ok((omega / nu * zeta.re, (lambda * zeta).re / nu))
}

/// Per-point `(1 + 2N)`-square local blocks, deduplicated over points that
/// share the same parameters.
#[derive(Clone, Debug)]
pub struct LocalTable<T> {
    m: usize,
    blocks: Vec<Matrix<T>>,
    index: Vec<u32>,
}

impl<T: Real> LocalTable<T> {
    /// Builds one block per distinct `(sigma, omega_p..)` tuple with `f(wp, sigma)`.
    pub fn build(medium: &MediumMap<T>, mut f: impl FnMut(&[T], T) -> Matrix<T>) -> Self {
        let mut seen: HashMap<Vec<u64>, u32> = HashMap::new();
        let mut blocks = Vec::new();
        let mut index = Vec::with_capacity(medium.len());
        for i in 0..medium.len() {
            let key = medium.point_key(i);
            let id = *seen.entry(key).or_insert_with(|| {
                blocks.push(f(&medium.plasma_at(i), medium.sigma()[i]));
                (blocks.len() - 1) as u32
            });
            index.push(id);
        }
        LocalTable {
            m: medium.block_size(),
            blocks,
            index,
        }
    }

    /// Strang-symmetric field-representation local factor
    /// `D_sigma M(dt/2) exp(dt V) M(dt/2) D_sigma`, `D_sigma = e^{-2 pi sigma dt}` on E.
    pub fn split_field(medium: &MediumMap<T>, dt: T) -> Self {
        let res = medium.resonances().to_vec();
        Self::build(medium, |wp, sigma| split_field_block(&res, wp, sigma, dt))
    }

    /// `exp(dt V^I)`: closed form at vacuum points and for a single
    /// resonance without conductivity; dense exponential otherwise.
    pub fn split_induction(medium: &MediumMap<T>, dt: T) -> Self {
        let res = medium.resonances().to_vec();
        Self::build(medium, |wp, sigma| induction_local_block(&res, wp, sigma, dt))
    }

    /// Leapfrog damping factor `exp(t V_l)`: `e^{-4 pi sigma t}` on E and the
    /// matter exponentials, couplings excluded.
    pub fn leapfrog_field(medium: &MediumMap<T>, t: T) -> Self {
        let res = medium.resonances().to_vec();
        Self::build(medium, |wp, sigma| leapfrog_field_block(&res, wp, sigma, t))
    }

    /// Leapfrog local factor in the induction representation,
    /// `S e^{t V_l / 2} e^{t V} e^{t V_l / 2} S^-1` with `V_l` the damping part
    /// and `V` the skew coupling of the field representation.
    pub fn leapfrog_induction(medium: &MediumMap<T>, t: T) -> Self {
        let res = medium.resonances().to_vec();
        Self::build(medium, |wp, sigma| {
            let l = split_field_block(&res, wp, sigma, t);
            let m = l.dim();
            let mut s = Matrix::identity(m);
            let mut s_inv = Matrix::identity(m);
            for (k, r) in res.iter().enumerate() {
                s[(0, 1 + 2 * k)] = r.r(wp[k]);
                s_inv[(0, 1 + 2 * k)] = -r.r(wp[k]);
            }
            s.mul(&l).mul(&s_inv)
        })
    }

    pub fn block_size(&self) -> usize {
        self.m
    }

    /// Number of distinct blocks.
    pub fn distinct(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_at(&self, i: usize) -> &Matrix<T> {
        &self.blocks[self.index[i] as usize]
    }

    /// `u <- B(x) u` at every point and component, `u = (first, xi^1 ..)`.
    pub fn apply(&self, first: &mut VectorField<T>, matter: &mut [MatterPair<T>]) {
        let m = self.m;
        let mut u = vec![T::zero(); m];
        let mut out = vec![T::zero(); m];
        for c in 0..3 {
            for (i, &id) in self.index.iter().enumerate() {
                let block = &self.blocks[id as usize];
                u[0] = first.comp[c][i];
                for (k, p) in matter.iter().enumerate() {
                    u[1 + 2 * k] = p.odd.comp[c][i];
                    u[2 + 2 * k] = p.even.comp[c][i];
                }
                block.apply(&u, &mut out);
                first.comp[c][i] = out[0];
                for (k, p) in matter.iter_mut().enumerate() {
                    p.odd.comp[c][i] = out[1 + 2 * k];
                    p.even.comp[c][i] = out[2 + 2 * k];
                }
            }
        }
    }
}

fn set_pair<T: Real>(m: &mut Matrix<T>, k: usize, e: &Mat2<T>) {
    let o = 1 + 2 * k;
    m[(o, o)] = e[0][0];
    m[(o, o + 1)] = e[0][1];
    m[(o + 1, o)] = e[1][0];
    m[(o + 1, o + 1)] = e[1][1];
}

fn split_field_block<T: Real>(res: &[LorentzResonance<T>], wp: &[T], sigma: T, dt: T) -> Matrix<T> {
    let m = 1 + 2 * res.len();
    let half = dt / T::lit(2.0);
    let mut mh = Matrix::identity(m);
    for (k, r) in res.iter().enumerate() {
        let (alpha, beta) = r.generator(wp[k]);
        set_pair(&mut mh, k, &matter_exponential_general(alpha, beta, r.gamma, half));
    }
    let v = coupling_block(res, wp, dt);
    let mut d = Matrix::identity(m);
    d[(0, 0)] = (-T::lit(2.0) * T::PI() * sigma * dt).exp();
    d.mul(&mh).mul(&v).mul(&mh).mul(&d)
}

/// Closed-form coupling exponential as a dense block.
fn coupling_block<T: Real>(res: &[LorentzResonance<T>], wp: &[T], dt: T) -> Matrix<T> {
    let m = 1 + 2 * res.len();
    let total = wp.iter().map(|&w| w * w).sum::<T>().sqrt();
    let out = Matrix::identity(m);
    if total == T::zero() {
        return out;
    }
    let mut v = Matrix::zeros(m);
    for k in 0..res.len() {
        v[(0, 2 + 2 * k)] = -wp[k];
        v[(2 + 2 * k, 0)] = wp[k];
    }
    let a1 = (total * dt).sin() / total;
    let half = (total * dt / T::lit(2.0)).sin() / total;
    let a2 = T::lit(2.0) * half * half;
    out.add(&v.scale(a1)).add(&v.mul(&v).scale(a2))
}

fn leapfrog_field_block<T: Real>(res: &[LorentzResonance<T>], wp: &[T], sigma: T, t: T) -> Matrix<T> {
    let m = 1 + 2 * res.len();
    let mut l = Matrix::identity(m);
    l[(0, 0)] = (-T::lit(4.0) * T::PI() * sigma * t).exp();
    for (k, r) in res.iter().enumerate() {
        let (alpha, beta) = r.generator(wp[k]);
        set_pair(&mut l, k, &matter_exponential_general(alpha, beta, r.gamma, t));
    }
    l
}

fn induction_local_block<T: Real>(res: &[LorentzResonance<T>], wp: &[T], sigma: T, dt: T) -> Matrix<T> {
    let m = 1 + 2 * res.len();
    if wp.iter().all(|&w| w == T::zero()) {
        let mut out = Matrix::identity(m);
        out[(0, 0)] = (-T::lit(4.0) * T::PI() * sigma * dt).exp();
        for (k, r) in res.iter().enumerate() {
            let (alpha, beta) = r.generator(T::zero());
            set_pair(&mut out, k, &matter_exponential_general(alpha, beta, r.gamma, dt));
        }
        return out;
    }
    if res.len() == 1 && sigma == T::zero() {
        let r = &res[0];
        let w = wp[0];
        let (alpha, beta) = r.generator(w);
        let beta_eff = beta + w * r.r(w);
        let e = matter_exponential_general(alpha, beta_eff, r.gamma, dt);
        let corner = one_resonance_corner(alpha, beta_eff, r.gamma, w, dt, &e);
        let mut out = Matrix::identity(3);
        set_pair(&mut out, 0, &e);
        out[(1, 0)] = corner[0];
        out[(2, 0)] = corner[1];
        return out;
    }
    induction_local_generator(res, wp, sigma).scale(dt).expm()
}

/// `H^-1 (e^{dt H} - 1) (0, w)^T` for `H = [[0, alpha], [-beta, -2 gamma]]`.
fn one_resonance_corner<T: Real>(alpha: T, beta: T, gamma: T, w: T, dt: T, e: &Mat2<T>) -> [T; 2] {
    let det = alpha * beta;
    let scale = (alpha.magnitude() + beta.magnitude() + gamma.magnitude()).max(T::min_positive_value());
    if det.magnitude() > T::lit(1e-12) * scale * scale {
        // H^-1 (0, w) = (-w / beta, 0); H^-1 commutes with e^{dt H}.
        let x = -w / beta;
        return [(e[0][0] - T::one()) * x, e[1][0] * x];
    }
    corner_series(alpha, beta, gamma, w, dt)
}

/// `dt * sum_k (dt H)^k / (k+1)!` applied to `(0, w)`; valid for singular `H`.
fn corner_series<T: Real>(alpha: T, beta: T, gamma: T, w: T, dt: T) -> [T; 2] {
    let h = [[T::zero(), alpha], [-beta, -T::lit(2.0) * gamma]];
    let mut term = [T::zero(), w * dt];
    let mut acc = term;
    for k in 1..200 {
        let next = [
            (h[0][0] * term[0] + h[0][1] * term[1]) * dt / T::from_count(k + 1),
            (h[1][0] * term[0] + h[1][1] * term[1]) * dt / T::from_count(k + 1),
        ];
        term = next;
        acc = [acc[0] + term[0], acc[1] + term[1]];
        if term[0].magnitude() + term[1].magnitude()
            <= T::epsilon() * (acc[0].magnitude() + acc[1].magnitude())
        {
            break;
        }
    }
    acc
}
