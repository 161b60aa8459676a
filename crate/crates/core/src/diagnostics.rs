//! Energy, dissipation, Gauss residuals, stability numbers and convergence
//! measurements.

use std::io::Write;

use crate::boundary::AbsorberValidation;
use crate::error::{Error, Result};
use crate::grid::{Grid, VectorField};
use crate::medium::MediumMap;
use crate::propagator::{optics_bilinear, Integrator, OpticsState, PropagatorConfig, Representation, Scheme};
use crate::scalar::Real;
use crate::spectral::Spectral;
use crate::state::{FieldState, InductionState};

/// Split accuracy numbers above this count as "not small".
pub const ACCURACY_THRESHOLD: f64 = 0.3;

pub const WARN_SPLIT_ACCURACY: u32 = 1;
pub const WARN_GRADIENT: u32 = 2;
/// Coupled leapfrog bound `dt sqrt(c^2 k^2 + w_p^2) <= 1` violated.
pub const WARN_LEAPFROG_COUPLED: u32 = 4;
/// Curl-only leapfrog bound `dt c k <= 1` violated.
pub const WARN_LEAPFROG_CURL: u32 = 8;
pub const WARN_ABSORBER: u32 = 16;
pub const WARN_GEOMETRIC: u32 = 32;

/// One row of the diagnostics stream.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord<T> {
    pub time: T,
    pub energy: T,
    pub norm2: T,
    /// `|S^-1 Psi|^2` in induction runs; equal to `norm2` for field runs and
    /// the conserved bilinear `(psi_n, psi_{n-1})_mu` for geometric runs.
    pub mu_norm2: T,
    pub gauss_d: T,
    pub gauss_b: T,
    pub dissipation: T,
    pub warn_flags: u32,
}

impl<T: Real> DiagnosticsRecord<T> {
    pub fn field(s: &FieldState<T>, spectral: &Spectral<T>, medium: &MediumMap<T>, warn_flags: u32) -> Self {
        let grid = spectral.grid();
        let mut d = s.e.clone();
        medium.add_polarization(&s.matter, T::one(), &mut d);
        let (gauss_d, gauss_b) = gauss_residual(spectral, &d, &s.h);
        let norm2 = s.norm2(grid);
        DiagnosticsRecord {
            time: s.time,
            energy: total_energy(s, grid, medium),
            norm2,
            mu_norm2: norm2,
            gauss_d,
            gauss_b,
            dissipation: dissipation_rate(s, grid, medium),
            warn_flags,
        }
    }

    pub fn induction(s: &InductionState<T>, spectral: &Spectral<T>, medium: &MediumMap<T>, warn_flags: u32) -> Self {
        let grid = spectral.grid();
        let f = s.to_field(medium);
        let (gauss_d, gauss_b) = gauss_residual(spectral, &s.d, &s.b);
        DiagnosticsRecord {
            time: s.time,
            energy: total_energy(&f, grid, medium),
            norm2: s.norm2(grid),
            mu_norm2: s.mu_norm2(grid, medium),
            gauss_d,
            gauss_b,
            dissipation: dissipation_rate(&f, grid, medium),
            warn_flags,
        }
    }

    pub fn optics(
        prev: &OpticsState<T>,
        cur: &OpticsState<T>,
        spectral: &Spectral<T>,
        eps_inv: &[T],
        warn_flags: u32,
    ) -> Self {
        let grid = spectral.grid();
        let (gauss_d, gauss_b) = gauss_residual(spectral, &cur.d, &cur.b);
        DiagnosticsRecord {
            time: cur.time,
            energy: optics_bilinear(grid, eps_inv, cur, cur) / T::lit(2.0),
            norm2: cur.norm2(grid),
            mu_norm2: optics_bilinear(grid, eps_inv, prev, cur),
            gauss_d,
            gauss_b,
            dissipation: T::zero(),
            warn_flags,
        }
    }
}

/// `1/2 |Psi^F|^2` without the Drude polarization fields, which carry no energy.
pub fn total_energy<T: Real>(s: &FieldState<T>, grid: &Grid<T>, medium: &MediumMap<T>) -> T {
    let mut sum = s.e.sum_sq() + s.h.sum_sq();
    for (res, p) in medium.resonances().iter().zip(&s.matter) {
        sum = sum + p.even.sum_sq();
        if !res.is_drude() {
            sum = sum + p.odd.sum_sq();
        }
    }
    grid.cell_volume() * sum / T::lit(2.0)
}

/// Energy of an induction state, `1/2 |S^-1 Psi^I|^2` with the same Drude exclusion.
pub fn total_energy_induction<T: Real>(s: &InductionState<T>, grid: &Grid<T>, medium: &MediumMap<T>) -> T {
    total_energy(&s.to_field(medium), grid, medium)
}

/// `dE/dt = -2 sum_a gamma_a |xi^{2a}|^2 - 4 pi sigma |E|^2`, never positive.
pub fn dissipation_rate<T: Real>(s: &FieldState<T>, grid: &Grid<T>, medium: &MediumMap<T>) -> T {
    let mut rate = T::zero();
    for (res, p) in medium.resonances().iter().zip(&s.matter) {
        if res.gamma > T::zero() {
            rate = rate - T::lit(2.0) * res.gamma * p.even.sum_sq();
        }
    }
    let four_pi = T::lit(4.0) * T::PI();
    for (i, &sig) in medium.sigma().iter().enumerate() {
        if sig > T::zero() {
            let e2 = (0..3).map(|a| s.e.comp[a][i] * s.e.comp[a][i]).sum::<T>();
            rate = rate - four_pi * sig * e2;
        }
    }
    grid.cell_volume() * rate
}

/// Relative longitudinal content of one field over nonzero modes,
/// `sqrt(sum |k . F|^2) / sqrt(sum |k|^2 |F|^2)`, zero for a zero field.
pub fn divergence_residual<T: Real>(spectral: &Spectral<T>, v: &VectorField<T>) -> T {
    let s = spectral.forward_vec(v);
    let mut num = T::zero();
    let mut den = T::zero();
    spectral.for_each_mode(|idx, jx, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == T::zero() {
            return;
        }
        let w = spectral.weight(jx);
        let kd = s[0].data[idx] * k[0] + s[1].data[idx] * k[1] + s[2].data[idx] * k[2];
        num = num + w * kd.norm_sqr();
        den = den + w * k2 * (0..3).map(|a| s[a].data[idx].norm_sqr()).sum::<T>();
    });
    if den == T::zero() {
        T::zero()
    } else {
        (num / den).sqrt()
    }
}

/// `(r_D, r_B)`.
pub fn gauss_residual<T: Real>(spectral: &Spectral<T>, d: &VectorField<T>, b: &VectorField<T>) -> (T, T) {
    (divergence_residual(spectral, d), divergence_residual(spectral, b))
}

/// One evaluated bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub ok: bool,
}

impl BoundCheck {
    fn new(name: impl Into<String>, value: f64, limit: f64) -> Self {
        BoundCheck {
            name: name.into(),
            value,
            limit,
            ok: value <= limit,
        }
    }
}

/// Accuracy and stability numbers for a planned run.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub checks: Vec<BoundCheck>,
    pub flags: u32,
}

impl StabilityReport {
    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }
}

/// Inputs of [`stability_report`] beyond grid, medium and `dt`.
#[derive(Clone, Copy, Debug)]
pub struct StabilityInputs<'r, T> {
    pub scheme: Scheme,
    pub representation: Representation,
    /// Largest wavenumber carried by the initial packet; the grid limit when `None`.
    pub k_band: Option<T>,
    pub absorber: Option<&'r AbsorberValidation>,
}

/// Largest relative plasma-frequency jump between neighbors, `|grad w_p| / w_p`.
fn plasma_gradient<T: Real>(grid: &Grid<T>, medium: &MediumMap<T>) -> f64 {
    let mut worst = 0.0f64;
    for res in medium.resonances() {
        for i in 0..grid.len() {
            let [ix, iy, iz] = grid.coords(i);
            for axis in 0..grid.dims() {
                let mut c = [ix, iy, iz];
                c[axis] = (c[axis] + 1) % grid.n()[axis];
                let j = grid.index(c[0], c[1], c[2]);
                let (a, b) = (res.omega_p[i].to_f64_lossy(), res.omega_p[j].to_f64_lossy());
                let top = a.max(b);
                if top > 0.0 {
                    worst = worst.max((a - b).abs() / grid.dr()[axis].to_f64_lossy() / top);
                }
            }
        }
    }
    worst
}

/// Evaluates the split accuracy numbers, the gradient number, the leapfrog
/// bound of the chosen scheme and the absorber window.
pub fn stability_report<T: Real>(
    grid: &Grid<T>,
    medium: &MediumMap<T>,
    dt: T,
    inputs: &StabilityInputs<'_, T>,
) -> StabilityReport {
    let dt = dt.to_f64_lossy();
    let c = grid.c().to_f64_lossy();
    let k = inputs.k_band.unwrap_or_else(|| grid.k_max()).to_f64_lossy();
    let mut checks = Vec::new();
    let mut flags = 0;
    let acc = ACCURACY_THRESHOLD;

    let mut split = vec![BoundCheck::new("omega_max*dt", c * k * dt, acc)];
    for (a, res) in medium.resonances().iter().enumerate() {
        let wp = res
            .omega_p
            .iter()
            .copied()
            .fold(T::zero(), T::max)
            .to_f64_lossy();
        if wp == 0.0 {
            continue;
        }
        split.push(BoundCheck::new(format!("omega_p[{a}]*dt"), wp * dt, acc));
        split.push(BoundCheck::new(format!("omega[{a}]*dt"), res.omega.to_f64_lossy() * dt, acc));
        split.push(BoundCheck::new(format!("gamma[{a}]*dt"), res.gamma.to_f64_lossy() * dt, acc));
    }
    let split_scheme = matches!(inputs.scheme, Scheme::SplitField | Scheme::SplitInduction);
    if split_scheme && split.iter().any(|b| !b.ok) {
        flags |= WARN_SPLIT_ACCURACY;
    }
    checks.extend(split);

    if medium.resonance_count() > 0 && medium.max_plasma_frequency() > T::zero() {
        let g = BoundCheck::new("grad(omega_p)/omega_p*c*dt", plasma_gradient(grid, medium) * c * dt, acc);
        if split_scheme && !g.ok {
            flags |= WARN_GRADIENT;
        }
        checks.push(g);
    }

    match (inputs.scheme, inputs.representation) {
        (Scheme::LeapfrogModified, Representation::Field) => {
            let wp = medium.max_plasma_frequency().to_f64_lossy();
            let b = BoundCheck::new("dt*sqrt(c^2 k^2 + omega_p^2)", dt * (c * c * k * k + wp * wp).sqrt(), 1.0);
            if !b.ok {
                flags |= WARN_LEAPFROG_COUPLED;
            }
            checks.push(b);
        }
        (Scheme::LeapfrogModified, Representation::Induction) => {
            let b = BoundCheck::new("dt*c*k", dt * c * k, 1.0);
            if !b.ok {
                flags |= WARN_LEAPFROG_CURL;
            }
            checks.push(b);
        }
        (Scheme::LeapfrogGeometric, _) => {
            // Fastest local phase speed is c / sqrt(min eps).
            let eps_min = (0..medium.len())
                .filter_map(|i| medium.static_permittivity(i).ok())
                .fold(f64::INFINITY, |m, e| m.min(e.to_f64_lossy()));
            let eps_min = if eps_min.is_finite() { eps_min } else { 1.0 };
            let b = BoundCheck::new("dt*c*k/sqrt(eps_min)", dt * c * k / eps_min.sqrt(), 1.0);
            if !b.ok {
                flags |= WARN_GEOMETRIC;
            }
            checks.push(b);
        }
        _ => {}
    }

    if let Some(v) = inputs.absorber {
        for e in &v.edges {
            checks.push(BoundCheck {
                name: format!("absorber lower bound < sigma_L at omega={}", e.omega),
                value: e.lower,
                limit: e.sigma_l,
                ok: e.transmission_ok,
            });
            checks.push(BoundCheck {
                name: format!("sigma_L < absorber upper bound at omega={}", e.omega),
                value: e.sigma_l,
                limit: e.upper,
                ok: e.reflection_ok,
            });
        }
        if !v.pass() {
            flags |= WARN_ABSORBER;
        }
    }
    StabilityReport { checks, flags }
}

/// Errors against the finest run and the fitted order.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub dts: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log2(error)` against `log2(dt)`; `None` when exact.
    pub slope: Option<f64>,
    pub exact: bool,
}

fn diff_norm<T: Real>(a: &[&[T]], b: &[&[T]]) -> (f64, f64) {
    let mut d = 0.0;
    let mut n = 0.0;
    for (x, y) in a.iter().zip(b) {
        for (&p, &q) in x.iter().zip(y.iter()) {
            let (p, q) = (p.to_f64_lossy(), q.to_f64_lossy());
            d += (p - q) * (p - q);
            n += q * q;
        }
    }
    (d.sqrt(), n.sqrt())
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Runs `scheme` to `t_end` at each step of `dt_list` and at a reference step
/// `reference_divisor` times smaller than the last, and reports relative L2
/// errors of the final states.
pub fn convergence_probe<T: Real>(
    initial: &FieldState<T>,
    spectral: &Spectral<T>,
    medium: &MediumMap<T>,
    scheme: Scheme,
    representation: Representation,
    t_end: T,
    dt_list: &[T],
    reference_divisor: usize,
) -> Result<ConvergenceTable> {
    if dt_list.is_empty() || reference_divisor == 0 {
        return Err(Error::InvalidConfig("convergence probe needs at least one step size".into()));
    }
    let steps_for = |dt: T| -> Result<usize> {
        let n = (t_end / dt).round();
        if n < T::one() || ((n * dt - t_end) / t_end).magnitude() > T::lit(1e-9) {
            return Err(Error::InvalidConfig(format!("step {dt} does not divide the run time {t_end}")));
        }
        Ok(num_traits::ToPrimitive::to_usize(&n).unwrap_or(0))
    };
    let run_to = |dt: T| -> Result<Vec<Vec<T>>> {
        let mut cfg = PropagatorConfig::new(scheme, dt, steps_for(dt)?);
        cfg.representation = representation;
        let mut integ = Integrator::start(&cfg, spectral, medium, initial.clone())?;
        // The leapfrog seed already holds one step.
        let remaining = if scheme.is_leapfrog() { cfg.steps - 1 } else { cfg.steps };
        integ.advance(remaining);
        Ok(integ.view().components().iter().map(|c| c.to_vec()).collect())
    };
    let dt_ref = *dt_list.last().expect("non-empty") / T::from_count(reference_divisor);
    let reference = run_to(dt_ref)?;
    let ref_view: Vec<&[T]> = reference.iter().map(|c| c.as_slice()).collect();
    let mut errors = Vec::with_capacity(dt_list.len());
    for &dt in dt_list {
        let out = run_to(dt)?;
        let view: Vec<&[T]> = out.iter().map(|c| c.as_slice()).collect();
        let (d, n) = diff_norm(&view, &ref_view);
        errors.push(if n > 0.0 { d / n } else { d });
    }
    let dts: Vec<f64> = dt_list.iter().map(|d| d.to_f64_lossy()).collect();
    let exact = errors.iter().all(|&e| e < 1e-12);
    let slope = if exact {
        None
    } else {
        let xs: Vec<f64> = dts.iter().map(|d| d.log2()).collect();
        let ys: Vec<f64> = errors.iter().map(|e| e.max(f64::MIN_POSITIVE).log2()).collect();
        Some(fit_slope(&xs, &ys))
    };
    Ok(ConvergenceTable {
        dts,
        errors,
        slope,
        exact,
    })
}

pub const CSV_HEADER: &str = "time,energy,norm2,mu_norm2,rD,rB,dissipation,warn_flags";

/// Writes the diagnostics stream as CSV.
pub struct CsvWriter<W: Write> {
    out: W,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "{CSV_HEADER}")?;
        Ok(CsvWriter { out })
    }

    pub fn write<T: Real>(&mut self, r: &DiagnosticsRecord<T>) -> std::io::Result<()> {
        let f = |x: T| x.to_f64_lossy();
        writeln!(
            self.out,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            f(r.time),
            f(r.energy),
            f(r.norm2),
            f(r.mu_norm2),
            f(r.gauss_d),
            f(r.gauss_b),
            f(r.dissipation),
            r.warn_flags
        )
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
