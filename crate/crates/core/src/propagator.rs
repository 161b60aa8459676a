//! Time steppers and the run loop.
//!
//! The split schemes advance one state with the symmetric composition
//! `exp(dt A/2) exp(dt B) exp(dt A/2)`, spectral part outside. Between
//! observation instants consecutive half steps are fused into whole steps.
//! The leapfrog schemes carry two states `(prev, cur)` and advance with
//! `next = L(2dt) prev + 2dt L(dt) H0l cur`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::grid::{Grid, VectorField};
use crate::linalg::{pade_exponential, Matrix, PadeOrder};
use crate::medium::{induction_free_apply_kernel, LocalTable, MediumMap};
use crate::scalar::Real;
use crate::spectral::{FreeKernel, Spectral};
use crate::state::{FieldState, InductionState, MatterPair};

/// Time integration scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    SplitField,
    SplitInduction,
    LeapfrogModified,
    LeapfrogGeometric,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::SplitField,
        Scheme::SplitInduction,
        Scheme::LeapfrogModified,
        Scheme::LeapfrogGeometric,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::SplitField => "split-field",
            Scheme::SplitInduction => "split-induction",
            Scheme::LeapfrogModified => "leapfrog-modified",
            Scheme::LeapfrogGeometric => "leapfrog-geometric",
        }
    }

    pub fn is_leapfrog(self) -> bool {
        matches!(self, Scheme::LeapfrogModified | Scheme::LeapfrogGeometric)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown scheme {s:?}, expected one of split-field, split-induction, leapfrog-modified, leapfrog-geometric"
                ))
            })
    }
}

/// State representation used by the modified leapfrog scheme. The split
/// schemes fix their own representation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    Field,
    #[default]
    Induction,
}

impl Representation {
    pub fn as_str(self) -> &'static str {
        match self {
            Representation::Field => "field",
            Representation::Induction => "induction",
        }
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "field" => Ok(Representation::Field),
            "induction" => Ok(Representation::Induction),
            _ => Err(Error::InvalidConfig(format!(
                "unknown representation {s:?}, expected field or induction"
            ))),
        }
    }
}

/// Scheme, step and cadences of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagatorConfig<T> {
    pub scheme: Scheme,
    pub representation: Representation,
    pub dt: T,
    pub steps: usize,
    /// Snapshot cadence in steps; 0 disables periodic snapshots.
    pub snapshot_every: usize,
    /// Diagnostics and probe cadence in steps, at least 1.
    pub probe_every: usize,
    /// Transverse projection of field-representation states every k steps; 0 disables it.
    pub gauss_projection_every: usize,
}

impl<T: Real> PropagatorConfig<T> {
    pub fn new(scheme: Scheme, dt: T, steps: usize) -> Self {
        PropagatorConfig {
            scheme,
            representation: Representation::default(),
            dt,
            steps,
            snapshot_every: 0,
            probe_every: 1,
            gauss_projection_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.probe_every == 0 {
            return Err(Error::InvalidConfig("probe_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Representation the scheme actually evolves.
    pub fn effective_representation(&self) -> Representation {
        match self.scheme {
            Scheme::SplitField => Representation::Field,
            Scheme::SplitInduction | Scheme::LeapfrogGeometric => Representation::Induction,
            Scheme::LeapfrogModified => self.representation,
        }
    }
}

/// `(1 + dt B/2)/(1 - dt B/2)` or the quadratic Pade form; exact orthogonal map for skew `B`.
pub fn pade_exponential_apply<T: Real>(b: &Matrix<T>, dt: T, order: PadeOrder) -> Result<Matrix<T>> {
    pade_exponential(b, dt, order)
}

fn is_vacuum<T: Real>(medium: &MediumMap<T>) -> bool {
    medium.resonance_count() == 0 && medium.max_sigma() == T::zero()
}

fn advance_time<T: Real>(time: &mut T, dt: T, steps: usize) {
    for _ in 0..steps {
        *time = *time + dt;
    }
}

/// Strang splitting in the field representation.
pub struct SplitFieldStepper<'a, T: Real> {
    spectral: &'a Spectral<T>,
    dt: T,
    half: FreeKernel<T>,
    full: FreeKernel<T>,
    local: Option<LocalTable<T>>,
}

impl<'a, T: Real> SplitFieldStepper<'a, T> {
    pub fn new(spectral: &'a Spectral<T>, medium: &'a MediumMap<T>, dt: T) -> Self {
        SplitFieldStepper {
            spectral,
            dt,
            half: spectral.free_kernel(dt / T::lit(2.0)),
            full: spectral.free_kernel(dt),
            local: (!is_vacuum(medium)).then(|| LocalTable::split_field(medium, dt)),
        }
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    fn local(&self, s: &mut FieldState<T>) {
        if let Some(table) = &self.local {
            table.apply(&mut s.e, &mut s.matter);
        }
    }

    pub fn step(&self, s: &mut FieldState<T>) {
        self.advance(s, 1);
    }

    /// `steps` whole steps with interior half steps fused.
    pub fn advance(&self, s: &mut FieldState<T>, steps: usize) {
        if steps == 0 {
            return;
        }
        self.half.apply(self.spectral, &mut s.e, &mut s.h);
        self.local(s);
        for _ in 1..steps {
            self.full.apply(self.spectral, &mut s.e, &mut s.h);
            self.local(s);
        }
        self.half.apply(self.spectral, &mut s.e, &mut s.h);
        advance_time(&mut s.time, self.dt, steps);
    }
}

/// Strang splitting in the induction representation; preserves the
/// divergence of `D` and `B` exactly.
pub struct SplitInductionStepper<'a, T: Real> {
    spectral: &'a Spectral<T>,
    medium: &'a MediumMap<T>,
    dt: T,
    half: FreeKernel<T>,
    full: FreeKernel<T>,
    local: Option<LocalTable<T>>,
}

impl<'a, T: Real> SplitInductionStepper<'a, T> {
    pub fn new(spectral: &'a Spectral<T>, medium: &'a MediumMap<T>, dt: T) -> Self {
        SplitInductionStepper {
            spectral,
            medium,
            dt,
            half: spectral.free_kernel(dt / T::lit(2.0)),
            full: spectral.free_kernel(dt),
            local: (!is_vacuum(medium)).then(|| LocalTable::split_induction(medium, dt)),
        }
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    fn local(&self, s: &mut InductionState<T>) {
        if let Some(table) = &self.local {
            table.apply(&mut s.d, &mut s.matter);
        }
    }

    pub fn step(&self, s: &mut InductionState<T>) {
        self.advance(s, 1);
    }

    pub fn advance(&self, s: &mut InductionState<T>, steps: usize) {
        if steps == 0 {
            return;
        }
        induction_free_apply_kernel(s, self.medium, self.spectral, &self.half);
        self.local(s);
        for _ in 1..steps {
            induction_free_apply_kernel(s, self.medium, self.spectral, &self.full);
            self.local(s);
        }
        induction_free_apply_kernel(s, self.medium, self.spectral, &self.half);
        advance_time(&mut s.time, self.dt, steps);
    }
}

/// `step_split_field` as a one-off call.
pub fn step_split_field<T: Real>(state: &mut FieldState<T>, spectral: &Spectral<T>, medium: &MediumMap<T>, dt: T) {
    SplitFieldStepper::new(spectral, medium, dt).step(state);
}

/// `step_split_induction` as a one-off call.
pub fn step_split_induction<T: Real>(
    state: &mut InductionState<T>,
    spectral: &Spectral<T>,
    medium: &MediumMap<T>,
    dt: T,
) {
    SplitInductionStepper::new(spectral, medium, dt).step(state);
}

fn axpy_matter<T: Real>(target: &mut [MatterPair<T>], s: T, src: &[MatterPair<T>]) {
    for (t, p) in target.iter_mut().zip(src) {
        t.odd.axpy(s, &p.odd);
        t.even.axpy(s, &p.even);
    }
}

/// Leapfrog in the field representation. The modified form moves matter
/// damping and conductivity into `L`; the plain form keeps the whole
/// generator explicit with `L = 1`.
pub struct LeapfrogFieldStepper<'a, T: Real> {
    spectral: &'a Spectral<T>,
    medium: &'a MediumMap<T>,
    dt: T,
    /// `(L(dt), L(2dt))`, absent for the plain scheme or a vacuum medium.
    local: Option<(LocalTable<T>, LocalTable<T>)>,
    plain: bool,
}

impl<'a, T: Real> LeapfrogFieldStepper<'a, T> {
    pub fn modified(spectral: &'a Spectral<T>, medium: &'a MediumMap<T>, dt: T) -> Self {
        let local = (!is_vacuum(medium)).then(|| {
            (
                LocalTable::leapfrog_field(medium, dt),
                LocalTable::leapfrog_field(medium, T::lit(2.0) * dt),
            )
        });
        LeapfrogFieldStepper {
            spectral,
            medium,
            dt,
            local,
            plain: false,
        }
    }

    pub fn plain(spectral: &'a Spectral<T>, medium: &'a MediumMap<T>, dt: T) -> Self {
        LeapfrogFieldStepper {
            spectral,
            medium,
            dt,
            local: None,
            plain: true,
        }
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Explicit part of the generator applied to `s`.
    pub fn rate(&self, s: &FieldState<T>) -> FieldState<T> {
        let c = self.spectral.grid().c();
        let mut e = self.spectral.curl(&s.h, c);
        let h = self.spectral.curl(&s.e, -c);
        let len = s.e.len();
        let res = self.medium.resonances();
        let mut matter: Vec<MatterPair<T>> = (0..res.len()).map(|_| MatterPair::zeros(len)).collect();
        let sigma = self.medium.sigma();
        let four_pi = T::lit(4.0) * T::PI();
        for a in 0..3 {
            for i in 0..len {
                let ei = s.e.comp[a][i];
                let mut acc = e.comp[a][i];
                for ((r, p), out) in res.iter().zip(&s.matter).zip(matter.iter_mut()) {
                    let wp = r.omega_p[i];
                    let x1 = p.odd.comp[a][i];
                    let x2 = p.even.comp[a][i];
                    acc = acc - wp * x2;
                    out.even.comp[a][i] = wp * ei;
                    if self.plain {
                        let (alpha, beta) = r.generator(wp);
                        out.odd.comp[a][i] = alpha * x2;
                        out.even.comp[a][i] =
                            out.even.comp[a][i] - beta * x1 - T::lit(2.0) * r.gamma * x2;
                    }
                }
                if self.plain {
                    acc = acc - four_pi * sigma[i] * ei;
                }
                e.comp[a][i] = acc;
            }
        }
        FieldState {
            e,
            h,
            matter,
            time: s.time,
        }
    }

    /// Advances `(prev, cur)` to `(cur, next)`.
    pub fn step(&self, prev: &mut FieldState<T>, cur: &mut FieldState<T>) {
        let mut r = self.rate(cur);
        if let Some((l1, l2)) = &self.local {
            l1.apply(&mut r.e, &mut r.matter);
            l2.apply(&mut prev.e, &mut prev.matter);
        }
        let two_dt = T::lit(2.0) * self.dt;
        prev.e.axpy(two_dt, &r.e);
        prev.h.axpy(two_dt, &r.h);
        axpy_matter(&mut prev.matter, two_dt, &r.matter);
        prev.time = cur.time + self.dt;
        std::mem::swap(prev, cur);
    }
}

/// Modified leapfrog in the induction representation: the curl part is
/// explicit, all local dynamics live in `L`. Stable for `dt c k_max <= 1`.
pub struct LeapfrogInductionStepper<'a, T: Real> {
    spectral: &'a Spectral<T>,
    medium: &'a MediumMap<T>,
    dt: T,
    local: Option<(LocalTable<T>, LocalTable<T>)>,
}

impl<'a, T: Real> LeapfrogInductionStepper<'a, T> {
    pub fn new(spectral: &'a Spectral<T>, medium: &'a MediumMap<T>, dt: T) -> Self {
        let local = (!is_vacuum(medium)).then(|| {
            (
                LocalTable::leapfrog_induction(medium, dt),
                LocalTable::leapfrog_induction(medium, T::lit(2.0) * dt),
            )
        });
        LeapfrogInductionStepper {
            spectral,
            medium,
            dt,
            local,
        }
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// `(c curl B, -c curl(D - P), 0)`.
    pub fn rate(&self, s: &InductionState<T>) -> InductionState<T> {
        let c = self.spectral.grid().c();
        let d = self.spectral.curl(&s.b, c);
        let mut e = s.d.clone();
        self.medium.add_polarization(&s.matter, -T::one(), &mut e);
        let b = self.spectral.curl(&e, -c);
        InductionState {
            d,
            b,
            matter: (0..s.matter.len()).map(|_| MatterPair::zeros(s.d.len())).collect(),
            time: s.time,
        }
    }

    pub fn step(&self, prev: &mut InductionState<T>, cur: &mut InductionState<T>) {
        let mut r = self.rate(cur);
        if let Some((l1, l2)) = &self.local {
            l1.apply(&mut r.d, &mut r.matter);
            l2.apply(&mut prev.d, &mut prev.matter);
        }
        let two_dt = T::lit(2.0) * self.dt;
        prev.d.axpy(two_dt, &r.d);
        prev.b.axpy(two_dt, &r.b);
        axpy_matter(&mut prev.matter, two_dt, &r.matter);
        prev.time = cur.time + self.dt;
        std::mem::swap(prev, cur);
    }
}

/// `(D, B)` without matter, evolved in a frozen permittivity map.
#[derive(Clone, Debug, PartialEq)]
pub struct OpticsState<T> {
    pub d: VectorField<T>,
    pub b: VectorField<T>,
    pub time: T,
}

impl<T: Real> OpticsState<T> {
    pub fn new(d: VectorField<T>, b: VectorField<T>) -> Self {
        OpticsState {
            d,
            b,
            time: T::zero(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.d.is_finite() && self.b.is_finite()
    }

    pub fn components(&self) -> Vec<&[T]> {
        self.d
            .comp
            .iter()
            .chain(self.b.comp.iter())
            .map(|c| c.as_slice())
            .collect()
    }

    pub fn from_components(comps: Vec<Vec<T>>, time: T) -> Result<Self> {
        if comps.len() != 6 {
            return Err(Error::Snapshot(format!(
                "optics state needs 6 components, found {}",
                comps.len()
            )));
        }
        let mut it = comps.into_iter();
        let mut take3 = || VectorField {
            comp: [
                it.next().expect("count checked"),
                it.next().expect("count checked"),
                it.next().expect("count checked"),
            ],
        };
        let d = take3();
        let b = take3();
        Ok(OpticsState { d, b, time })
    }

    /// Plain `|D|^2 + |B|^2`, volume weighted.
    pub fn norm2(&self, grid: &Grid<T>) -> T {
        grid.cell_volume() * (self.d.sum_sq() + self.b.sum_sq())
    }
}

/// `(x, y)_mu = dV sum (D_x . D_y / eps + B_x . B_y)`.
pub fn optics_bilinear<T: Real>(grid: &Grid<T>, eps_inv: &[T], x: &OpticsState<T>, y: &OpticsState<T>) -> T {
    let mut s = T::zero();
    for a in 0..3 {
        for (i, &w) in eps_inv.iter().enumerate() {
            s = s + x.d.comp[a][i] * y.d.comp[a][i] * w + x.b.comp[a][i] * y.b.comp[a][i];
        }
    }
    grid.cell_volume() * s
}

/// Leapfrog for `dD/dt = c curl B`, `dB/dt = -c curl(D / eps)`.
pub struct GeometricStepper<'a, T: Real> {
    spectral: &'a Spectral<T>,
    eps_inv: Vec<T>,
    dt: T,
}

impl<'a, T: Real> GeometricStepper<'a, T> {
    pub fn new(spectral: &'a Spectral<T>, epsilon: &[T], dt: T) -> Result<Self> {
        let len = spectral.grid().len();
        if epsilon.len() != len {
            return Err(Error::ShapeMismatch {
                expected: len,
                found: epsilon.len(),
            });
        }
        if let Some(bad) = epsilon.iter().find(|e| !(**e > T::zero()) || !e.is_finite()) {
            return Err(Error::InvalidMedium(format!("permittivity must be positive, found {bad}")));
        }
        Ok(GeometricStepper {
            spectral,
            eps_inv: epsilon.iter().map(|&e| T::one() / e).collect(),
            dt,
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn eps_inv(&self) -> &[T] {
        &self.eps_inv
    }

    pub fn rate(&self, s: &OpticsState<T>) -> OpticsState<T> {
        let c = self.spectral.grid().c();
        let mut e = s.d.clone();
        for comp in &mut e.comp {
            for (x, &w) in comp.iter_mut().zip(&self.eps_inv) {
                *x = *x * w;
            }
        }
        OpticsState {
            d: self.spectral.curl(&s.b, c),
            b: self.spectral.curl(&e, -c),
            time: s.time,
        }
    }

    /// Second-order Taylor step from `initial`, used as the first leapfrog state.
    pub fn seed(&self, initial: &OpticsState<T>) -> OpticsState<T> {
        let h1 = self.rate(initial);
        let h2 = self.rate(&h1);
        let mut out = initial.clone();
        let half_dt2 = self.dt * self.dt / T::lit(2.0);
        out.d.axpy(self.dt, &h1.d);
        out.b.axpy(self.dt, &h1.b);
        out.d.axpy(half_dt2, &h2.d);
        out.b.axpy(half_dt2, &h2.b);
        out.time = initial.time + self.dt;
        out
    }

    pub fn step(&self, prev: &mut OpticsState<T>, cur: &mut OpticsState<T>) {
        let r = self.rate(cur);
        let two_dt = T::lit(2.0) * self.dt;
        prev.d.axpy(two_dt, &r.d);
        prev.b.axpy(two_dt, &r.b);
        prev.time = cur.time + self.dt;
        std::mem::swap(prev, cur);
    }
}

/// `D = P_perp D`, with `E` shifted by the removed longitudinal part and `H` projected.
pub fn project_gauss_field<T: Real>(state: &mut FieldState<T>, spectral: &Spectral<T>, medium: &MediumMap<T>) {
    let mut d = state.e.clone();
    medium.add_polarization(&state.matter, T::one(), &mut d);
    let long = spectral.project_longitudinal(&d);
    state.e.axpy(-T::one(), &long);
    state.h = spectral.project_transverse(&state.h);
}

/// Read-only view of the current state for diagnostics and sinks.
#[derive(Clone, Copy, Debug)]
pub enum StateView<'s, T> {
    Field(&'s FieldState<T>),
    Induction(&'s InductionState<T>),
    Optics(&'s OpticsState<T>),
}

impl<'s, T: Real> StateView<'s, T> {
    pub fn time(&self) -> T {
        match self {
            StateView::Field(s) => s.time,
            StateView::Induction(s) => s.time,
            StateView::Optics(s) => s.time,
        }
    }

    pub fn components(&self) -> Vec<&'s [T]> {
        match *self {
            StateView::Field(s) => s.components(),
            StateView::Induction(s) => s.components(),
            StateView::Optics(s) => s.components(),
        }
    }

    /// Electric field (or `D / eps` for optics states) at point `i`.
    pub fn electric_at(&self, medium: &MediumMap<T>, eps_inv: Option<&[T]>, a: usize, i: usize) -> T {
        match self {
            StateView::Field(s) => s.e.comp[a][i],
            StateView::Induction(s) => s.d.comp[a][i] - medium.polarization_at(&s.matter, a, i),
            StateView::Optics(s) => s.d.comp[a][i] * eps_inv.map_or(T::one(), |w| w[i]),
        }
    }

    /// Magnetic field at point `i`.
    pub fn magnetic_at(&self, a: usize, i: usize) -> T {
        match self {
            StateView::Field(s) => s.h.comp[a][i],
            StateView::Induction(s) => s.b.comp[a][i],
            StateView::Optics(s) => s.b.comp[a][i],
        }
    }
}

/// A stepper together with the state(s) it advances.
pub enum Integrator<'a, T: Real> {
    SplitField {
        stepper: SplitFieldStepper<'a, T>,
        state: FieldState<T>,
    },
    SplitInduction {
        stepper: SplitInductionStepper<'a, T>,
        state: InductionState<T>,
    },
    LeapfrogField {
        stepper: LeapfrogFieldStepper<'a, T>,
        prev: FieldState<T>,
        cur: FieldState<T>,
    },
    LeapfrogInduction {
        stepper: LeapfrogInductionStepper<'a, T>,
        prev: InductionState<T>,
        cur: InductionState<T>,
    },
    Geometric {
        stepper: GeometricStepper<'a, T>,
        prev: OpticsState<T>,
        cur: OpticsState<T>,
    },
}

/// Static permittivity per point, the frozen map of the geometric scheme.
pub fn static_permittivity_map<T: Real>(medium: &MediumMap<T>) -> Result<Vec<T>> {
    (0..medium.len()).map(|i| medium.static_permittivity(i)).collect()
}

impl<'a, T: Real> Integrator<'a, T> {
    /// Starts `cfg.scheme` from a field-representation initial state. Leapfrog
    /// schemes are seeded with one split step (geometric: a Taylor step).
    pub fn start(
        cfg: &PropagatorConfig<T>,
        spectral: &'a Spectral<T>,
        medium: &'a MediumMap<T>,
        initial: FieldState<T>,
    ) -> Result<Self> {
        cfg.validate()?;
        let dt = cfg.dt;
        Ok(match (cfg.scheme, cfg.effective_representation()) {
            (Scheme::SplitField, _) => Integrator::SplitField {
                stepper: SplitFieldStepper::new(spectral, medium, dt),
                state: initial,
            },
            (Scheme::SplitInduction, _) => Integrator::SplitInduction {
                stepper: SplitInductionStepper::new(spectral, medium, dt),
                state: initial.to_induction(medium),
            },
            (Scheme::LeapfrogModified, Representation::Field) => {
                let mut cur = initial.clone();
                SplitFieldStepper::new(spectral, medium, dt).step(&mut cur);
                Integrator::LeapfrogField {
                    stepper: LeapfrogFieldStepper::modified(spectral, medium, dt),
                    prev: initial,
                    cur,
                }
            }
            (Scheme::LeapfrogModified, Representation::Induction) => {
                let prev = initial.to_induction(medium);
                let mut cur = prev.clone();
                SplitInductionStepper::new(spectral, medium, dt).step(&mut cur);
                Integrator::LeapfrogInduction {
                    stepper: LeapfrogInductionStepper::new(spectral, medium, dt),
                    prev,
                    cur,
                }
            }
            (Scheme::LeapfrogGeometric, _) => {
                let eps = static_permittivity_map(medium)?;
                let stepper = GeometricStepper::new(spectral, &eps, dt)?;
                let mut d = initial.e.clone();
                for comp in &mut d.comp {
                    for (x, &e) in comp.iter_mut().zip(&eps) {
                        *x = *x * e;
                    }
                }
                let prev = OpticsState {
                    d,
                    b: initial.h,
                    time: initial.time,
                };
                let cur = stepper.seed(&prev);
                Integrator::Geometric { stepper, prev, cur }
            }
        })
    }

    /// Rebuilds an integrator from [`Self::checkpoint_components`].
    pub fn resume(
        cfg: &PropagatorConfig<T>,
        spectral: &'a Spectral<T>,
        medium: &'a MediumMap<T>,
        components: Vec<Vec<T>>,
        time: T,
    ) -> Result<Self> {
        cfg.validate()?;
        let dt = cfg.dt;
        let expected = match cfg.scheme {
            Scheme::LeapfrogGeometric => 12,
            Scheme::LeapfrogModified => 2 * (6 + 6 * medium.resonance_count()),
            _ => 6 + 6 * medium.resonance_count(),
        };
        if components.len() != expected {
            return Err(Error::Snapshot(format!(
                "checkpoint has {} components, scheme {} needs {expected}",
                components.len(),
                cfg.scheme
            )));
        }
        if components.iter().any(|c| c.len() != spectral.grid().len()) {
            return Err(Error::Snapshot("checkpoint grid does not match the configured grid".into()));
        }
        let halves = |mut comps: Vec<Vec<T>>| {
            let second = comps.split_off(comps.len() / 2);
            (comps, second)
        };
        Ok(match (cfg.scheme, cfg.effective_representation()) {
            (Scheme::SplitField, _) => Integrator::SplitField {
                stepper: SplitFieldStepper::new(spectral, medium, dt),
                state: FieldState::from_components(components, time)?,
            },
            (Scheme::SplitInduction, _) => Integrator::SplitInduction {
                stepper: SplitInductionStepper::new(spectral, medium, dt),
                state: InductionState::from_components(components, time)?,
            },
            (Scheme::LeapfrogModified, Representation::Field) => {
                let (p, c) = halves(components);
                Integrator::LeapfrogField {
                    stepper: LeapfrogFieldStepper::modified(spectral, medium, dt),
                    prev: FieldState::from_components(p, time - dt)?,
                    cur: FieldState::from_components(c, time)?,
                }
            }
            (Scheme::LeapfrogModified, Representation::Induction) => {
                let (p, c) = halves(components);
                Integrator::LeapfrogInduction {
                    stepper: LeapfrogInductionStepper::new(spectral, medium, dt),
                    prev: InductionState::from_components(p, time - dt)?,
                    cur: InductionState::from_components(c, time)?,
                }
            }
            (Scheme::LeapfrogGeometric, _) => {
                let eps = static_permittivity_map(medium)?;
                let (p, c) = halves(components);
                Integrator::Geometric {
                    stepper: GeometricStepper::new(spectral, &eps, dt)?,
                    prev: OpticsState::from_components(p, time - dt)?,
                    cur: OpticsState::from_components(c, time)?,
                }
            }
        })
    }

    pub fn view(&self) -> StateView<'_, T> {
        match self {
            Integrator::SplitField { state, .. } => StateView::Field(state),
            Integrator::SplitInduction { state, .. } => StateView::Induction(state),
            Integrator::LeapfrogField { cur, .. } => StateView::Field(cur),
            Integrator::LeapfrogInduction { cur, .. } => StateView::Induction(cur),
            Integrator::Geometric { cur, .. } => StateView::Optics(cur),
        }
    }

    /// Previous leapfrog state, if any.
    pub fn previous(&self) -> Option<StateView<'_, T>> {
        match self {
            Integrator::LeapfrogField { prev, .. } => Some(StateView::Field(prev)),
            Integrator::LeapfrogInduction { prev, .. } => Some(StateView::Induction(prev)),
            Integrator::Geometric { prev, .. } => Some(StateView::Optics(prev)),
            _ => None,
        }
    }

    /// Everything needed to restart bit-exactly: the state, preceded by the
    /// previous state for two-step schemes.
    pub fn checkpoint_components(&self) -> Vec<&[T]> {
        let mut out = self.previous().map(|p| p.components()).unwrap_or_default();
        out.extend(self.view().components());
        out
    }

    pub fn time(&self) -> T {
        self.view().time()
    }

    pub fn dt(&self) -> T {
        match self {
            Integrator::SplitField { stepper, .. } => stepper.dt(),
            Integrator::SplitInduction { stepper, .. } => stepper.dt(),
            Integrator::LeapfrogField { stepper, .. } => stepper.dt(),
            Integrator::LeapfrogInduction { stepper, .. } => stepper.dt(),
            Integrator::Geometric { stepper, .. } => stepper.dt(),
        }
    }

    /// Inverse permittivity of the geometric scheme.
    pub fn eps_inv(&self) -> Option<&[T]> {
        match self {
            Integrator::Geometric { stepper, .. } => Some(stepper.eps_inv()),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        let finite = |v: StateView<'_, T>| v.components().iter().all(|c| c.iter().all(|x| x.is_finite()));
        finite(self.view()) && self.previous().map_or(true, finite)
    }

    pub fn advance(&mut self, steps: usize) {
        match self {
            Integrator::SplitField { stepper, state } => stepper.advance(state, steps),
            Integrator::SplitInduction { stepper, state } => stepper.advance(state, steps),
            Integrator::LeapfrogField { stepper, prev, cur } => {
                for _ in 0..steps {
                    stepper.step(prev, cur);
                }
            }
            Integrator::LeapfrogInduction { stepper, prev, cur } => {
                for _ in 0..steps {
                    stepper.step(prev, cur);
                }
            }
            Integrator::Geometric { stepper, prev, cur } => {
                for _ in 0..steps {
                    stepper.step(prev, cur);
                }
            }
        }
    }

    /// Removes the longitudinal part of `D` and `B` for field-representation
    /// states; a no-op elsewhere.
    pub fn project_gauss(&mut self, spectral: &Spectral<T>, medium: &MediumMap<T>) {
        match self {
            Integrator::SplitField { state, .. } => project_gauss_field(state, spectral, medium),
            Integrator::LeapfrogField { prev, cur, .. } => {
                project_gauss_field(prev, spectral, medium);
                project_gauss_field(cur, spectral, medium);
            }
            _ => {}
        }
    }

    /// Diagnostics of the current state.
    pub fn record(&self, spectral: &Spectral<T>, medium: &MediumMap<T>, warn_flags: u32) -> DiagnosticsRecord<T> {
        match self {
            Integrator::SplitField { state, .. } | Integrator::LeapfrogField { cur: state, .. } => {
                DiagnosticsRecord::field(state, spectral, medium, warn_flags)
            }
            Integrator::SplitInduction { state, .. } | Integrator::LeapfrogInduction { cur: state, .. } => {
                DiagnosticsRecord::induction(state, spectral, medium, warn_flags)
            }
            Integrator::Geometric { stepper, prev, cur } => {
                DiagnosticsRecord::optics(prev, cur, spectral, stepper.eps_inv(), warn_flags)
            }
        }
    }
}

/// Receives the outputs of [`run`].
pub trait RunSink<T: Real> {
    /// Called at every probe instant with the diagnostics of the state.
    fn record(&mut self, step: usize, record: &DiagnosticsRecord<T>, state: StateView<'_, T>) -> Result<()>;

    /// Called at step 0 and at every snapshot instant.
    fn snapshot(&mut self, _step: usize, _integrator: &Integrator<'_, T>) -> Result<()> {
        Ok(())
    }

    /// Called once when the state turns non-finite, with the last finite
    /// checkpoint components and their step and time.
    fn failure(&mut self, _step: usize, _time: T, _components: &[Vec<T>]) -> Result<()> {
        Ok(())
    }
}

/// Collects records in memory.
#[derive(Clone, Debug, Default)]
pub struct RecordingSink<T> {
    pub records: Vec<(usize, DiagnosticsRecord<T>)>,
}

impl<T: Real> RunSink<T> for RecordingSink<T> {
    fn record(&mut self, step: usize, record: &DiagnosticsRecord<T>, _state: StateView<'_, T>) -> Result<()> {
        self.records.push((step, record.clone()));
        Ok(())
    }
}

/// Step range and cadences of one call to [`run`]. Event instants are
/// multiples of the cadences in absolute step numbers, so a run split at an
/// event instant reproduces the unsplit run bit for bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunPlan {
    pub start_step: usize,
    pub steps: usize,
    pub probe_every: usize,
    pub snapshot_every: usize,
    pub gauss_projection_every: usize,
    pub warn_flags: u32,
}

impl RunPlan {
    pub fn from_config<T: Real>(cfg: &PropagatorConfig<T>, warn_flags: u32) -> Self {
        RunPlan {
            start_step: 0,
            steps: cfg.steps,
            probe_every: cfg.probe_every.max(1),
            snapshot_every: cfg.snapshot_every,
            gauss_projection_every: cfg.gauss_projection_every,
            warn_flags,
        }
    }

    fn hits(every: usize, step: usize) -> bool {
        every > 0 && step % every == 0
    }

    fn next_multiple(every: usize, step: usize) -> usize {
        if every == 0 {
            usize::MAX
        } else {
            (step / every + 1) * every
        }
    }
}

/// Advances `integrator` through `plan`, emitting diagnostics and snapshots.
/// Aborts with [`Error::NonFinite`] as soon as a non-finite value appears.
pub fn run<T: Real, S: RunSink<T> + ?Sized>(
    integrator: &mut Integrator<'_, T>,
    spectral: &Spectral<T>,
    medium: &MediumMap<T>,
    plan: &RunPlan,
    sink: &mut S,
) -> Result<()> {
    let probe_every = plan.probe_every.max(1);
    let end = plan.start_step + plan.steps;
    let mut step = plan.start_step;
    let emit = |step: usize, integ: &Integrator<'_, T>, sink: &mut S, first: bool| -> Result<()> {
        if first || step == end || RunPlan::hits(probe_every, step) {
            let rec = integ.record(spectral, medium, plan.warn_flags);
            sink.record(step, &rec, integ.view())?;
        }
        if (first && step == 0) || (!first && RunPlan::hits(plan.snapshot_every, step)) {
            sink.snapshot(step, integ)?;
        }
        Ok(())
    };
    if !integrator.is_finite() {
        return Err(Error::NonFinite {
            step,
            time: integrator.time().to_f64_lossy(),
        });
    }
    emit(step, integrator, sink, true)?;
    let mut last_good: (usize, T, Vec<Vec<T>>) = (
        step,
        integrator.time(),
        integrator.checkpoint_components().iter().map(|c| c.to_vec()).collect(),
    );
    while step < end {
        let next = end
            .min(RunPlan::next_multiple(probe_every, step))
            .min(RunPlan::next_multiple(plan.snapshot_every, step))
            .min(RunPlan::next_multiple(plan.gauss_projection_every, step));
        integrator.advance(next - step);
        step = next;
        if RunPlan::hits(plan.gauss_projection_every, step) {
            integrator.project_gauss(spectral, medium);
        }
        if !integrator.is_finite() {
            sink.failure(last_good.0, last_good.1, &last_good.2)?;
            return Err(Error::NonFinite {
                step,
                time: integrator.time().to_f64_lossy(),
            });
        }
        emit(step, integrator, sink, false)?;
        last_good.0 = step;
        last_good.1 = integrator.time();
        for (dst, src) in last_good.2.iter_mut().zip(integrator.checkpoint_components()) {
            dst.copy_from_slice(src);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::LorentzResonance;

    fn grid() -> Grid<f64> {
        Grid::new(&[32], &[0.25]).unwrap()
    }

    fn wave(g: &Grid<f64>) -> (VectorField<f64>, VectorField<f64>) {
        let k = std::f64::consts::TAU / g.extent(0) * 3.0;
        let e = VectorField::from_fn(g, |r| [0.0, (k * r[0]).cos(), 0.3 * (2.0 * k * r[0]).sin()]);
        let h = VectorField::from_fn(g, |r| [0.0, 0.0, (k * r[0]).cos()]);
        (e, h)
    }

    fn slab(g: &Grid<f64>, gamma: f64) -> MediumMap<f64> {
        let wp: Vec<f64> = (0..g.len()).map(|i| if (8..20).contains(&i) { 1.5 } else { 0.0 }).collect();
        let res = LorentzResonance::new(2.0, gamma, wp).unwrap();
        MediumMap::new(g, vec![res], None).unwrap()
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
        }
        assert!("euler".parse::<Scheme>().is_err());
        assert!("x".parse::<Representation>().is_err());
    }

    #[test]
    fn fused_advance_matches_single_steps() {
        let g = grid();
        let sp = Spectral::new(&g);
        let m = slab(&g, 0.1);
        let (e, h) = wave(&g);
        let init = FieldState::new(&g, &m, e, h).unwrap();
        let st = SplitFieldStepper::new(&sp, &m, 0.05);
        let mut a = init.clone();
        st.advance(&mut a, 7);
        let mut b = init;
        for _ in 0..7 {
            st.step(&mut b);
        }
        assert!(a.max_abs_diff(&b) < 1e-13);
        assert!((a.time - 0.35).abs() < 1e-15);
    }

    #[test]
    fn split_is_time_symmetric() {
        let g = grid();
        let sp = Spectral::new(&g);
        let m = slab(&g, 0.2);
        let (e, h) = wave(&g);
        let init = FieldState::new(&g, &m, e, h).unwrap();
        let mut s = init.clone();
        SplitFieldStepper::new(&sp, &m, 0.1).advance(&mut s, 3);
        SplitFieldStepper::new(&sp, &m, -0.1).advance(&mut s, 3);
        assert!(s.max_abs_diff(&init) < 1e-11);
        let mut i = init.to_induction(&m);
        let i0 = i.clone();
        SplitInductionStepper::new(&sp, &m, 0.1).advance(&mut i, 3);
        SplitInductionStepper::new(&sp, &m, -0.1).advance(&mut i, 3);
        assert!(i.max_abs_diff(&i0) < 1e-11);
    }

    #[test]
    fn pade_utility_matches_linalg() {
        let b = Matrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let p = pade_exponential_apply(&b, 0.3, PadeOrder::First).unwrap();
        let g = p.transpose().mul(&p);
        assert!(g.sub(&Matrix::identity(2)).max_abs() < 1e-14);
    }

    #[test]
    fn zero_steps_give_one_record() {
        let g = grid();
        let sp = Spectral::new(&g);
        let m = MediumMap::vacuum(&g);
        let (e, h) = wave(&g);
        let init = FieldState::new(&g, &m, e, h).unwrap();
        let cfg = PropagatorConfig::new(Scheme::SplitInduction, 0.1, 0);
        let mut integ = Integrator::start(&cfg, &sp, &m, init.clone()).unwrap();
        let mut sink = RecordingSink::default();
        run(&mut integ, &sp, &m, &RunPlan::from_config(&cfg, 0), &mut sink).unwrap();
        assert_eq!(sink.records.len(), 1);
        assert_eq!(integ.view().components(), init.to_induction(&m).components());
    }

    #[test]
    fn non_finite_state_aborts() {
        let g = grid();
        let sp = Spectral::new(&g);
        let m = slab(&g, 0.0);
        let (e, h) = wave(&g);
        let init = FieldState::new(&g, &m, e, h).unwrap();
        // Plain leapfrog far beyond its stability bound blows up.
        let mut integ = Integrator::LeapfrogField {
            stepper: LeapfrogFieldStepper::plain(&sp, &m, 5.0),
            prev: init.clone(),
            cur: init,
        };
        let plan = RunPlan {
            start_step: 0,
            steps: 5000,
            probe_every: 100,
            snapshot_every: 0,
            gauss_projection_every: 0,
            warn_flags: 0,
        };
        let mut sink = RecordingSink::default();
        let err = run(&mut integ, &sp, &m, &plan, &mut sink).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn gauss_projection_removes_longitudinal_content() {
        let g = grid();
        let sp = Spectral::new(&g);
        let m = slab(&g, 0.0);
        let k = std::f64::consts::TAU / g.extent(0);
        let e = VectorField::from_fn(&g, |r| [(k * r[0]).sin(), 0.0, 0.0]);
        let mut s = FieldState::new(&g, &m, e, VectorField::zeros(g.len())).unwrap();
        s.matter[0].odd.comp[0][10] = 0.4;
        project_gauss_field(&mut s, &sp, &m);
        let mut d = s.e.clone();
        m.add_polarization(&s.matter, 1.0, &mut d);
        assert!(sp.divergence(&d).iter().all(|x| x.abs() < 1e-12));
    }
}
