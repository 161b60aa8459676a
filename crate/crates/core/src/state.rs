//! State vectors in the field `(E, H, xi)` and induction `(D, B, xi)`
//! representations and the transforms between them.
//!
//! Every scalar lattice is stored contiguously (structure of arrays). Matter
//! fields come in pairs per resonance: `odd` is `xi^{2a-1}` (polarization-like)
//! and `even` is `xi^{2a}` (current-like).

use crate::error::{Error, Result};
use crate::grid::{Grid, VectorField};
use crate::medium::MediumMap;
use crate::scalar::Real;

/// Auxiliary fields of one resonance.
#[derive(Clone, Debug, PartialEq)]
pub struct MatterPair<T> {
    pub odd: VectorField<T>,
    pub even: VectorField<T>,
}

impl<T: Real> MatterPair<T> {
    pub fn zeros(len: usize) -> Self {
        MatterPair {
            odd: VectorField::zeros(len),
            even: VectorField::zeros(len),
        }
    }
}

/// `Psi^F = (E, H, xi^1 .. xi^2N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState<T> {
    pub e: VectorField<T>,
    pub h: VectorField<T>,
    pub matter: Vec<MatterPair<T>>,
    pub time: T,
}

/// `Psi^I = (D, B, xi^1 .. xi^2N)` with `D = E + R xi`, `B = H`.
#[derive(Clone, Debug, PartialEq)]
pub struct InductionState<T> {
    pub d: VectorField<T>,
    pub b: VectorField<T>,
    pub matter: Vec<MatterPair<T>>,
    pub time: T,
}

fn check_fields<T: Real>(grid: &Grid<T>, a: &VectorField<T>, b: &VectorField<T>) -> Result<()> {
    a.check_len(grid.len())?;
    b.check_len(grid.len())?;
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidPulse("initial fields contain non-finite values".into()));
    }
    Ok(())
}

fn sum_sq_all<T: Real>(a: &VectorField<T>, b: &VectorField<T>, matter: &[MatterPair<T>]) -> T {
    a.sum_sq()
        + b.sum_sq()
        + matter
            .iter()
            .map(|p| p.odd.sum_sq() + p.even.sum_sq())
            .sum::<T>()
}

impl<T: Real> FieldState<T> {
    /// State at `t = 0` with the given electromagnetic fields and matter at rest.
    pub fn new(grid: &Grid<T>, medium: &MediumMap<T>, e: VectorField<T>, h: VectorField<T>) -> Result<Self> {
        check_fields(grid, &e, &h)?;
        Ok(FieldState {
            e,
            h,
            matter: (0..medium.resonance_count())
                .map(|_| MatterPair::zeros(grid.len()))
                .collect(),
            time: T::zero(),
        })
    }

    pub fn zeros(len: usize, resonances: usize) -> Self {
        FieldState {
            e: VectorField::zeros(len),
            h: VectorField::zeros(len),
            matter: (0..resonances).map(|_| MatterPair::zeros(len)).collect(),
            time: T::zero(),
        }
    }

    /// Volume-weighted squared Euclidean norm of all components.
    pub fn norm2(&self, grid: &Grid<T>) -> T {
        grid.cell_volume() * sum_sq_all(&self.e, &self.h, &self.matter)
    }

    pub fn is_finite(&self) -> bool {
        self.e.is_finite()
            && self.h.is_finite()
            && self.matter.iter().all(|p| p.odd.is_finite() && p.even.is_finite())
    }

    /// `S`: `D = E + R xi`, `B = H`, matter unchanged.
    pub fn to_induction(&self, medium: &MediumMap<T>) -> InductionState<T> {
        let mut d = self.e.clone();
        medium.add_polarization(&self.matter, T::one(), &mut d);
        InductionState {
            d,
            b: self.h.clone(),
            matter: self.matter.clone(),
            time: self.time,
        }
    }

    /// Component lattices in snapshot order: E, H, then xi^1 .. xi^2N.
    pub fn components(&self) -> Vec<&[T]> {
        collect_components(&self.e, &self.h, &self.matter)
    }

    pub fn from_components(comps: Vec<Vec<T>>, time: T) -> Result<Self> {
        let (e, h, matter) = split_components(comps)?;
        Ok(FieldState { e, h, matter, time })
    }

    /// Largest absolute difference over all components.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        max_abs_diff(&self.components(), &other.components())
    }
}

impl<T: Real> InductionState<T> {
    pub fn zeros(len: usize, resonances: usize) -> Self {
        InductionState {
            d: VectorField::zeros(len),
            b: VectorField::zeros(len),
            matter: (0..resonances).map(|_| MatterPair::zeros(len)).collect(),
            time: T::zero(),
        }
    }

    /// State at `t = 0` with the given inductions and matter at rest.
    pub fn new(grid: &Grid<T>, medium: &MediumMap<T>, d: VectorField<T>, b: VectorField<T>) -> Result<Self> {
        check_fields(grid, &d, &b)?;
        Ok(InductionState {
            d,
            b,
            matter: (0..medium.resonance_count())
                .map(|_| MatterPair::zeros(grid.len()))
                .collect(),
            time: T::zero(),
        })
    }

    /// Plain Euclidean norm of `(D, B, xi)`; see [`Self::mu_norm2`] for the energy norm.
    pub fn norm2(&self, grid: &Grid<T>) -> T {
        grid.cell_volume() * sum_sq_all(&self.d, &self.b, &self.matter)
    }

    /// `|S^-1 Psi|^2`, twice the energy in the induction representation.
    pub fn mu_norm2(&self, grid: &Grid<T>, medium: &MediumMap<T>) -> T {
        let mut e_sq = T::zero();
        for a in 0..3 {
            for i in 0..grid.len() {
                let e = self.d.comp[a][i] - medium.polarization_at(&self.matter, a, i);
                e_sq = e_sq + e * e;
            }
        }
        let rest = self.b.sum_sq()
            + self
                .matter
                .iter()
                .map(|p| p.odd.sum_sq() + p.even.sum_sq())
                .sum::<T>();
        grid.cell_volume() * (e_sq + rest)
    }

    pub fn is_finite(&self) -> bool {
        self.d.is_finite()
            && self.b.is_finite()
            && self.matter.iter().all(|p| p.odd.is_finite() && p.even.is_finite())
    }

    /// `S^-1`: `E = D - R xi`, `H = B`.
    pub fn to_field(&self, medium: &MediumMap<T>) -> FieldState<T> {
        let mut e = self.d.clone();
        medium.add_polarization(&self.matter, -T::one(), &mut e);
        FieldState {
            e,
            h: self.b.clone(),
            matter: self.matter.clone(),
            time: self.time,
        }
    }

    /// Component lattices in snapshot order: D, B, then xi^1 .. xi^2N.
    pub fn components(&self) -> Vec<&[T]> {
        collect_components(&self.d, &self.b, &self.matter)
    }

    pub fn from_components(comps: Vec<Vec<T>>, time: T) -> Result<Self> {
        let (d, b, matter) = split_components(comps)?;
        Ok(InductionState { d, b, matter, time })
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        max_abs_diff(&self.components(), &other.components())
    }
}

fn collect_components<'a, T>(
    a: &'a VectorField<T>,
    b: &'a VectorField<T>,
    matter: &'a [MatterPair<T>],
) -> Vec<&'a [T]> {
    let mut out: Vec<&[T]> = Vec::with_capacity(6 + 6 * matter.len());
    out.extend(a.comp.iter().map(|c| c.as_slice()));
    out.extend(b.comp.iter().map(|c| c.as_slice()));
    for p in matter {
        out.extend(p.odd.comp.iter().map(|c| c.as_slice()));
        out.extend(p.even.comp.iter().map(|c| c.as_slice()));
    }
    out
}

type Split<T> = (VectorField<T>, VectorField<T>, Vec<MatterPair<T>>);

fn split_components<T: Real>(comps: Vec<Vec<T>>) -> Result<Split<T>> {
    if comps.len() < 6 || (comps.len() - 6) % 6 != 0 {
        return Err(Error::Snapshot(format!(
            "component count {} is not 6 + 6N",
            comps.len()
        )));
    }
    let len = comps[0].len();
    if comps.iter().any(|c| c.len() != len) {
        return Err(Error::Snapshot("component lengths differ".into()));
    }
    let pairs = (comps.len() - 6) / 6;
    let mut it = comps.into_iter();
    let mut take3 = || VectorField {
        comp: [
            it.next().expect("count checked"),
            it.next().expect("count checked"),
            it.next().expect("count checked"),
        ],
    };
    let a = take3();
    let b = take3();
    let matter = (0..pairs)
        .map(|_| {
            let odd = take3();
            let even = take3();
            MatterPair { odd, even }
        })
        .collect();
    Ok((a, b, matter))
}

fn max_abs_diff<T: Real>(a: &[&[T]], b: &[&[T]]) -> T {
    assert_eq!(a.len(), b.len(), "states have different component counts");
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y.iter()))
        .fold(T::zero(), |m, (&x, &y)| m.max((x - y).magnitude()))
}
