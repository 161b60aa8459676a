//! Graded-conductivity absorbing layers.
//!
//! Each selected face carries `sigma(z) = sigma_n (z/L)^n / (n+1)` where `z`
//! is the depth into the layer measured from its inner onset, so `sigma`
//! vanishes with `n - 1` derivatives where the layer begins and peaks at the
//! box edge. Overlapping corners take the pointwise maximum.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;

/// One face of the periodic box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Face {
    #[serde(rename = "x-")]
    XLow,
    #[serde(rename = "x+")]
    XHigh,
    #[serde(rename = "y-")]
    YLow,
    #[serde(rename = "y+")]
    YHigh,
    #[serde(rename = "z-")]
    ZLow,
    #[serde(rename = "z+")]
    ZHigh,
}

impl Face {
    pub const ALL: [Face; 6] = [
        Face::XLow,
        Face::XHigh,
        Face::YLow,
        Face::YHigh,
        Face::ZLow,
        Face::ZHigh,
    ];

    pub fn axis(self) -> usize {
        match self {
            Face::XLow | Face::XHigh => 0,
            Face::YLow | Face::YHigh => 1,
            Face::ZLow | Face::ZHigh => 2,
        }
    }

    pub fn is_high(self) -> bool {
        matches!(self, Face::XHigh | Face::YHigh | Face::ZHigh)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Face::XLow => "x-",
            Face::XHigh => "x+",
            Face::YLow => "y-",
            Face::YHigh => "y+",
            Face::ZLow => "z-",
            Face::ZHigh => "z+",
        }
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Face {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Face::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidAbsorber(format!("unknown face {s:?}, expected x-, x+, y-, y+, z- or z+")))
    }
}

/// Absorbing layer design.
#[derive(Clone, Debug, PartialEq)]
pub struct AbsorberSpec<T> {
    pub faces: Vec<Face>,
    /// Layer depth `L`.
    pub depth: T,
    /// Profile exponent `n >= 2`.
    pub exponent: u32,
    pub sigma_n: T,
    /// Design band `[omega_1, omega_2]`.
    pub band: [T; 2],
}

/// Lower edge of the design window, `(n+1) c / (8 pi L)`: weaker layers transmit.
pub fn transmission_bound<T: Real>(exponent: u32, depth: T, c: T) -> T {
    T::from_count(exponent as usize + 1) * c / (T::lit(8.0) * T::PI() * depth)
}

/// Upper edge of the design window at `omega`, `omega^2 L / (8 pi c)`: stronger layers reflect.
pub fn reflection_bound<T: Real>(omega: T, depth: T, c: T) -> T {
    omega * omega * depth / (T::lit(8.0) * T::PI() * c)
}

impl<T: Real> AbsorberSpec<T> {
    pub fn new(faces: Vec<Face>, depth: T, exponent: u32, sigma_n: T, band: [T; 2]) -> Result<Self> {
        let spec = AbsorberSpec {
            faces,
            depth,
            exponent,
            sigma_n,
            band,
        };
        spec.check()?;
        Ok(spec)
    }

    /// Places `sigma_L` at the geometric mean of the design window at the band center.
    pub fn with_default_sigma(faces: Vec<Face>, depth: T, exponent: u32, band: [T; 2], c: T) -> Result<Self> {
        let center = (band[0] + band[1]) / T::lit(2.0);
        let lo = transmission_bound(exponent, depth, c);
        let hi = reflection_bound(center, depth, c);
        Self::new(faces, depth, exponent, (lo * hi).sqrt(), band)
    }

    fn check(&self) -> Result<()> {
        if self.faces.is_empty() {
            return Err(Error::InvalidAbsorber("no faces selected".into()));
        }
        if self.exponent < 2 {
            return Err(Error::InvalidAbsorber(format!(
                "profile exponent must be at least 2, got {}",
                self.exponent
            )));
        }
        if !(self.depth > T::zero()) || !self.depth.is_finite() {
            return Err(Error::InvalidAbsorber(format!("depth must be positive, got {}", self.depth)));
        }
        if !(self.sigma_n > T::zero()) || !self.sigma_n.is_finite() {
            return Err(Error::InvalidAbsorber(format!(
                "sigma_n must be positive, got {}",
                self.sigma_n
            )));
        }
        if !(self.band[0] > T::zero()) || !(self.band[1] >= self.band[0]) || !self.band[1].is_finite() {
            return Err(Error::InvalidAbsorber(format!(
                "band must satisfy 0 < omega_1 <= omega_2, got [{}, {}]",
                self.band[0], self.band[1]
            )));
        }
        Ok(())
    }

    /// Profile at depth `z` into the layer (0 at the onset, `L` at the edge).
    pub fn profile(&self, z: T) -> T {
        if z <= T::zero() {
            return T::zero();
        }
        let s = (z / self.depth).min(T::one());
        self.sigma_n * s.powi(self.exponent as i32) / T::from_count(self.exponent as usize + 1)
    }

    /// The layer conductivity scale used in the design window; for this
    /// profile family it is `sigma_n` by convention.
    pub fn sigma_l(&self) -> T {
        self.sigma_n
    }

    /// Errors when a face lies on a suppressed axis or the layer is at least
    /// half the box along its axis.
    pub fn check_grid(&self, grid: &Grid<T>) -> Result<()> {
        self.check()?;
        for face in &self.faces {
            let axis = face.axis();
            if axis >= grid.dims() {
                return Err(Error::InvalidAbsorber(format!(
                    "face {face} lies on a suppressed axis of a {}D grid",
                    grid.dims()
                )));
            }
            let half = grid.extent(axis) / T::lit(2.0);
            if !(self.depth < half) {
                return Err(Error::InvalidAbsorber(format!(
                    "absorber depth {} must be less than half the box extent {} on face {face}",
                    self.depth, half
                )));
            }
        }
        Ok(())
    }
}

/// Conductivity map of the layers; zero in the interior.
pub fn build_absorber_profile<T: Real>(spec: &AbsorberSpec<T>, grid: &Grid<T>) -> Result<Vec<T>> {
    spec.check_grid(grid)?;
    let mut sigma = vec![T::zero(); grid.len()];
    for (i, s) in sigma.iter_mut().enumerate() {
        let pos = grid.position(i);
        for face in &spec.faces {
            let axis = face.axis();
            let x = pos[axis];
            let z = if face.is_high() {
                x - (grid.extent(axis) - spec.depth)
            } else {
                spec.depth - x
            };
            *s = s.max(spec.profile(z));
        }
    }
    Ok(sigma)
}

/// Reflection of a plane wave at normal incidence on a conducting half-space,
/// `R = |(1 - nu)/(1 + nu)|^2` with `nu^2 = 1 + 4 pi i sigma_0 / omega`.
///
/// For small `q = 4 pi sigma_0 / omega` this behaves as `q^2 / 16`.
pub fn reflection_estimate<T: Real>(omega: T, sigma0: T) -> T {
    let nu2 = Complex::new(T::one(), T::lit(4.0) * T::PI() * sigma0 / omega);
    let nu = nu2.sqrt();
    let one = Complex::new(T::one(), T::zero());
    let eta = (one - nu) / (one + nu);
    eta.norm_sqr()
}

/// Window evaluation at one band edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandEdgeCheck {
    pub omega: f64,
    pub lower: f64,
    pub sigma_l: f64,
    pub upper: f64,
    /// `sigma_L` above the lower bound: the layer does not let the wave through.
    pub transmission_ok: bool,
    /// `sigma_L` below the upper bound: the layer onset does not reflect.
    pub reflection_ok: bool,
}

impl BandEdgeCheck {
    pub fn pass(&self) -> bool {
        self.transmission_ok && self.reflection_ok
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AbsorberValidation {
    pub edges: [BandEdgeCheck; 2],
}

impl AbsorberValidation {
    pub fn pass(&self) -> bool {
        self.edges.iter().all(BandEdgeCheck::pass)
    }
}

/// Checks `(n+1) c / (8 pi L) < sigma_L < omega^2 L / (8 pi c)` at both band edges.
pub fn validate_absorber<T: Real>(spec: &AbsorberSpec<T>, c: T) -> AbsorberValidation {
    let lower = transmission_bound(spec.exponent, spec.depth, c).to_f64_lossy();
    let sigma_l = spec.sigma_l().to_f64_lossy();
    let edge = |w: T| {
        let upper = reflection_bound(w, spec.depth, c).to_f64_lossy();
        BandEdgeCheck {
            omega: w.to_f64_lossy(),
            lower,
            sigma_l,
            upper,
            transmission_ok: sigma_l > lower,
            reflection_ok: sigma_l < upper,
        }
    };
    AbsorberValidation {
        edges: [edge(spec.band[0]), edge(spec.band[1])],
    }
}
