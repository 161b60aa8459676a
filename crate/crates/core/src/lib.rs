//! Pseudospectral split-operator Maxwell solver for passive Lorentz/Drude media.
//!
//! Every numerical type is generic over [`Real`]; the aliases below fix the
//! common precisions.

pub mod boundary;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod medium;
pub mod propagator;
pub mod pulse;
pub mod scalar;
pub mod simulate;
pub mod snapshot;
pub mod spectra;
pub mod spectral;
pub mod state;

pub use boundary::{AbsorberSpec, AbsorberValidation, Face};
pub use diagnostics::{DiagnosticsRecord, StabilityReport};
pub use error::{Error, Result};
pub use grid::{Grid, ScalarField, VectorField};
pub use medium::{LorentzResonance, MediumMap};
pub use propagator::{Integrator, OpticsState, PropagatorConfig, Representation, RunPlan, RunSink, Scheme};
pub use scalar::Real;
pub use spectral::{FreeKernel, Spectral, Spectrum};
pub use state::{FieldState, InductionState, MatterPair};

pub type Grid64 = Grid<f64>;
pub type Grid32 = Grid<f32>;
pub type VectorField64 = VectorField<f64>;
pub type VectorField32 = VectorField<f32>;
pub type MediumMap64 = MediumMap<f64>;
pub type MediumMap32 = MediumMap<f32>;
pub type FieldState64 = FieldState<f64>;
pub type FieldState32 = FieldState<f32>;
pub type InductionState64 = InductionState<f64>;
pub type InductionState32 = InductionState<f32>;
pub type Spectral64 = Spectral<f64>;
pub type Spectral32 = Spectral<f32>;
