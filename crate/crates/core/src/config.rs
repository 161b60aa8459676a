//! Simulation config files (TOML).
//!
//! ```toml
//! [grid]
//! n = [512]
//! dr = [0.125]
//! c = 1.0                      # optional
//!
//! [[medium.resonance]]
//! omega = 8.0
//! gamma = 0.0
//! omega_p = 0.0                # background, optional
//! regions = [{ shape = "slab", axis = "x", from = 28.0, to = 36.0, omega_p = 4.0 }]
//!
//! [pulse]
//! k0 = [6.283185307179586, 0.0, 0.0]
//! kappa = 1.0
//! center = [20.0, 0.0, 0.0]
//! polarization = { kind = "s" }  # optional
//!
//! [absorber]                   # optional
//! faces = ["x-", "x+"]
//! depth = 8.0
//! exponent = 3                 # optional
//!
//! [run]
//! dt = 0.05
//! steps = 2000
//! scheme = "split-induction"   # optional
//!
//! [output]                     # optional
//! dir = "out"
//! probes = [{ name = "incident", point = [16.0, 0.0, 0.0] }]
//! ```
//!
//! Region shapes are `slab` (`axis`, `from`, `to`), `box` (`min`, `max`) and
//! `sphere` (`center`, `radius`; a disk in 2D). Later regions override earlier
//! ones. A probe is either a `point` or a `plane` (`{ axis, at }`) average.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::boundary::{build_absorber_profile, AbsorberSpec, Face};
use crate::error::{Error, Result};
use crate::grid::{Grid, VectorField};
use crate::medium::{LorentzResonance, MediumMap};
use crate::propagator::{PropagatorConfig, Representation, Scheme};
use crate::pulse::{build_pulse, Polarization, PulseSpec};
use crate::snapshot::Snapshot;

fn default_c() -> f64 {
    1.0
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_exponent() -> u32 {
    3
}

fn default_probe_every() -> usize {
    1
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_scheme() -> Scheme {
    Scheme::SplitInduction
}

fn is_default<T: Default + PartialEq>(x: &T) -> bool {
    *x == T::default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: Vec<usize>,
    pub dr: Vec<f64>,
    #[serde(default = "default_c")]
    pub c: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum Region {
    Slab { axis: Axis, from: f64, to: f64, omega_p: f64 },
    Box { min: Vec<f64>, max: Vec<f64>, omega_p: f64 },
    Sphere { center: Vec<f64>, radius: f64, omega_p: f64 },
}

impl Region {
    pub fn omega_p(&self) -> f64 {
        match self {
            Region::Slab { omega_p, .. } | Region::Box { omega_p, .. } | Region::Sphere { omega_p, .. } => {
                *omega_p
            }
        }
    }

    /// Whether the grid point at `pos` lies inside, on the active axes.
    pub fn contains(&self, pos: [f64; 3], dims: usize) -> bool {
        match self {
            Region::Slab { axis, from, to, .. } => {
                let x = pos[axis.index()];
                x >= *from && x < *to
            }
            Region::Box { min, max, .. } => (0..dims).all(|a| pos[a] >= min[a] && pos[a] < max[a]),
            Region::Sphere { center, radius, .. } => {
                (0..dims).map(|a| (pos[a] - center[a]).powi(2)).sum::<f64>() <= radius * radius
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceConfig {
    pub omega: f64,
    pub gamma: f64,
    /// Background plasma frequency outside every region.
    #[serde(default, skip_serializing_if = "is_default")]
    pub omega_p: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub regions: Vec<Region>,
    /// Plasma frequency map read from a one-component snapshot; overrides the rest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_p_snapshot: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    #[serde(default, rename = "resonance", skip_serializing_if = "Vec::is_empty")]
    pub resonances: Vec<ResonanceConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub k0: Vec<f64>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub kappa: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub center: Vec<f64>,
    #[serde(default = "default_polarization")]
    pub polarization: Polarization<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e2: Option<Vec<f64>>,
    /// Initial `(E, H)` read from a six-component snapshot instead of the packet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from_snapshot: Option<PathBuf>,
}

fn default_polarization() -> Polarization<f64> {
    Polarization::S
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsorberConfig {
    pub faces: Vec<Face>,
    pub depth: f64,
    #[serde(default = "default_exponent")]
    pub exponent: u32,
    /// Defaults to the geometric mean of the design window at band center.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_n: Option<f64>,
    /// Defaults to `c (|k0| -/+ 2 kappa)` of the pulse.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default)]
    pub representation: Representation,
    pub dt: f64,
    pub steps: usize,
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default = "default_probe_every")]
    pub probe_every: usize,
    #[serde(default)]
    pub gauss_projection_every: usize,
    /// Repeat the run without resonances to record reference probe series.
    #[serde(default)]
    pub calibration: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneConfig {
    pub axis: Axis,
    pub at: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plane: Option<PlaneConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<ProbeConfig>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_dir(),
            probes: Vec::new(),
        }
    }
}

/// A complete simulation description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub medium: MediumConfig,
    pub pulse: PulseConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absorber: Option<AbsorberConfig>,
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses and validates `text`, reporting every semantic problem at once.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let cfg: SimConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        Error::ConfigSyntax {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a config file; relative snapshot paths resolve against its directory.
pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config(&text)?;
    if let Some(base) = path.parent() {
        cfg.resolve_paths(base);
    }
    Ok(cfg)
}

fn in_box(p: f64, extent: f64) -> bool {
    p >= 0.0 && p < extent
}

impl SimConfig {
    /// Canonical TOML text; parses back to an equal config.
    pub fn to_canonical(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for r in &mut self.medium.resonances {
            if let Some(p) = &mut r.omega_p_snapshot {
                fix(p);
            }
        }
        if let Some(p) = &mut self.pulse.from_snapshot {
            fix(p);
        }
    }

    fn dims(&self) -> usize {
        self.grid.n.len()
    }

    fn extent(&self, axis: usize) -> f64 {
        if axis < self.dims() && axis < self.grid.dr.len() {
            self.grid.n[axis] as f64 * self.grid.dr[axis]
        } else {
            0.0
        }
    }

    /// Checks every section without allocating field data.
    pub fn validate(&self) -> Result<()> {
        let mut errs: Vec<String> = Vec::new();
        let dims = self.dims();
        let g = &self.grid;
        let grid_ok = (1..=3).contains(&dims) && g.dr.len() == dims;
        if !(1..=3).contains(&dims) {
            errs.push(format!("grid.n: expected 1 to 3 axes, got {dims}"));
        }
        if g.dr.len() != dims {
            errs.push(format!("grid.dr: {} spacings for {dims} axes", g.dr.len()));
        }
        for (a, &n) in g.n.iter().enumerate() {
            if n < 2 {
                errs.push(format!("grid.n[{a}]: need at least 2 points, got {n}"));
            }
        }
        for (a, &d) in g.dr.iter().enumerate() {
            if !(d > 0.0) || !d.is_finite() {
                errs.push(format!("grid.dr[{a}]: must be positive, got {d}"));
            }
        }
        if !(g.c > 0.0) || !g.c.is_finite() {
            errs.push(format!("grid.c: must be positive, got {}", g.c));
        }

        let vec_check = |errs: &mut Vec<String>, key: String, v: &[f64], bounded: bool| {
            if v.len() != 3 && v.len() != dims {
                errs.push(format!("{key}: expected {dims} or 3 components, got {}", v.len()));
                return;
            }
            if v.iter().any(|x| !x.is_finite()) {
                errs.push(format!("{key}: values must be finite"));
            }
            if bounded && grid_ok {
                for a in 0..dims {
                    if !in_box(v[a], self.extent(a)) {
                        errs.push(format!(
                            "{key}[{a}]: {} lies outside the box [0, {})",
                            v[a],
                            self.extent(a)
                        ));
                    }
                }
            }
        };

        for (ri, r) in self.medium.resonances.iter().enumerate() {
            let key = format!("medium.resonance[{ri}]");
            if !(r.omega >= 0.0) || !r.omega.is_finite() {
                errs.push(format!("{key}.omega: must be >= 0, got {}", r.omega));
            }
            if !(r.gamma >= 0.0) || !r.gamma.is_finite() {
                errs.push(format!("{key}.gamma: must be >= 0, got {}", r.gamma));
            }
            if !(r.omega_p >= 0.0) || !r.omega_p.is_finite() {
                errs.push(format!("{key}.omega_p: must be >= 0, got {}", r.omega_p));
            }
            for (gi, reg) in r.regions.iter().enumerate() {
                let rk = format!("{key}.regions[{gi}]");
                if !(reg.omega_p() >= 0.0) || !reg.omega_p().is_finite() {
                    errs.push(format!("{rk}.omega_p: must be >= 0, got {}", reg.omega_p()));
                }
                match reg {
                    Region::Slab { axis, from, to, .. } => {
                        if axis.index() >= dims {
                            errs.push(format!("{rk}.axis: {axis:?} is not an axis of a {dims}D grid"));
                        }
                        if !(from < to) {
                            errs.push(format!("{rk}: from = {from} must be less than to = {to}"));
                        }
                    }
                    Region::Box { min, max, .. } => {
                        vec_check(&mut errs, format!("{rk}.min"), min, false);
                        vec_check(&mut errs, format!("{rk}.max"), max, false);
                    }
                    Region::Sphere { center, radius, .. } => {
                        vec_check(&mut errs, format!("{rk}.center"), center, false);
                        if !(*radius > 0.0) {
                            errs.push(format!("{rk}.radius: must be positive, got {radius}"));
                        }
                    }
                }
            }
        }

        let p = &self.pulse;
        if p.from_snapshot.is_none() {
            if p.k0.is_empty() {
                errs.push("pulse.k0: required unless pulse.from_snapshot is given".into());
            } else {
                vec_check(&mut errs, "pulse.k0".into(), &p.k0, false);
            }
            if p.center.is_empty() {
                errs.push("pulse.center: required unless pulse.from_snapshot is given".into());
            } else {
                vec_check(&mut errs, "pulse.center".into(), &p.center, true);
            }
            if !(p.kappa > 0.0) {
                errs.push(format!("pulse.kappa: must be positive, got {}", p.kappa));
            }
            if errs.is_empty() {
                if let Err(e) = self.grid_unchecked().and_then(|grid| self.pulse_spec().validate(&grid)) {
                    errs.push(format!("pulse: {e}"));
                }
            }
        }

        if let Some(a) = &self.absorber {
            if a.exponent < 2 {
                errs.push(format!("absorber.exponent: must be at least 2, got {}", a.exponent));
            }
            if !(a.depth > 0.0) {
                errs.push(format!("absorber.depth: must be positive, got {}", a.depth));
            }
            if a.faces.is_empty() {
                errs.push("absorber.faces: at least one face is required".into());
            }
            for f in &a.faces {
                if f.axis() >= dims {
                    errs.push(format!("absorber.faces: {f} is not a face of a {dims}D grid"));
                } else if grid_ok && !(a.depth < self.extent(f.axis()) / 2.0) {
                    errs.push(format!(
                        "absorber.depth: {} must be less than half the box extent {} (face {f})",
                        a.depth,
                        self.extent(f.axis()) / 2.0
                    ));
                }
            }
            if let Some(s) = a.sigma_n {
                if !(s > 0.0) {
                    errs.push(format!("absorber.sigma_n: must be positive, got {s}"));
                }
            }
            match a.band {
                Some(b) if !(b[0] > 0.0 && b[1] >= b[0]) => {
                    errs.push(format!("absorber.band: need 0 < omega_1 <= omega_2, got {b:?}"));
                }
                None if p.from_snapshot.is_some() => {
                    errs.push("absorber.band: required when the pulse comes from a snapshot".into());
                }
                _ => {}
            }
        }

        let r = &self.run;
        if !(r.dt > 0.0) || !r.dt.is_finite() {
            errs.push(format!("run.dt: must be positive, got {}", r.dt));
        }
        if r.probe_every == 0 {
            errs.push("run.probe_every: must be at least 1".into());
        }
        if r.scheme == Scheme::LeapfrogGeometric {
            for (ri, res) in self.medium.resonances.iter().enumerate() {
                if res.omega == 0.0 {
                    errs.push(format!(
                        "medium.resonance[{ri}]: a Drude resonance has no static permittivity for run.scheme = leapfrog-geometric"
                    ));
                }
            }
        }

        let mut names = std::collections::HashSet::new();
        for (i, pr) in self.output.probes.iter().enumerate() {
            let key = format!("output.probes[{i}]");
            if pr.name.is_empty() || pr.name.contains(',') {
                errs.push(format!("{key}.name: must be non-empty and free of commas"));
            }
            if !names.insert(pr.name.clone()) {
                errs.push(format!("{key}.name: duplicate probe name {:?}", pr.name));
            }
            match (&pr.point, &pr.plane) {
                (Some(pt), None) => vec_check(&mut errs, format!("{key}.point"), pt, true),
                (None, Some(pl)) => {
                    let a = pl.axis.index();
                    if a >= dims {
                        errs.push(format!("{key}.plane.axis: not an axis of a {dims}D grid"));
                    } else if grid_ok && !in_box(pl.at, self.extent(a)) {
                        errs.push(format!(
                            "{key}.plane.at: {} lies outside the box [0, {})",
                            pl.at,
                            self.extent(a)
                        ));
                    }
                }
                _ => errs.push(format!("{key}: exactly one of point or plane is required")),
            }
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigValidation(errs))
        }
    }

    fn grid_unchecked(&self) -> Result<Grid<f64>> {
        Grid::new(&self.grid.n, &self.grid.dr)?.with_c(self.grid.c)
    }

    pub fn build_grid(&self) -> Result<Grid<f64>> {
        self.grid_unchecked()
    }

    fn vec3(v: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (o, x) in out.iter_mut().zip(v) {
            *o = *x;
        }
        out
    }

    /// Packet parameters (ignored when the pulse comes from a snapshot).
    pub fn pulse_spec(&self) -> PulseSpec<f64> {
        let p = &self.pulse;
        PulseSpec {
            k0: Self::vec3(&p.k0),
            kappa: p.kappa,
            amplitude: p.amplitude,
            polarization: p.polarization,
            center: Self::vec3(&p.center),
            e2: p.e2.as_deref().map(Self::vec3),
        }
    }

    /// Largest wavenumber of the initial packet, when known.
    pub fn k_band(&self) -> Option<f64> {
        self.pulse.from_snapshot.is_none().then(|| self.pulse_spec().k_band())
    }

    pub fn absorber_spec(&self) -> Result<Option<AbsorberSpec<f64>>> {
        let Some(a) = &self.absorber else {
            return Ok(None);
        };
        let band = match a.band {
            Some(b) => b,
            None => {
                let s = self.pulse_spec();
                let k = s.k0_norm();
                let c = self.grid.c;
                [c * (k - 2.0 * s.kappa).max(0.5 * k), c * (k + 2.0 * s.kappa)]
            }
        };
        let spec = match a.sigma_n {
            Some(s) => AbsorberSpec::new(a.faces.clone(), a.depth, a.exponent, s, band)?,
            None => AbsorberSpec::with_default_sigma(a.faces.clone(), a.depth, a.exponent, band, self.grid.c)?,
        };
        Ok(Some(spec))
    }

    /// Medium map with the absorber conductivity folded in.
    pub fn build_medium(&self, grid: &Grid<f64>) -> Result<MediumMap<f64>> {
        let mut res = Vec::with_capacity(self.medium.resonances.len());
        for r in &self.medium.resonances {
            let wp = match &r.omega_p_snapshot {
                Some(path) => {
                    let snap = Snapshot::load(path)?;
                    if !snap.matches(grid) || snap.components.len() != 1 {
                        return Err(Error::ConfigValidation(vec![format!(
                            "medium.resonance.omega_p_snapshot: {} must hold one component on the configured grid",
                            path.display()
                        )]));
                    }
                    snap.components.into_iter().next().expect("one component")
                }
                None => (0..grid.len())
                    .map(|i| {
                        let pos = grid.position(i);
                        r.regions
                            .iter()
                            .rev()
                            .find(|reg| reg.contains(pos, grid.dims()))
                            .map_or(r.omega_p, Region::omega_p)
                    })
                    .collect(),
            };
            res.push(LorentzResonance::new(r.omega, r.gamma, wp)?);
        }
        let sigma = match self.absorber_spec()? {
            Some(spec) => Some(build_absorber_profile(&spec, grid)?),
            None => None,
        };
        MediumMap::new(grid, res, sigma).map_err(|e| Error::ConfigValidation(vec![format!("medium: {e}")]))
    }

    /// Initial `(E, H)`.
    pub fn build_initial_fields(&self, grid: &Grid<f64>) -> Result<(VectorField<f64>, VectorField<f64>)> {
        match &self.pulse.from_snapshot {
            Some(path) => {
                let snap = Snapshot::load(path)?;
                if !snap.matches(grid) || snap.components.len() != 6 {
                    return Err(Error::ConfigValidation(vec![format!(
                        "pulse.from_snapshot: {} must hold E and H (6 components) on the configured grid",
                        path.display()
                    )]));
                }
                let mut it = snap.components.into_iter();
                let mut take3 = || VectorField {
                    comp: [
                        it.next().expect("6 components"),
                        it.next().expect("6 components"),
                        it.next().expect("6 components"),
                    ],
                };
                let e = take3();
                let h = take3();
                Ok((e, h))
            }
            None => build_pulse(&self.pulse_spec(), grid),
        }
    }

    pub fn propagator_config(&self) -> PropagatorConfig<f64> {
        PropagatorConfig {
            scheme: self.run.scheme,
            representation: self.run.representation,
            dt: self.run.dt,
            steps: self.run.steps,
            snapshot_every: self.run.snapshot_every,
            probe_every: self.run.probe_every,
            gauss_projection_every: self.run.gauss_projection_every,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
n = [256]
dr = [0.125]

[pulse]
k0 = [6.283185307179586]
kappa = 1.0
center = [16.0]

[run]
dt = 0.05
steps = 10
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.grid.c, 1.0);
        assert_eq!(cfg.run.scheme, Scheme::SplitInduction);
        assert_eq!(cfg.run.probe_every, 1);
        assert_eq!(cfg.pulse.amplitude, 1.0);
        assert!(cfg.medium.resonances.is_empty());
        assert_eq!(cfg.output.dir, PathBuf::from("out"));
    }

    #[test]
    fn syntax_error_has_position() {
        let bad = MINIMAL.replace("kappa = 1.0", "kappa = = 1.0");
        match parse_config(&bad) {
            Err(Error::ConfigSyntax { line, column, .. }) => {
                assert_eq!(line, 8);
                assert!(column > 1);
            }
            other => panic!("unexpected {other:?}"),
        }
        let unknown = MINIMAL.replace("steps = 10", "steps = 10\nstepz = 3");
        assert!(matches!(parse_config(&unknown), Err(Error::ConfigSyntax { .. })));
    }

    #[test]
    fn deep_absorber_names_both_lengths() {
        let text = format!("{MINIMAL}\n[absorber]\nfaces = [\"x-\"]\ndepth = 20.0\n");
        match parse_config(&text) {
            Err(Error::ConfigValidation(errs)) => {
                assert!(errs.iter().any(|e| e.contains("20") && e.contains("16")), "{errs:?}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn all_errors_are_collected() {
        let text = MINIMAL
            .replace("dt = 0.05", "dt = -1.0")
            .replace("center = [16.0]", "center = [99.0]")
            .replace("dr = [0.125]", "dr = [0.125]\nc = 0.0");
        match parse_config(&text) {
            Err(Error::ConfigValidation(errs)) => assert!(errs.len() >= 3, "{errs:?}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn canonical_round_trip() {
        let text = format!(
            "{MINIMAL}\n[[medium.resonance]]\nomega = 8.0\ngamma = 0.1\nregions = [{{ shape = \"slab\", axis = \"x\", from = 12.0, to = 20.0, omega_p = 3.0 }}, {{ shape = \"sphere\", center = [5.0], radius = 1.0, omega_p = 1.0 }}]\n\n[absorber]\nfaces = [\"x-\", \"x+\"]\ndepth = 4.0\n\n[output]\ndir = \"res\"\nprobes = [{{ name = \"a\", point = [3.0] }}, {{ name = \"b\", plane = {{ axis = \"x\", at = 30.0 }} }}]\n"
        );
        let cfg = parse_config(&text).unwrap();
        let again = parse_config(&cfg.to_canonical()).unwrap();
        assert_eq!(cfg, again);
        let g = cfg.build_grid().unwrap();
        let m = cfg.build_medium(&g).unwrap();
        let i = (16.0 / 0.125) as usize;
        assert_eq!(m.resonances()[0].omega_p[i], 3.0);
        assert_eq!(m.resonances()[0].omega_p[0], 0.0);
        assert!(m.sigma()[0] > 0.0 && m.sigma()[i] == 0.0);
    }

    #[test]
    fn resonance_under_absorber_is_rejected() {
        let text = format!(
            "{MINIMAL}\n[[medium.resonance]]\nomega = 8.0\ngamma = 0.1\nomega_p = 1.0\n\n[absorber]\nfaces = [\"x-\"]\ndepth = 4.0\n"
        );
        let cfg = parse_config(&text).unwrap();
        let g = cfg.build_grid().unwrap();
        assert!(matches!(cfg.build_medium(&g), Err(Error::ConfigValidation(_))));
    }
}
