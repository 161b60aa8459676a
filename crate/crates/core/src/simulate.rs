//! Running a [`SimConfig`] end to end and writing its artifacts.
//!
//! An output directory holds:
//!
//! - `config.toml`: the canonical config actually run
//! - `diagnostics.csv`: one [`DiagnosticsRecord`] row per probe instant
//! - `probes.csv`: `time` then `<name>.Ex .. <name>.Hz` for every probe
//! - `probes_vacuum.csv`: the same series with all resonances removed (calibration runs)
//! - `snap_<step>.mxsp`: checkpoint-complete snapshots at the snapshot cadence
//! - `checkpoint.mxsp`: the final state, or the last finite one after a failure
//! - `manifest.txt`: SHA-256 of every file above, in `sha256sum` format

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use sha2::{Digest, Sha256};

use crate::boundary::validate_absorber;
use crate::config::{ProbeConfig, SimConfig};
use crate::diagnostics::{stability_report, CsvWriter, DiagnosticsRecord, StabilityInputs, StabilityReport};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::medium::MediumMap;
use crate::propagator::{run, static_permittivity_map, Integrator, RunPlan, RunSink, Scheme, StateView};
use crate::snapshot::{save_snapshot, Snapshot};
use crate::spectral::Spectral;
use crate::state::FieldState;

pub const CONFIG_FILE: &str = "config.toml";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const PROBES_FILE: &str = "probes.csv";
pub const VACUUM_PROBES_FILE: &str = "probes_vacuum.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.mxsp";
pub const MANIFEST_FILE: &str = "manifest.txt";

pub const FIELD_LABELS: [&str; 6] = ["Ex", "Ey", "Ez", "Hx", "Hy", "Hz"];

pub fn snapshot_name(step: usize) -> String {
    format!("snap_{step:08}.mxsp")
}

/// Grid points a probe averages over.
#[derive(Clone, Debug)]
pub struct ProbePoints {
    pub name: String,
    pub indices: Vec<usize>,
}

fn nearest(grid: &Grid<f64>, axis: usize, x: f64) -> usize {
    let n = grid.n()[axis];
    ((x / grid.dr()[axis]).round() as usize) % n
}

impl ProbePoints {
    pub fn resolve(probe: &ProbeConfig, grid: &Grid<f64>) -> Self {
        let indices = if let Some(p) = &probe.point {
            let mut c = [0usize; 3];
            for (a, ca) in c.iter_mut().enumerate().take(grid.dims()) {
                *ca = nearest(grid, a, p[a]);
            }
            vec![grid.index(c[0], c[1], c[2])]
        } else {
            let plane = probe.plane.as_ref().expect("validated probe has a point or a plane");
            let axis = plane.axis.index();
            let at = nearest(grid, axis, plane.at);
            (0..grid.len()).filter(|&i| grid.coords(i)[axis] == at).collect()
        };
        ProbePoints {
            name: probe.name.clone(),
            indices,
        }
    }

    /// Average `(E, H)` over the probe points.
    pub fn sample(&self, view: &StateView<'_, f64>, medium: &MediumMap<f64>, eps_inv: Option<&[f64]>) -> [f64; 6] {
        let mut out = [0.0; 6];
        for &i in &self.indices {
            for a in 0..3 {
                out[a] += view.electric_at(medium, eps_inv, a, i);
                out[a + 3] += view.magnetic_at(a, i);
            }
        }
        let w = 1.0 / self.indices.len() as f64;
        out.map(|x| x * w)
    }
}

/// Writes the wide probe table.
pub struct ProbeWriter<W: Write> {
    out: W,
    probes: Vec<ProbePoints>,
}

impl<W: Write> ProbeWriter<W> {
    pub fn new(mut out: W, probes: Vec<ProbePoints>) -> std::io::Result<Self> {
        let mut header = String::from("time");
        for p in &probes {
            for l in FIELD_LABELS {
                write!(header, ",{}.{l}", p.name).expect("write to String");
            }
        }
        writeln!(out, "{header}")?;
        Ok(ProbeWriter { out, probes })
    }

    pub fn write(&mut self, view: &StateView<'_, f64>, medium: &MediumMap<f64>, eps_inv: Option<&[f64]>) -> std::io::Result<()> {
        let mut line = format!("{:.17e}", view.time());
        for p in &self.probes {
            for x in p.sample(view, medium, eps_inv) {
                write!(line, ",{x:.17e}").expect("write to String");
            }
        }
        writeln!(self.out, "{line}")
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

/// Command-line adjustments applied on top of a config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub scheme: Option<Scheme>,
    pub snapshot_every: Option<usize>,
    pub probe_every: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut SimConfig) -> Result<()> {
        if let Some(s) = self.scheme {
            cfg.run.scheme = s;
        }
        if let Some(n) = self.snapshot_every {
            cfg.run.snapshot_every = n;
        }
        if let Some(n) = self.probe_every {
            cfg.run.probe_every = n;
        }
        if let Some(d) = &self.out_dir {
            cfg.output.dir = d.clone();
        }
        cfg.validate()
    }
}

/// Outcome of [`simulate`].
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub start_step: usize,
    pub end_step: usize,
    pub final_time: f64,
    pub stability: StabilityReport,
    pub files: Vec<String>,
}

/// Stability and absorber numbers for a config, without running it.
pub fn check(cfg: &SimConfig) -> Result<StabilityReport> {
    let grid = cfg.build_grid()?;
    let medium = cfg.build_medium(&grid)?;
    report_for(cfg, &grid, &medium)
}

fn report_for(cfg: &SimConfig, grid: &Grid<f64>, medium: &MediumMap<f64>) -> Result<StabilityReport> {
    let validation = match cfg.absorber_spec()? {
        Some(spec) => Some(validate_absorber(&spec, grid.c())),
        None => None,
    };
    let pcfg = cfg.propagator_config();
    let inputs = StabilityInputs {
        scheme: pcfg.scheme,
        representation: pcfg.effective_representation(),
        k_band: cfg.k_band(),
        absorber: validation.as_ref(),
    };
    Ok(stability_report(grid, medium, cfg.run.dt, &inputs))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn inverse(eps: Vec<f64>) -> Vec<f64> {
    eps.into_iter().map(|e| 1.0 / e).collect()
}

struct FileSink<'m> {
    dir: PathBuf,
    grid: Grid<f64>,
    medium: &'m MediumMap<f64>,
    eps_inv: Option<Vec<f64>>,
    diagnostics: Option<CsvWriter<BufWriter<File>>>,
    probes: ProbeWriter<BufWriter<File>>,
    snapshots: Vec<String>,
}

impl RunSink<f64> for FileSink<'_> {
    fn record(&mut self, _step: usize, record: &DiagnosticsRecord<f64>, state: StateView<'_, f64>) -> Result<()> {
        if let Some(d) = &mut self.diagnostics {
            d.write(record).map_err(|e| Error::io(&self.dir.join(DIAGNOSTICS_FILE), e))?;
        }
        self.probes
            .write(&state, self.medium, self.eps_inv.as_deref())
            .map_err(|e| Error::io(&self.dir.join(PROBES_FILE), e))
    }

    fn snapshot(&mut self, step: usize, integrator: &Integrator<'_, f64>) -> Result<()> {
        let name = snapshot_name(step);
        save_snapshot(&self.dir.join(&name), &self.grid, integrator.time(), &integrator.checkpoint_components())?;
        self.snapshots.push(name);
        Ok(())
    }

    fn failure(&mut self, step: usize, time: f64, components: &[Vec<f64>]) -> Result<()> {
        warn!("state turned non-finite after step {step}; writing the last finite state");
        let refs: Vec<&[f64]> = components.iter().map(Vec::as_slice).collect();
        save_snapshot(&self.dir.join(CHECKPOINT_FILE), &self.grid, time, &refs)
    }
}

impl FileSink<'_> {
    fn finish(&mut self) -> Result<()> {
        if let Some(d) = &mut self.diagnostics {
            d.flush().map_err(|e| Error::io(&self.dir.join(DIAGNOSTICS_FILE), e))?;
        }
        self.probes.flush().map_err(|e| Error::io(&self.dir.join(PROBES_FILE), e))
    }
}

/// Runs `cfg`, optionally resuming from a checkpoint written by an earlier
/// run of the same config. `cfg.run.steps` counts from step 0 either way.
pub fn simulate(cfg: &SimConfig, resume: Option<&Path>) -> Result<RunSummary> {
    cfg.validate()?;
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let grid = cfg.build_grid()?;
    let spectral = Spectral::new(&grid);
    let medium = cfg.build_medium(&grid)?;
    let stability = report_for(cfg, &grid, &medium)?;
    for c in stability.checks.iter().filter(|c| !c.ok) {
        warn!("{} = {:.4} exceeds {:.4}", c.name, c.value, c.limit);
    }
    let pcfg = cfg.propagator_config();
    let eps_inv = match pcfg.scheme {
        Scheme::LeapfrogGeometric => Some(inverse(static_permittivity_map(&medium)?)),
        _ => None,
    };
    let probes: Vec<ProbePoints> = cfg.output.probes.iter().map(|p| ProbePoints::resolve(p, &grid)).collect();

    std::fs::write(dir.join(CONFIG_FILE), cfg.to_canonical()).map_err(|e| Error::io(&dir.join(CONFIG_FILE), e))?;
    let mut files = vec![CONFIG_FILE.to_string()];

    let (mut integrator, start_step) = match resume {
        Some(path) => {
            let snap = Snapshot::load(path)?;
            if !snap.matches(&grid) {
                return Err(Error::Snapshot(format!("{} was written on a different grid", path.display())));
            }
            // Two-step schemes hold the seeded state one step ahead of the counter.
            let offset = usize::from(pcfg.scheme.is_leapfrog());
            let start = ((snap.time / pcfg.dt).round() as usize).saturating_sub(offset);
            if start > pcfg.steps {
                return Err(Error::Snapshot(format!(
                    "{} is at step {start}, past the configured {} steps",
                    path.display(),
                    pcfg.steps
                )));
            }
            let integ = Integrator::resume(&pcfg, &spectral, &medium, snap.components_as(), snap.time)?;
            info!("resuming at step {start} (t = {})", snap.time);
            (integ, start)
        }
        None => {
            let (e, h) = cfg.build_initial_fields(&grid)?;
            let init = FieldState::new(&grid, &medium, e, h)?;
            (Integrator::start(&pcfg, &spectral, &medium, init)?, 0)
        }
    };

    if cfg.run.calibration && resume.is_none() {
        calibrate(cfg, &grid, &spectral, &medium, &probes, &dir)?;
        files.push(VACUUM_PROBES_FILE.to_string());
    }

    let mut plan = RunPlan::from_config(&pcfg, stability.flags);
    plan.start_step = start_step;
    plan.steps = pcfg.steps - start_step;
    let mut sink = FileSink {
        dir: dir.clone(),
        grid: grid.clone(),
        medium: &medium,
        eps_inv,
        diagnostics: Some(CsvWriter::new(create(&dir.join(DIAGNOSTICS_FILE))?).map_err(|e| Error::io(&dir, e))?),
        probes: ProbeWriter::new(create(&dir.join(PROBES_FILE))?, probes).map_err(|e| Error::io(&dir, e))?,
        snapshots: Vec::new(),
    };
    let outcome = run(&mut integrator, &spectral, &medium, &plan, &mut sink);
    sink.finish()?;
    files.push(DIAGNOSTICS_FILE.to_string());
    files.push(PROBES_FILE.to_string());
    files.extend(sink.snapshots.iter().cloned());
    if outcome.is_ok() {
        save_snapshot(&dir.join(CHECKPOINT_FILE), &grid, integrator.time(), &integrator.checkpoint_components())?;
    }
    if dir.join(CHECKPOINT_FILE).exists() {
        files.push(CHECKPOINT_FILE.to_string());
    }
    write_manifest(&dir, &files)?;
    outcome?;
    Ok(RunSummary {
        out_dir: dir,
        start_step,
        end_step: pcfg.steps,
        final_time: integrator.time(),
        stability,
        files,
    })
}

/// Same run with the resonances removed and the absorber kept, probes only.
fn calibrate(
    cfg: &SimConfig,
    grid: &Grid<f64>,
    spectral: &Spectral<f64>,
    medium: &MediumMap<f64>,
    probes: &[ProbePoints],
    dir: &Path,
) -> Result<()> {
    let sigma = medium.sigma();
    let sigma = sigma.iter().any(|&s| s != 0.0).then(|| sigma.to_vec());
    let vacuum = MediumMap::new(grid, Vec::new(), sigma)?;
    let mut pcfg = cfg.propagator_config();
    pcfg.snapshot_every = 0;
    let (e, h) = cfg.build_initial_fields(grid)?;
    let init = FieldState::new(grid, &vacuum, e, h)?;
    let mut integ = Integrator::start(&pcfg, spectral, &vacuum, init)?;
    let path = dir.join(VACUUM_PROBES_FILE);
    let mut sink = FileSink {
        dir: dir.to_path_buf(),
        grid: grid.clone(),
        medium: &vacuum,
        eps_inv: integ.eps_inv().map(<[f64]>::to_vec),
        diagnostics: None,
        probes: ProbeWriter::new(create(&path)?, probes.to_vec()).map_err(|e| Error::io(&path, e))?,
        snapshots: Vec::new(),
    };
    info!("calibration run without resonances");
    run(&mut integ, spectral, &vacuum, &RunPlan::from_config(&pcfg, 0), &mut sink)?;
    sink.finish()
}

/// SHA-256 hex digest of a file.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut hex = String::with_capacity(64);
    for b in Sha256::digest(&bytes) {
        write!(hex, "{b:02x}").expect("write to String");
    }
    Ok(hex)
}

/// Writes `manifest.txt` listing `files` (relative to `dir`).
pub fn write_manifest(dir: &Path, files: &[String]) -> Result<()> {
    let mut text = String::new();
    for f in files {
        writeln!(text, "{}  {f}", sha256_file(&dir.join(f))?).expect("write to String");
    }
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn config(dir: &Path, extra: &str) -> SimConfig {
        let text = format!(
            r#"
[grid]
n = [128]
dr = [0.25]

[[medium.resonance]]
omega = 3.0
gamma = 0.1
regions = [{{ shape = "slab", axis = "x", from = 20.0, to = 24.0, omega_p = 2.0 }}]

[pulse]
k0 = [3.0]
kappa = 0.5
center = [12.0]

[run]
dt = 0.05
steps = 40
{extra}

[output]
dir = "{}"
probes = [{{ name = "a", point = [10.0] }}, {{ name = "p", plane = {{ axis = "x", at = 26.0 }} }}]
"#,
            dir.display()
        );
        parse_config(&text).unwrap()
    }

    #[test]
    fn writes_every_artifact() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = config(tmp.path(), "snapshot_every = 20\nprobe_every = 5\ncalibration = true");
        let s = simulate(&cfg, None).unwrap();
        assert!((s.final_time - 2.0).abs() < 1e-12);
        for f in ["config.toml", "diagnostics.csv", "probes.csv", "probes_vacuum.csv", "checkpoint.mxsp"] {
            assert!(tmp.path().join(f).exists(), "{f}");
        }
        assert_eq!(s.files.iter().filter(|f| f.starts_with("snap_")).count(), 3);
        let diag = std::fs::read_to_string(tmp.path().join(DIAGNOSTICS_FILE)).unwrap();
        assert_eq!(diag.lines().count(), 1 + 9);
        let probes = std::fs::read_to_string(tmp.path().join(PROBES_FILE)).unwrap();
        assert!(probes.starts_with("time,a.Ex,a.Ey"));
        let manifest = std::fs::read_to_string(tmp.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(manifest.lines().count(), s.files.len());
        assert_eq!(manifest.lines().next().unwrap().len(), 64 + 2 + "config.toml".len());
    }

    #[test]
    fn resume_reproduces_the_full_run() {
        for scheme in ["split-induction", "leapfrog-modified"] {
            let full = tempfile::tempdir().unwrap();
            let part = tempfile::tempdir().unwrap();
            let extra = format!("scheme = \"{scheme}\"\nsnapshot_every = 20\nprobe_every = 10");
            simulate(&config(full.path(), &extra), None).unwrap();
            let mut cfg = config(part.path(), &extra);
            cfg.run.steps = 20;
            simulate(&cfg, None).unwrap();
            cfg.run.steps = 40;
            simulate(&cfg, Some(&part.path().join(CHECKPOINT_FILE))).unwrap();
            let a = Snapshot::load(&full.path().join(CHECKPOINT_FILE)).unwrap();
            let b = Snapshot::load(&part.path().join(CHECKPOINT_FILE)).unwrap();
            assert_eq!(a, b, "{scheme}");
        }
    }

    #[test]
    fn overrides_are_validated() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = config(tmp.path(), "");
        let o = Overrides {
            probe_every: Some(0),
            ..Default::default()
        };
        assert!(matches!(o.apply(&mut cfg), Err(Error::ConfigValidation(_))));
    }
}
