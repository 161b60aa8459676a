//! Reflection and transmission spectra from probe time series.
//!
//! A run with `calibration = true` and probes named `incident` (between the
//! source and the sample) and `transmitted` (behind it) has everything needed:
//!
//! - `R(w)^2 = |F[inc - inc_vac]|^2 / |F[inc_vac]|^2`
//! - `T(w)^2 = |F[trans]|^2 / |F[trans_vac]|^2`
//!
//! where `_vac` series come from the run without resonances. Frequencies
//! where the incident power is more than 20 dB below its peak are dropped.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::simulate::{FIELD_LABELS, PROBES_FILE, VACUUM_PROBES_FILE};

pub const SPECTRA_FILE: &str = "spectra.csv";
pub const INCIDENT_PROBE: &str = "incident";
pub const TRANSMITTED_PROBE: &str = "transmitted";

/// Relative incident power below which a frequency is dropped (-20 dB).
pub const POWER_FLOOR: f64 = 1e-2;

/// A parsed `probes.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeTable {
    pub columns: Vec<String>,
    pub time: Vec<f64>,
    pub data: Vec<Vec<f64>>,
}

impl ProbeTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Spectra("empty probe table".into()))?;
        let mut cols = header.split(',');
        if cols.next() != Some("time") {
            return Err(Error::Spectra("probe table must start with a time column".into()));
        }
        let columns: Vec<String> = cols.map(str::to_string).collect();
        let mut time = Vec::new();
        let mut data = vec![Vec::new(); columns.len()];
        for (ln, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(str::parse::<f64>).collect();
            let vals = vals.map_err(|e| Error::Spectra(format!("line {}: {e}", ln + 2)))?;
            if vals.len() != columns.len() + 1 {
                return Err(Error::Spectra(format!(
                    "line {}: {} values, expected {}",
                    ln + 2,
                    vals.len(),
                    columns.len() + 1
                )));
            }
            time.push(vals[0]);
            for (d, v) in data.iter_mut().zip(&vals[1..]) {
                d.push(*v);
            }
        }
        Ok(ProbeTable { columns, time, data })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|i| self.data[i].as_slice())
            .ok_or_else(|| Error::Spectra(format!("no column {name:?} in probe table")))
    }

    /// Electric component of `probe` with the most energy.
    pub fn dominant_component(&self, probe: &str) -> Result<&'static str> {
        let mut best = (FIELD_LABELS[0], -1.0);
        for l in &FIELD_LABELS[..3] {
            let s: f64 = self.column(&format!("{probe}.{l}"))?.iter().map(|x| x * x).sum();
            if s > best.1 {
                best = (l, s);
            }
        }
        Ok(best.0)
    }

    /// Sample spacing; rows after the first irregular spacing are ignored.
    fn uniform_len(&self) -> Result<(f64, usize)> {
        if self.time.len() < 4 {
            return Err(Error::Spectra("need at least 4 probe samples".into()));
        }
        let dt = self.time[1] - self.time[0];
        let tol = 1e-6 * dt.abs();
        let n = 1 + self
            .time
            .windows(2)
            .take_while(|w| ((w[1] - w[0]) - dt).abs() <= tol)
            .count();
        Ok((dt, n))
    }
}

/// One row of `spectra.csv`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumRow {
    pub omega: f64,
    pub reflectance: f64,
    pub transmittance: f64,
}

fn power_spectrum(x: &[f64], n_pad: usize, planner: &mut FftPlanner<f64>) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    buf.resize(n_pad, Complex::new(0.0, 0.0));
    planner.plan_fft_forward(n_pad).process(&mut buf);
    buf.truncate(n_pad / 2 + 1);
    buf
}

/// `|R|^2` and `|T|^2` from equal-length, uniformly sampled series.
pub fn analyze_spectra(
    dt: f64,
    incident: &[f64],
    incident_vacuum: &[f64],
    transmitted: &[f64],
    transmitted_vacuum: &[f64],
) -> Result<Vec<SpectrumRow>> {
    let n = incident.len();
    if [incident_vacuum.len(), transmitted.len(), transmitted_vacuum.len()]
        .iter()
        .any(|&m| m != n)
    {
        return Err(Error::Spectra("probe series differ in length".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Spectra(format!("probe spacing must be positive, got {dt}")));
    }
    let n_pad = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::new();
    let reflected: Vec<f64> = incident.iter().zip(incident_vacuum).map(|(a, b)| a - b).collect();
    let inc = power_spectrum(incident_vacuum, n_pad, &mut planner);
    let refl = power_spectrum(&reflected, n_pad, &mut planner);
    let tr = power_spectrum(transmitted, n_pad, &mut planner);
    let tr_vac = power_spectrum(transmitted_vacuum, n_pad, &mut planner);
    let peak = inc.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let peak_t = tr_vac.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::Spectra("incident vacuum series is identically zero".into()));
    }
    let dw = std::f64::consts::TAU / (n_pad as f64 * dt);
    Ok((0..inc.len())
        .filter(|&j| inc[j].norm_sqr() >= POWER_FLOOR * peak && tr_vac[j].norm_sqr() >= POWER_FLOOR * peak_t)
        .map(|j| SpectrumRow {
            omega: j as f64 * dw,
            reflectance: refl[j].norm_sqr() / inc[j].norm_sqr(),
            transmittance: tr[j].norm_sqr() / tr_vac[j].norm_sqr(),
        })
        .collect())
}

/// Spectra of a calibrated run directory.
pub fn spectra_from_run(dir: &Path) -> Result<Vec<SpectrumRow>> {
    let run = ProbeTable::load(&dir.join(PROBES_FILE))?;
    let vac_path = dir.join(VACUUM_PROBES_FILE);
    if !vac_path.exists() {
        return Err(Error::Spectra(format!(
            "{} is missing; rerun with run.calibration = true",
            vac_path.display()
        )));
    }
    let vac = ProbeTable::load(&vac_path)?;
    let comp = vac.dominant_component(INCIDENT_PROBE)?;
    let (dt, n1) = run.uniform_len()?;
    let (_, n2) = vac.uniform_len()?;
    let n = n1.min(n2);
    let col = |t: &ProbeTable, p: &str| -> Result<Vec<f64>> { Ok(t.column(&format!("{p}.{comp}"))?[..n].to_vec()) };
    analyze_spectra(
        dt,
        &col(&run, INCIDENT_PROBE)?,
        &col(&vac, INCIDENT_PROBE)?,
        &col(&run, TRANSMITTED_PROBE)?,
        &col(&vac, TRANSMITTED_PROBE)?,
    )
}

pub fn spectra_csv(rows: &[SpectrumRow]) -> String {
    let mut s = String::from("omega,reflectance,transmittance,sum\n");
    for r in rows {
        writeln!(
            s,
            "{:.17e},{:.17e},{:.17e},{:.17e}",
            r.omega,
            r.reflectance,
            r.transmittance,
            r.reflectance + r.transmittance
        )
        .expect("write to String");
    }
    s
}
