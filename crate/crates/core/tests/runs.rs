//! End-to-end runs through `simulate`.

use std::path::Path;

use maxsplit::config::{parse_config, SimConfig};
use maxsplit::simulate::{simulate, snapshot_name, DIAGNOSTICS_FILE, PROBES_FILE};
use maxsplit::snapshot::Snapshot;
use maxsplit::spectra::{spectra_from_run, ProbeTable};

fn vacuum_config(dir: &Path, run: &str) -> SimConfig {
    let text = format!(
        r#"
[grid]
n = [512]
dr = [0.1]

[pulse]
k0 = [6.283185307179586]
kappa = 0.5
center = [15.0]

[run]
dt = 0.02
{run}

[output]
dir = "{}"
probes = [{{ name = "incident", point = [20.0] }}, {{ name = "transmitted", point = [30.0] }}]
"#,
        dir.display()
    );
    parse_config(&text).unwrap()
}

#[test]
fn zero_steps_write_the_initial_state_and_one_row() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(&vacuum_config(tmp.path(), "steps = 0"), None).unwrap();
    let diag = std::fs::read_to_string(tmp.path().join(DIAGNOSTICS_FILE)).unwrap();
    assert_eq!(diag.lines().count(), 2, "{diag}");
    let snap = Snapshot::load(&tmp.path().join(snapshot_name(0))).unwrap();
    assert_eq!(snap.time, 0.0);
    assert!(snap.components.iter().any(|c| c.iter().any(|&x| x != 0.0)));
}

#[test]
fn identical_runs_are_byte_identical() {
    let run = "steps = 300\nprobe_every = 7\nscheme = \"leapfrog-modified\"";
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    simulate(&vacuum_config(a.path(), run), None).unwrap();
    simulate(&vacuum_config(b.path(), run), None).unwrap();
    for file in [DIAGNOSTICS_FILE, PROBES_FILE] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert!(x == y, "{file} differs");
    }
}

#[test]
fn probe_peak_arrives_after_the_transit_time() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(&vacuum_config(tmp.path(), "steps = 1000"), None).unwrap();
    let table = ProbeTable::load(&tmp.path().join(PROBES_FILE)).unwrap();
    let expected = 30.0 - 15.0;
    // Probe energy peaks within one step of the transit time.
    let energy: Vec<f64> = (0..table.time.len())
        .map(|k| {
            ["Ex", "Ey", "Ez", "Hx", "Hy", "Hz"]
                .iter()
                .map(|l| table.column(&format!("transmitted.{l}")).unwrap()[k].powi(2))
                .sum()
        })
        .collect();
    let j = (0..energy.len()).max_by(|&a, &b| energy[a].total_cmp(&energy[b])).unwrap();
    assert!((table.time[j] - expected).abs() <= 0.02 + 1e-9, "energy peak at {}", table.time[j]);
}

#[test]
fn vacuum_calibration_gives_unit_transmission() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(&vacuum_config(tmp.path(), "steps = 1000\ncalibration = true"), None).unwrap();
    let rows = spectra_from_run(tmp.path()).unwrap();
    assert!(rows.len() > 10);
    for r in &rows {
        assert!((r.transmittance.sqrt() - 1.0).abs() < 1e-3, "{r:?}");
        assert!(r.reflectance < 1e-6, "{r:?}");
    }
}
