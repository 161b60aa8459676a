use std::path::Path;
use std::process::{Command, Output};

fn maxsplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxsplit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, extra_run: &str) -> String {
    let text = format!(
        r#"[grid]
n = [256]
dr = [0.125]

[[medium.resonance]]
omega = 8.0
gamma = 0.0
regions = [{{ shape = "slab", axis = "x", from = 16.0, to = 17.0, omega_p = 4.0 }}]

[pulse]
k0 = [6.283185307179586]
kappa = 1.0
center = [10.0]

[absorber]
faces = ["x-", "x+"]
depth = 4.0

[run]
dt = 0.02
steps = 1500
probe_every = 2
calibration = true
{extra_run}

[output]
dir = "{}"
probes = [{{ name = "incident", point = [13.0] }}, {{ name = "transmitted", point = [20.0] }}]
"#,
        dir.join("out").display()
    );
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn simulate_then_spectra() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let out = maxsplit(&["simulate", &cfg, "--snapshot-every", "750"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = tmp.path().join("out");
    for f in ["diagnostics.csv", "probes.csv", "probes_vacuum.csv", "snap_00000750.mxsp", "manifest.txt"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let out = maxsplit(&["spectra", run.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(run.join("spectra.csv")).unwrap();
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        // Lossless resonance at omega = 8 rings past the end of the run.
        if v[0] < 7.0 {
            assert!((v[3] - 1.0).abs() < 0.08, "R + T = {} at omega {}", v[3], v[0]);
            rows += 1;
        }
    }
    assert!(rows > 5);
}

#[test]
fn resume_matches_uninterrupted_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg_a = write_config(a.path(), "snapshot_every = 100");
    let cfg_b = write_config(b.path(), "snapshot_every = 100");
    assert!(maxsplit(&["simulate", &cfg_a]).status.success());
    let snap = b.path().join("out").join("snap_00000200.mxsp");
    // Produce the intermediate snapshot with the same config, then resume from it.
    assert!(maxsplit(&["simulate", &cfg_b]).status.success());
    let partial = b.path().join("resumed");
    let out = maxsplit(&[
        "simulate",
        &cfg_b,
        "--resume",
        snap.to_str().unwrap(),
        "--out",
        partial.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let full = std::fs::read(a.path().join("out/checkpoint.mxsp")).unwrap();
    let resumed = std::fs::read(partial.join("checkpoint.mxsp")).unwrap();
    assert_eq!(full, resumed);
}

#[test]
fn bad_config_exits_with_one_and_lists_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    std::fs::write(
        &path,
        "[grid]\nn = [64]\ndr = [-1.0]\n[pulse]\nk0 = [1.0]\nkappa = 0.5\ncenter = [1.0]\n[run]\ndt = 0.0\nsteps = 1\n",
    )
    .unwrap();
    let out = maxsplit(&["simulate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("grid.dr") && err.contains("run.dt"), "{err}");

    std::fs::write(&path, "[grid\n").unwrap();
    let out = maxsplit(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn missing_config_is_an_io_error() {
    let out = maxsplit(&["check", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn check_and_pulse_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    let out = maxsplit(&["check", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("omega_max*dt") && text.contains("absorber"), "{text}");

    let pdir = tmp.path().join("pulse");
    let out = maxsplit(&["pulse", &cfg, "--out", pdir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(pdir.join("pulse.mxsp").exists());
    let spec = std::fs::read_to_string(pdir.join("pulse_spectrum.csv")).unwrap();
    assert!(spec.starts_with("k,amplitude"));
}
