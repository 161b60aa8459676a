use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use maxsplit::config::{load_config, SimConfig};
use maxsplit::diagnostics::{StabilityReport, WARN_ABSORBER};
use maxsplit::pulse::pulse_spectrum;
use maxsplit::simulate::{check, simulate, Overrides};
use maxsplit::snapshot::save_snapshot;
use maxsplit::spectra::{spectra_csv, spectra_from_run, SPECTRA_FILE};
use maxsplit::{Error, Result, Scheme};

#[derive(Parser)]
#[command(name = "maxsplit", version, about = "Pseudospectral time-domain Maxwell solver for dispersive media")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a TOML config.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        scheme: Option<Scheme>,
        #[arg(long)]
        snapshot_every: Option<usize>,
        #[arg(long)]
        probe_every: Option<usize>,
        /// Output directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue from a checkpoint or snapshot of an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Write the initial pulse and its radial spectrum.
    Pulse {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the stability and absorber numbers of a config.
    Check { config: PathBuf },
    /// Reflection and transmission spectra of a calibrated run directory.
    Spectra {
        run_dir: PathBuf,
        /// Output file; defaults to spectra.csv inside the run directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn print_report(report: &StabilityReport) {
    for c in &report.checks {
        let mark = if c.ok { "ok  " } else { "WARN" };
        println!("{mark} {:<48} {:>12.5e}  (limit {:.5e})", c.name, c.value, c.limit);
    }
    println!("warn_flags = {}", report.flags);
}

fn pulse(cfg: &SimConfig, out: &Path) -> Result<()> {
    create_dir(out)?;
    let grid = cfg.build_grid()?;
    let (e, h) = cfg.build_initial_fields(&grid)?;
    let comps: Vec<&[f64]> = e.comp.iter().chain(h.comp.iter()).map(Vec::as_slice).collect();
    save_snapshot(&out.join("pulse.mxsp"), &grid, 0.0, &comps)?;
    let mut csv = String::from("k,amplitude\n");
    for b in pulse_spectrum(&e, &h, &grid) {
        writeln!(csv, "{:.17e},{:.17e}", b.k, b.amplitude).expect("write to String");
    }
    write_file(&out.join("pulse_spectrum.csv"), &csv)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            scheme,
            snapshot_every,
            probe_every,
            out,
            resume,
        } => {
            let mut cfg = load_config(&config)?;
            Overrides {
                scheme,
                snapshot_every,
                probe_every,
                out_dir: out,
            }
            .apply(&mut cfg)?;
            let summary = simulate(&cfg, resume.as_deref())?;
            println!(
                "steps {}..{} done, t = {:.6}, outputs in {}",
                summary.start_step,
                summary.end_step,
                summary.final_time,
                summary.out_dir.display()
            );
            if summary.stability.flags != 0 {
                println!("warn_flags = {} (see diagnostics.csv)", summary.stability.flags);
            }
            Ok(())
        }
        Command::Pulse { config, out } => {
            let cfg = load_config(&config)?;
            let out = out.unwrap_or_else(|| cfg.output.dir.clone());
            pulse(&cfg, &out)?;
            info!("pulse written to {}", out.display());
            Ok(())
        }
        Command::Check { config } => {
            let cfg = load_config(&config)?;
            let report = check(&cfg)?;
            print_report(&report);
            if report.flags & WARN_ABSORBER != 0 {
                println!("absorber conductivity lies outside its design window");
            }
            Ok(())
        }
        Command::Spectra { run_dir, out } => {
            let rows = spectra_from_run(&run_dir)?;
            let out = out.unwrap_or_else(|| run_dir.join(SPECTRA_FILE));
            write_file(&out, &spectra_csv(&rows))?;
            println!("{} frequencies written to {}", rows.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                Error::ConfigValidation(errs) => {
                    eprintln!("error: invalid config");
                    for m in errs {
                        eprintln!("  {m}");
                    }
                }
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
