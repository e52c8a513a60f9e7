use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, ValueEnum};

use xcavity::parallel::configure_from_env;
use xcavity_cli::{diagnostic, exit_code, run, Overrides, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    Parratt,
    Matrix,
    Greens,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FitArg {
    F0,
    Dipole,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BenchmarkArg {
    Parratt,
    Matrix,
    Greens,
}

/// X-ray reflectivity, fields and fluorescence of planar thin-film
/// cavities with a resonant atomic layer.
///
/// Without --config the built-in Pt/C/WSi2/C/Pt cavity and default run
/// settings are used. XCAVITY_THREADS caps the worker count.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
#[command(group(ArgGroup::new("scan").args(["map", "rocking", "spectrum"])))]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    #[arg(long, value_enum)]
    solver: Option<SolverArg>,

    /// Energy by angle-offset map.
    #[arg(long)]
    map: bool,

    /// θ-2θ rocking curve at a fixed energy.
    #[arg(long)]
    rocking: bool,

    /// Photon energy of the rocking curve in eV.
    #[arg(long, value_name = "EV", requires = "rocking")]
    energy: Option<f64>,

    /// Energy spectrum at this angle offset from θ_ref, in degrees.
    #[arg(long, value_name = "ANGLE_OFFSET", allow_negative_numbers = true)]
    spectrum: Option<f64>,

    /// Fit a resonance parameter before scanning (repeatable).
    #[arg(long, value_enum)]
    fit: Vec<FitArg>,

    /// Solver that provides the fit target.
    #[arg(long, value_enum)]
    benchmark: Option<BenchmarkArg>,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Sublayers of the Green's-function model.
    #[arg(long, value_name = "N")]
    sublayers: Option<usize>,

    /// Also write the depth profile of the field (and a field map in map mode).
    #[arg(long)]
    field_profile: bool,

    /// Also write fluorescence (map or spectrum mode).
    #[arg(long)]
    fluorescence: bool,
}

fn overrides(cli: &Cli) -> Overrides {
    let lower = |s: &dyn std::fmt::Debug| format!("{s:?}").to_lowercase();
    let mode = if cli.map {
        Some("map")
    } else if cli.rocking {
        Some("rocking")
    } else if cli.spectrum.is_some() {
        Some("spectrum")
    } else {
        None
    };
    Overrides {
        solver: cli.solver.map(|s| lower(&s)),
        mode: mode.map(str::to_string),
        energy: cli.energy,
        spectrum_offset: cli.spectrum,
        fit: cli.fit.iter().map(|f| lower(f)).collect(),
        benchmark: cli.benchmark.map(|b| lower(&b)),
        out: cli.out.clone(),
        sublayers: cli.sublayers,
        field_profile: cli.field_profile,
        fluorescence: cli.fluorescence,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_from_env()
        .and_then(|_| RunConfig::load(cli.config.as_deref(), &overrides(&cli)))
        .and_then(|config| run(&config));
    match result {
        Ok(report) => {
            for p in &report.outputs {
                println!("{}", p.display());
            }
            println!("{}", report.manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("{}", diagnostic(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
