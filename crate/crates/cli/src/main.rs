//! `qtopo`: spectra, topology, dimension, distances, rotor dynamics and
//! measurements from the command line.

mod commands;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qtopo_core::Error;

#[derive(Debug)]
pub enum CliError {
    /// Bad input; exit code 2.
    Validation(String),
    /// The numerics failed; exit code 3.
    Numerical(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Validation(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::RootScanExhausted { .. }
            | Error::ToleranceFailure(_)
            | Error::AmbiguousClassification(_)
            | Error::DegenerateFit { .. }
            | Error::LinearSolveFailure(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qtopo", version, about = "Configuration-space topology, dimension and metric from quantum spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues and eigenfunctions of the Laplacian on two intervals.
    Spectrum(commands::SpectrumArgs),
    /// Classify the topology selected by a boundary unitary.
    Reconstruct(commands::ReconstructArgs),
    /// Fit a dimension to eigenvalue growth.
    Dimension(commands::DimensionArgs),
    /// Spectral distances for a finite Hamiltonian.
    Distance(commands::DistanceArgs),
    /// Evolve the particle coupled to a dynamical boundary condition.
    Evolve(commands::EvolveArgs),
    /// Sequential measurement probabilities for two observables.
    Measure(commands::MeasureArgs),
    /// Run quick end-to-end checks.
    Selftest,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("QTOPO_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Validation(format!("QTOPO_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Spectrum(a) => commands::spectrum(a),
        Command::Reconstruct(a) => commands::reconstruct(a),
        Command::Dimension(a) => commands::dimension(a),
        Command::Distance(a) => commands::distance(a),
        Command::Evolve(a) => commands::evolve(a),
        Command::Measure(a) => commands::measure(a),
        Command::Selftest => commands::selftest(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, msg) = match &e {
                CliError::Validation(m) => ("invalid input", m),
                CliError::Numerical(m) => ("numerical failure", m),
            };
            eprintln!("qtopo: {kind}: {msg}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub(crate) fn read_text(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
