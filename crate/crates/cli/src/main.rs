//! `pathweight` command line front end.
//!
//! Exit codes: 0 success, 1 numeric check failed, 2 usage, 3 model outside the
//! supported (non-positively curved) domain, 4 I/O.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use config::{CommandKind, Flags};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Numeric(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Model(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<pathweight::Error> for CliError {
    fn from(e: pathweight::Error) -> Self {
        match e {
            pathweight::Error::PositiveCurvature(_) => CliError::Model(e.to_string()),
            pathweight::Error::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pathweight", version, about = "Piecewise-geodesic path densities and their Monte Carlo checks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, clap::Subcommand)]
enum Cmd {
    /// Angles, normalizers and eigenvalues of the flat Gram matrix.
    SpectralTable(Flags),
    /// Finite-mesh coupling constant against its limit.
    TauConvergence(Flags),
    /// Monte Carlo estimate of E[f rho] per mesh size.
    DensityMc(Flags),
    /// End-to-end density on a flat model (must be 1).
    FlatSanity(Flags),
    /// Self-checks of the Jacobi solvers.
    JacobiVerify(Flags),
    /// Statistical checks of the probabilistic bounds.
    AppendixChecks(Flags),
}

impl Cmd {
    fn split(self) -> (CommandKind, Flags) {
        match self {
            Cmd::SpectralTable(f) => (CommandKind::SpectralTable, f),
            Cmd::TauConvergence(f) => (CommandKind::TauConvergence, f),
            Cmd::DensityMc(f) => (CommandKind::DensityMc, f),
            Cmd::FlatSanity(f) => (CommandKind::FlatSanity, f),
            Cmd::JacobiVerify(f) => (CommandKind::JacobiVerify, f),
            Cmd::AppendixChecks(f) => (CommandKind::AppendixChecks, f),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (kind, flags) = cli.command.split();
    let result = config::resolve(kind, flags).and_then(|cfg| commands::run(&cfg));
    match result {
        Ok(o) if o.pass => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("pathweight: numeric check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("pathweight: {e}");
            ExitCode::from(e.code())
        }
    }
}
