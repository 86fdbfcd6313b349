//! `fw-srde` command-line front end.
//!
//! Exit codes: 0 success, 1 domain error or failed check, 2 non-convergence,
//! 3 I/O error, 64 usage error.

use std::ffi::OsString;
use std::path::Path;

use clap::Parser;
use thiserror::Error;

pub mod args;
mod commands;
pub mod config;
pub mod inputs;
pub mod report;

use args::{Cli, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_NON_CONVERGENCE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Worker-count cap for the parallel ensembles.
pub const THREADS_ENV: &str = "FW_SRDE_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] fw_srde::Error),

    /// Malformed input data, as opposed to a malformed command line.
    #[error("{0}")]
    Input(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(fw_srde::Error::NonConvergence { .. } | fw_srde::Error::Stalled { .. }) => EXIT_NON_CONVERGENCE,
            CliError::Core(_) | CliError::Input(_) => EXIT_DOMAIN,
            CliError::Io { .. } => EXIT_IO,
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("fw-srde: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<i32, CliError> {
    configure_threads()?;
    let (report, out) = commands::dispatch(command)?;
    report.emit(out.as_deref())?;
    if let report::Status::Failed(m) | report::Status::NotConverged(m) = &report.status {
        eprintln!("fw-srde: {m}");
    }
    Ok(report.status.exit_code())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    // Fails only if a pool was already installed in this process, which is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
