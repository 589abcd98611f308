//! Command-line front end: `bgnn synth | train | eval | bench`.
//!
//! Exit codes: 0 on success, 2 for usage, configuration or input errors,
//! 3 for runtime and numeric failures.

pub mod args;
pub mod commands;
pub mod config;

use std::ffi::OsString;

use bgnn_core::BgnnError;
use clap::{CommandFactory, FromArgMatches};

use crate::args::Cli;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input files.
    Usage(String),
    Core(BgnnError),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<BgnnError> for CliError {
    fn from(e: BgnnError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => match e {
                BgnnError::Parse { .. }
                | BgnnError::Validation(_)
                | BgnnError::Shape { .. }
                | BgnnError::Precondition(_) => EXIT_USAGE,
                BgnnError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                    EXIT_USAGE
                }
                BgnnError::Io { .. }
                | BgnnError::NonFinite(_)
                | BgnnError::EmptyBatch(_)
                | BgnnError::BudgetExceeded { .. } => EXIT_RUNTIME,
            },
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    // a second call (tests run several commands in one process) is harmless
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .parse_default_env()
        .try_init();
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Errors are printed to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return EXIT_USAGE;
        }
    };
    init_logging(cli.verbose);
    match commands::dispatch(&cli, &matches) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
