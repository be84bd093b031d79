//! `klpukf` command-line front end.
//!
//! Exit codes: 0 on success, 1 on numerical or I/O failure, 2 on usage or
//! configuration errors.

mod args;
mod commands;
mod config;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use config::RunConfig;
use output::{Format, Table};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(klpukf::FilterError),
    Io(io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(e) => write!(f, "numerical error: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<klpukf::FilterError> for CliError {
    fn from(e: klpukf::FilterError) -> Self {
        CliError::Numerical(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 1,
        }
    }
}

fn emit(table: &Table, format: Format, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            table.write(format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            table.write(format, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (args, limits) = match &cli.command {
        Command::Example1(a) | Command::Example2(a) | Command::Example3(a) => (a, None),
        Command::Sweep(s) => (&s.run, s.limits.clone()),
    };
    let cfg = RunConfig::resolve(args, limits)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot configure {n} threads: {e}")))?;
    }
    let report = match cli.command {
        Command::Example1(_) => commands::example1(&cfg)?,
        Command::Example2(_) => commands::example2(&cfg)?,
        Command::Example3(_) => commands::example3(&cfg)?,
        Command::Sweep(_) => commands::sweep(&cfg)?,
    };
    emit(&report.table, cfg.format, cfg.out.as_deref())?;
    if let (Some(plot), Some(path)) = (&report.plot, &cfg.plot_out) {
        emit(plot, cfg.format, Some(path))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("klpukf: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
