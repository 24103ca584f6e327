//! `formbound <command> [key=value ...]` runs one experiment and writes a CSV
//! table. `formbound --config FILE [key=value ...]` reads the command and
//! parameters from a file instead.
//!
//! Exit status is 0 when the command's assertions hold, 1 when one fails and
//! 2 for configuration errors.

mod commands;
mod config;
mod error;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use formbound::report::VERSION;

use crate::config::{Command, Config};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "formbound", version, about = "Singular-drift diffusion experiments")]
struct Args {
    /// Read the command and parameters from this file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Command name followed by key=value overrides. With --config, only
    /// overrides.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    args: Vec<String>,
}

fn resolve(args: &Args) -> Result<Config, CliError> {
    match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            Config::from_file_text(&text, &args.args)
        }
        None => {
            let (name, rest) = args.args.split_first().ok_or_else(|| {
                let names: Vec<&str> = <Command as clap::ValueEnum>::value_variants()
                    .iter()
                    .map(|c| c.name())
                    .collect();
                CliError::Config(format!("no command given; expected one of {}", names.join(", ")))
            })?;
            Config::resolve(name.parse()?, rest)
        }
    }
}

fn run(args: &Args) -> Result<Option<String>, CliError> {
    let cfg = resolve(args)?;
    let mut outcome = commands::run(&cfg)?;
    let mut header = vec![format!("formbound {VERSION}")];
    header.extend(cfg.to_file_text().lines().map(str::to_string));
    header.append(&mut outcome.table.comments);
    outcome.table.comments = header;

    match cfg.raw("output") {
        "-" => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            outcome.table.write_to(&mut lock)?;
            lock.flush()?;
        }
        path => {
            let mut w = BufWriter::new(File::create(path)?);
            outcome.table.write_to(&mut w)?;
            w.flush()?;
        }
    }
    Ok(outcome.failure)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(failure)) => {
            eprintln!("assertion failed: {failure}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
