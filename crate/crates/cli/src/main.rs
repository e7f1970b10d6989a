//! `coupled-susy`: tables of exactly solvable coupled-channel potentials.
//!
//! Exit status: 0 ok, 2 invalid configuration, 3 verification failure,
//! 4 singular parametrization, 1 anything else.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coupled_susy::models::PresetName;

use crate::config::{Format, Run};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "coupled-susy", version, about = "Exactly solvable coupled-channel potentials and their scattering data")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; overrides `outputs.directory`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Output format; overrides `outputs.formats`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Potential matrix on the r grid.
    Potential,
    /// Eigenphases and mixing angle on the E grid (two channels).
    Smatrix,
    /// Closed forms against the numerical oracle, written as a JSON report.
    Verify,
    /// Bound-state energies below the lowest threshold.
    Boundstates,
    /// Potential and eigenphase tables of a named preset.
    Figdata {
        /// fig1, fig2 or fig3.
        name: String,
    },
}

fn load(cli: &Cli) -> Result<Run, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Validation("--config PATH is required for this command".into()))?;
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        context: format!("reading {}", path.display()),
        source,
    })?;
    config::resolve(&config::parse(&text)?)
}

fn apply_overrides(cli: &Cli, mut run: Run) -> Run {
    if let Some(dir) = &cli.out {
        run.effective.outputs.directory = dir.clone();
    }
    if let Some(format) = cli.format {
        run.effective.outputs.formats = vec![format];
    }
    run
}

fn execute(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let run = match &cli.command {
        Command::Figdata { name } => {
            let name: PresetName = name
                .parse()
                .map_err(|e| CliError::Validation(format!("figdata: {e}")))?;
            let run = match &cli.config {
                Some(_) => load(cli)?,
                None => commands::preset_run(name)?,
            };
            let run = apply_overrides(cli, run);
            let outputs = run.effective.outputs.clone();
            return commands::figdata(name, &run, &outputs.directory, &outputs.formats);
        }
        _ => apply_overrides(cli, load(cli)?),
    };
    let outputs = run.effective.outputs.clone();
    let (dir, formats) = (&outputs.directory, &outputs.formats);
    match cli.command {
        Command::Potential => commands::potential(&run, dir, formats),
        Command::Smatrix => commands::smatrix(&run, dir, formats),
        Command::Verify => commands::verify(&run, dir),
        Command::Boundstates => commands::boundstates(&run, dir, formats),
        Command::Figdata { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(paths) => {
            for path in paths {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
