//! `orbitmeter` command-line driver.
//!
//! Exit status: 0 on success, 1 on input or configuration errors, 2 when a
//! run completes but its checks fail (or `--verify` finds a mismatch).

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "orbitmeter", version, about = "Visit frequencies, orbit measures and historic behavior")]
struct Cli {
    /// JSON configuration for the subcommand; missing keys take defaults.
    #[arg(long, global = true, env = "ORBITMETER_CONFIG")]
    config: Option<PathBuf>,

    /// Seed for every random draw of the run.
    #[arg(long, global = true, env = "ORBITMETER_SEED", default_value_t = 1)]
    seed: u64,

    /// Output directory for artifacts and the run manifest.
    #[arg(long, global = true, env = "ORBITMETER_OUT", default_value = "orbitmeter-out")]
    out: PathBuf,

    /// Artifact formats to write.
    #[arg(long, global = true, env = "ORBITMETER_EMIT", value_delimiter = ',', default_value = "csv,json")]
    emit: Vec<Format>,

    /// Check the manifest in `--out` against the files on disk and a replay.
    #[arg(long, global = true)]
    verify: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Build a wild historic prefix and check its checkpoint bounds.
    WildOrbit,
    /// Visit-frequency or time-average traces of a stored orbit.
    Trace,
    /// Cylinder estimates of the orbit measure.
    Eta,
    /// Sojourn model of an attracting heteroclinic cycle.
    Bowen,
    /// Monte Carlo check of the ergodic decomposition.
    Decompose,
    /// Physicality verdicts for a Markov mixture.
    Physical,
    /// Higher-order Cesaro and Holder means.
    Cesaro,
    /// Base-b and continued-fraction codings of a wild prefix.
    Nonnormal,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::WildOrbit => "wild-orbit",
            Command::Trace => "trace",
            Command::Eta => "eta",
            Command::Bowen => "bowen",
            Command::Decompose => "decompose",
            Command::Physical => "physical",
            Command::Cesaro => "cesaro",
            Command::Nonnormal => "nonnormal",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            Command::WildOrbit,
            Command::Trace,
            Command::Eta,
            Command::Bowen,
            Command::Decompose,
            Command::Physical,
            Command::Cesaro,
            Command::Nonnormal,
        ]
        .into_iter()
        .find(|c| c.name() == name)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("orbitmeter: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    if cli.verify {
        return manifest::verify(&cli.out);
    }
    let Some(command) = cli.command else {
        return Err(CliError::Usage("a subcommand is required unless --verify is given".into()));
    };
    let raw = match &cli.config {
        Some(path) => commands::read_json(path)?,
        None => serde_json::Value::Object(Default::default()),
    };
    let outcome = commands::run(command, raw, cli.seed, &cli.emit)?;
    manifest::write_run(&cli.out, command, cli.seed, &cli.emit, &outcome)?;
    println!("{}", outcome.summary);
    if outcome.passed {
        Ok(())
    } else {
        Err(CliError::Verdict(format!("{} checks failed; see {}", command.name(), cli.out.display())))
    }
}
