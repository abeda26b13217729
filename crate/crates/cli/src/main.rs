//! `stvs`: space-time regularity statistics and motion estimation.
//!
//! Exit codes: 0 success, 2 data or domain error, 64 usage error.

mod args;
mod commands;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::output::{Manifest, MANIFEST};

pub const EXIT_DATA: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl From<spacetime_stats::Error> for CliError {
    fn from(e: spacetime_stats::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "stvs",
    version,
    about = "Space-time regularity statistics of video and motion estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Histogram, GGD fit and KLD of normalized differences along a trajectory.
    Stats(commands::stats::StatsArgs),
    /// Regularity map of one patch between two frames.
    Regmap(commands::regmap::RegmapArgs),
    /// Dense flow by regularity map, trajectory search or Horn–Schunck.
    Flow(commands::flow::FlowArgs),
    /// Four-step search for the most regular straight path of one patch.
    Trajsearch(commands::trajsearch::TrajsearchArgs),
    /// AE/EE of an estimated `.flo` against ground truth.
    Eval(commands::eval::EvalArgs),
    /// Write a synthetic translating sequence with ground truth.
    Synth(commands::synth::SynthArgs),
    /// Repeat the run recorded in a manifest into a new directory.
    Rerun(RerunArgs),
}

#[derive(Debug, Args)]
struct RerunArgs {
    /// `manifest.json` of an earlier run.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn dispatch(command: &Command, argv: &[String]) -> Result<(), CliError> {
    match command {
        Command::Stats(a) => commands::stats::run(a, argv),
        Command::Regmap(a) => commands::regmap::run(a, argv),
        Command::Flow(a) => commands::flow::run(a, argv),
        Command::Trajsearch(a) => commands::trajsearch::run(a, argv),
        Command::Eval(a) => commands::eval::run(a, argv),
        Command::Synth(a) => commands::synth::run(a, argv),
        Command::Rerun(a) => rerun(a),
    }
}

fn rerun(args: &RerunArgs) -> Result<(), CliError> {
    let old = Manifest::read(&args.manifest)?;
    if old.tool != "stvs" || old.command == "rerun" {
        return Err(CliError::Data(format!(
            "{} is not a manifest of a rerunnable command",
            args.manifest.display()
        )));
    }
    if old.version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "warning: manifest written by version {}, running {}",
            old.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let mut argv = vec!["stvs".to_string()];
    argv.extend(old.argv.iter().cloned());
    argv.push("--out".into());
    argv.push(args.out.display().to_string());
    let cli = Cli::try_parse_from(&argv)
        .map_err(|e| CliError::Data(format!("manifest arguments do not parse: {e}")))?;
    dispatch(&cli.command, &argv[1..])?;
    let new = Manifest::read(&args.out.join(MANIFEST))?;
    if new.inputs != old.inputs {
        return Err(CliError::Data(
            "input files changed since the recorded run".into(),
        ));
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match dispatch(&cli.command, &argv[1..]) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
