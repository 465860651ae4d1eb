//! `quantsym`: configuration-driven runs of the verification suites and
//! stability experiments, writing CSV files.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Profile;
use crate::config::{split_pair, ConfigBuilder, RunConfig, KEY_HELP};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "quantsym", version, about = "Quantitative symmetry verification runs", after_help = KEY_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Config file of key=value lines.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (key `out`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (key `jobs`).
    #[arg(long, global = true, value_name = "K")]
    jobs: Option<usize>,
    /// Write u and h as x,y,value CSV (key `dump_fields`).
    #[arg(long, global = true)]
    dump_fields: bool,
    /// Dimension (key `N`).
    #[arg(long = "N", global = true, value_name = "N")]
    dim: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form constants, plus domain constants of the family when N = 2.
    Constants(Overrides),
    /// Bounds on the standard cones and oscillation bounds on the domain catalog.
    ConeVerify(Overrides),
    /// Integral identities and inequality chains on each family member.
    DomainVerify(Overrides),
    /// Soap-bubble stability profile of the family.
    SbtRun(Overrides),
    /// Serrin stability profile of the family.
    SerrinRun(Overrides),
    /// Summary of the CSV files found in the output directory.
    Report(Overrides),
}

#[derive(Debug, clap::Args)]
struct Overrides {
    /// key=value pairs applied after the config file.
    #[arg(value_name = "KEY=VALUE")]
    pairs: Vec<String>,
}

impl Command {
    fn overrides(&self) -> &[String] {
        match self {
            Command::Constants(o)
            | Command::ConeVerify(o)
            | Command::DomainVerify(o)
            | Command::SbtRun(o)
            | Command::SerrinRun(o)
            | Command::Report(o) => &o.pairs,
        }
    }
}

/// Defaults, then the config file, then trailing pairs, then flags.
fn parse_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut builder = ConfigBuilder::new();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        builder.apply_text(&text)?;
    }
    for pair in cli.command.overrides() {
        let (k, v) = split_pair(pair)?;
        builder.set(&k, &v)?;
    }
    if let Some(out) = &cli.out {
        builder.set("out", &out.to_string_lossy())?;
    }
    if let Some(jobs) = cli.jobs {
        builder.set("jobs", &jobs.to_string())?;
    }
    if cli.dump_fields {
        builder.set("dump_fields", "true")?;
    }
    if let Some(n) = cli.dim {
        builder.set("N", &n.to_string())?;
    }
    builder.build()
}

fn execute(command: &Command, cfg: &RunConfig) -> Result<bool, CliError> {
    if let Some(jobs) = cfg.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
    }
    match command {
        Command::Constants(_) => commands::constants(cfg),
        Command::ConeVerify(_) => commands::cone_verify(cfg),
        Command::DomainVerify(_) => commands::domain_verify(cfg),
        Command::SbtRun(_) => commands::stability(cfg, Profile::Sbt),
        Command::SerrinRun(_) => commands::stability(cfg, Profile::Serrin),
        Command::Report(_) => commands::report(cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = parse_config(&cli).and_then(|cfg| execute(&cli.command, &cfg));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
