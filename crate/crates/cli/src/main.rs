use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use panelcov_cli::{cmd_analyze, cmd_ingest, cmd_report, cmd_simulate, CliError, RunConfig};

/// Coverage-aware panel construction and volatility distortion analysis.
#[derive(Debug, Parser)]
#[command(name = "panelcov", version)]
struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Corpus root (shorthand for `--set corpus=DIR`).
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,

    /// Output directory (shorthand for `--set output=DIR`).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a corpus; write the availability matrix, metadata and ingest report.
    Ingest,
    /// Write a synthetic corpus with ground truth.
    Simulate,
    /// Measure distortion and write records, summaries and figure data.
    Analyze,
    /// Render an analysis directory as markdown.
    Report,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut overrides = cli.set;
    if let Some(dir) = cli.corpus {
        overrides.push(format!("corpus={}", dir.display()));
    }
    if let Some(dir) = cli.output {
        overrides.push(format!("output={}", dir.display()));
    }
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Ingest => cmd_ingest(&cfg),
        Command::Simulate => cmd_simulate(&cfg),
        Command::Analyze => cmd_analyze(&cfg).map(|_| ()),
        Command::Report => cmd_report(&cfg).map(|text| print!("{text}")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("panelcov: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
