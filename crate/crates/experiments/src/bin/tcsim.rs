use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tavis_experiments::catalog::SAMPLES;
use tavis_experiments::output::OUTPUT_DIR_ENV;
use tavis_experiments::{run_and_write, ExperimentConfig, RunError};

/// Tavis-Cummings two-cavity experiment runner.
#[derive(Parser)]
#[command(version, about, after_help = format!("The output directory can be overridden with {OUTPUT_DIR_ENV}."))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV and JSON files.
    Run { config: PathBuf },
    /// List the experiment kinds and their sample configurations.
    List {
        /// Print the sample configuration of this kind.
        #[arg(long)]
        show: Option<String>,
    },
    /// Check a configuration without running it.
    Validate { config: PathBuf },
}

fn execute(command: Command) -> Result<(), RunError> {
    match command {
        Command::Run { config } => {
            let parsed = ExperimentConfig::load(&config)?;
            let dir = run_and_write(&parsed)?;
            println!("{} -> {}", parsed.kind.name(), dir.display());
        }
        Command::Validate { config } => {
            ExperimentConfig::load(&config)?.validate()?;
            println!("{}: ok", config.display());
        }
        Command::List { show: Some(name) } => {
            let sample = SAMPLES
                .iter()
                .find(|s| s.kind.name() == name)
                .ok_or_else(|| RunError::Config(format!("unknown experiment kind `{name}`")))?;
            print!("{}", sample.text);
        }
        Command::List { show: None } => {
            for s in &SAMPLES {
                println!(
                    "{:<22} {:<28} {}",
                    s.kind.name(),
                    s.file_name,
                    s.kind.description()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
