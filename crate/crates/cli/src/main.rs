use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use phyauth_cli::{format_diagnostics, run_file, validate_file, RunOptions};

#[derive(Parser)]
#[command(name = "phyauth", version, about = "Room-scale channel authentication experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write sweep.csv, calibration.csv and summary.txt.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, seed, threads } => {
            run_file(&config, &out, &RunOptions { seed, threads }).map(|files| {
                for f in files {
                    println!("wrote {}", f.display());
                }
            })
        }
        Command::Validate { config } => match validate_file(&config) {
            Ok(diags) if diags.is_empty() => {
                println!("{}: ok", config.display());
                Ok(())
            }
            Ok(diags) => {
                eprintln!("{}:\n{}", config.display(), format_diagnostics(&diags));
                return ExitCode::from(2);
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
