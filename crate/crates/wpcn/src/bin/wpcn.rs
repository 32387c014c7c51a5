//! Command-line front end for the experiment runner.
//!
//! Exit codes: 0 on success, 2 on config/spec errors, 3 on runtime errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wpcn::experiment::{self, RunOptions};

#[derive(Parser)]
#[command(name = "wpcn", version, about = "WPCN sum-throughput experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment spec file and write its CSV.
    Run {
        /// Path to the JSON experiment spec.
        spec: PathBuf,
        /// Directory the CSV is written into.
        #[arg(long, default_value = ".")]
        output: PathBuf,
        /// Worker threads for Monte-Carlo trials (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the registered solver strategies.
    Solvers,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            spec,
            output,
            threads,
            seed,
        } => {
            let opts = RunOptions {
                output_dir: Some(output),
                threads,
                seed,
            };
            match experiment::run(&spec, &opts) {
                Ok(path) => {
                    println!("wrote {}", path.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Solvers => {
            for name in wpcn::solver::available() {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
    }
}
