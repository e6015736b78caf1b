use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tdomino_core::analysis::{read_archive_csv, write_archive_csv};
use tdomino_core::config::{parse_config, ConfigOverrides};
use tdomino_core::harness::run_experiment;
use tdomino_core::Error;

#[derive(Parser)]
#[command(name = "tdomino", version, about = "Multi-objective MAP-Elites experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every replicate of an experiment and export the results.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        algo: Option<String>,
        #[arg(long)]
        gens: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute static scores for an exported archive and print it as CSV.
    Score {
        #[arg(long)]
        archive: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            problem,
            algo,
            gens,
            reps,
            seed,
            out,
        } => {
            let text = match config.as_ref().map(fs::read_to_string).transpose() {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.unwrap().display());
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let overrides = ConfigOverrides {
                problem,
                algo,
                gens,
                reps,
                seed,
                out,
            };
            let cfg = match parse_config(text.as_deref(), &overrides) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            match run_experiment(&cfg) {
                Ok(summary) => {
                    for r in &summary.replicates {
                        println!("rep{} seed={} {}", r.rep, r.seed, r.status);
                    }
                    ExitCode::from(summary.exit_code() as u8)
                }
                Err(e @ Error::Config(_)) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_CONFIG)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Score { archive } => {
            let file = match fs::File::open(&archive) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("error: cannot open {}: {e}", archive.display());
                    return ExitCode::FAILURE;
                }
            };
            let mut table = match read_archive_csv(file) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {}: {e}", archive.display());
                    return ExitCode::FAILURE;
                }
            };
            table.rescore();
            if let Err(e) = write_archive_csv(&table, io::stdout().lock()) {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
            ExitCode::SUCCESS
        }
    }
}
