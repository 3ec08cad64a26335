use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use recomb_lab::{init_threads, runner, suite, Config, EXIT_FAILED, EXIT_OK, EXIT_USAGE};

/// Experiments on recombination dynamics and reversible quadratic systems.
#[derive(Parser)]
#[command(name = "recomb-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments of a JSON config and write CSV/JSON artifacts.
    Run {
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "recomb-out")]
        out: PathBuf,
    },
    /// Run the acceptance checks and print a pass/fail table.
    ReproduceAll {
        /// Check number, name or tag (e.g. `kappa`, `ising`, `3`).
        #[arg(long)]
        filter: Option<String>,
        /// Write per-check CSV tables and a summary here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return code(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return code(e.exit_code());
    }
    match cli.command {
        Command::Run { config, out } => {
            let config = match Config::from_path(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return code(e.exit_code());
                }
            };
            match runner::run(&config, &out) {
                Ok(report) => {
                    print!("{}", runner::describe(&report));
                    if !report.passed() {
                        eprintln!("some checks failed");
                    }
                    code(report.exit_code())
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    code(e.exit_code())
                }
            }
        }
        Command::ReproduceAll { filter, out, seed } => {
            if suite::select(filter.as_deref()).is_empty() {
                eprintln!("error: no check matches filter {:?}", filter.unwrap_or_default());
                return code(EXIT_USAGE);
            }
            let results = suite::reproduce_all(filter.as_deref(), seed, out.as_deref(), |r| println!("{}", r.line()));
            match results {
                Ok(results) => {
                    println!();
                    print!("{}", suite::summary_table(&results));
                    code(if results.iter().all(|r| r.passed) { EXIT_OK } else { EXIT_FAILED })
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    code(e.exit_code())
                }
            }
        }
    }
}
