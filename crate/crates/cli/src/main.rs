use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use schatten_bench::verify::{self, Suite, VerifyOptions};
use schatten_bench::{plot, run, CliError, CliResult};

#[derive(Parser)]
#[command(name = "schatten-bench", version, about = "Online and batch operator-learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// Run a verification suite and print a pass/fail table.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        /// Trial count for the Monte-Carlo criteria.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render a regret report or rate fit as SVG.
    Plot { report: PathBuf, out: PathBuf },
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("SCHATTEN_BENCH_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("SCHATTEN_BENCH_THREADS: expected a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::config(format!("SCHATTEN_BENCH_THREADS: {e}")))
}

fn dispatch(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Run { config } => {
            for line in run::cmd_run(&config)? {
                println!("{line}");
            }
            Ok(())
        }
        Command::Verify { suite, trials, seed } => {
            let mut opts = VerifyOptions::default();
            opts.trials = trials;
            if let Some(seed) = seed {
                opts.seed = seed;
            }
            if trials.is_some_and(|t| t < 2) {
                return Err(CliError::config("--trials: need at least 2"));
            }
            verify::cmd_verify(suite, &opts)
        }
        Command::Plot { report, out } => plot::cmd_plot(&report, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
