use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::Parser;
use faultstab::cli_io::{run_file, RunOptions, Subcommand};
use log::{error, info};

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_THRESHOLD: u8 = 3;

/// Forward modelling and stability experiments for planar faults in an elastic half-space.
#[derive(Debug, Parser)]
#[command(name = "faultstab", version)]
struct Args {
    #[arg(value_parser = PossibleValuesParser::new(Subcommand::names()))]
    subcommand: String,

    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,

    /// Overrides `out_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads; defaults to one per core.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let sub: Subcommand = args.subcommand.parse().expect("restricted by clap");
    let opts = RunOptions {
        out_dir: args.out,
        threads: args.threads,
    };
    match run_file(sub, &args.config, &opts) {
        Ok(bundle) => {
            info!("{} finished in {:.2}s, results in {}", sub, bundle.timings["total"], bundle.dir.display());
            println!("{}", bundle.summary_path().display());
            if bundle.passed {
                ExitCode::SUCCESS
            } else {
                error!("{sub}: acceptance thresholds not met, see {}", bundle.summary_path().display());
                ExitCode::from(EXIT_THRESHOLD)
            }
        }
        Err(e) if e.is_validation() => {
            error!("{e}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
