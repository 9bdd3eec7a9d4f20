mod args;
mod commands;
mod config;
mod io;

use std::process::ExitCode;

use clap::Parser;
use nnk_image::{Error, Execution};

use args::{Cli, Command};
use commands::Context;

const EXIT_VALIDATION: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::DimensionMismatch { .. } => EXIT_VALIDATION,
        Error::Io(_) | Error::Format(_) => EXIT_IO,
        Error::NumericalDomain(_) => EXIT_NUMERICAL,
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: usize) -> Result<usize, Error> {
    let builder = rayon::ThreadPoolBuilder::new().num_threads(threads);
    builder
        .build_global()
        .map_err(|e| Error::InvalidArgument(format!("--threads: {e}")))?;
    Ok(rayon::current_num_threads())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(_: usize) -> Result<usize, Error> {
    Ok(1)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let threads = configure_threads(cli.threads)?;
    let ctx = Context {
        threads,
        exec: if threads > 1 {
            Execution::Parallel
        } else {
            Execution::Sequential
        },
    };
    match &cli.command {
        Command::BuildGraph(a) => commands::build_graph_cmd(a, &ctx),
        Command::Denoise(a) => commands::denoise_cmd(a, &ctx),
        Command::Compaction(a) => commands::compaction_cmd(a, &ctx),
        Command::Bench(a) => commands::bench_cmd(a, &ctx),
        Command::AddNoise(a) => commands::add_noise_cmd(a, &ctx),
        Command::Stats(a) => commands::stats_cmd(a, &ctx),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage and validation errors
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
