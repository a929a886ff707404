//! `s4tok`: segment, tokenize, propagate, cluster, evaluate losses and
//! benchmark tokenizer variants on point clouds.

mod bench;
mod commands;
mod error;
mod options;

use std::process::ExitCode;

use clap::Parser;

use error::{CliError, CliResult};
use options::{Cli, Command};

fn init_pool() -> CliResult<()> {
    let Ok(raw) = std::env::var("S4TOK_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::input(format!("S4TOK_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::input(format!("cannot configure worker pool: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    init_pool()?;
    let config = cli.global.load_config()?;
    match cli.command {
        Command::Segment(args) => commands::segment(&config, &args),
        Command::Tokenize(args) => commands::tokenize(&config, &args),
        Command::Propagate(args) => commands::propagate(&config, &args),
        Command::Cluster(args) => commands::cluster(&config, &args),
        Command::Losses(args) => commands::losses(&config, &args),
        Command::Bench(args) => bench::run(&config, &args),
        Command::Synth(args) => commands::synth(&config, &args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
