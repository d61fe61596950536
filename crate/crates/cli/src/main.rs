mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use glfa::Error;

use crate::args::Cli;

/// Exit codes by failure kind.
const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_DATA: u8 = 4;
const EXIT_DIVERGED: u8 = 5;

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Io { .. }) => EXIT_IO,
        Some(
            Error::Parse { .. }
            | Error::DuplicateEntry { .. }
            | Error::OutOfBounds { .. }
            | Error::EmptyMatrix,
        ) => EXIT_DATA,
        Some(Error::Divergence { .. } | Error::NonFinite(_)) => EXIT_DIVERGED,
        Some(
            Error::InvalidArgument(_)
            | Error::DegenerateRange { .. }
            | Error::NotIndirect { .. }
            | Error::OrderMismatch { .. }
            | Error::UndefinedTest,
        ) => EXIT_USAGE,
        None => EXIT_FAILURE,
    }
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("GLFA_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("GLFA_THREADS={v:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| {
        let (command, opts) = cli.command.parts();
        let spec = opts.resolve(command)?;
        commands::run(&spec)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
