mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use lloydspp::Error;

use crate::args::Cli;
use crate::commands::UsageError;

/// Exit code 2 for bad input, 1 for failures while running.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(
            Error::KExceedsPoints { .. }
            | Error::InvalidInstance(_)
            | Error::InvalidParameter(_)
            | Error::EmptySample
            | Error::InsufficientData(_)
            | Error::Parse { .. },
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli.command, cli.threads) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
