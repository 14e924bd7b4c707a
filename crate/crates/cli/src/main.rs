//! `predkey`: preprocess a corpus, train and benchmark next-word models, and
//! serve them over HTTP.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use predkey_core::Error;
use tracing_subscriber::EnvFilter;

use crate::args::{Cli, Command};

/// Exit statuses.
const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => EXIT_USAGE,
        Error::Numeric { .. } => EXIT_NUMERIC,
        Error::Predictor { source, .. } => exit_code(source),
        _ => EXIT_DATA,
    }
}

fn init_logging(quiet: bool, json: bool) {
    let default = if quiet { "warn" } else { "info" };
    let filter = EnvFilter::try_from_env("PREDKEY_LOG").unwrap_or_else(|_| EnvFilter::new(default));
    let builder = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr);
    if json {
        builder.json().init();
    } else {
        builder.with_target(false).init();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.quiet, cli.json_logs);
    let result = match &cli.command {
        Command::Preprocess(a) => commands::preprocess(a, cli.seed),
        Command::Train(a) => commands::train(a, cli.seed),
        Command::Evaluate(a) => commands::evaluate(a, cli.seed),
        Command::Serve(a) => commands::serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
