//! `hyperloom`: simulate, sample, fit and evaluate hyperbolic hypergraph
//! models from the command line.
//!
//! Every subcommand also accepts `--config <file>`, a flat `key = value`
//! file whose keys are the subcommand's long flag names. Flags given on the
//! command line override the file.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{CommandFactory, Parser};

use commands::Cli;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();

    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::expand(&Cli::command(), argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(output::exit_code(&e))
        }
    }
}
