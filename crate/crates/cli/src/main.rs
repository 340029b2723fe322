//! `fakenews`: corpus handling, representations, training, stacking and
//! evaluation from the command line.

mod args;
mod commands;
mod config;

use std::ffi::OsString;
use std::process::ExitCode;
use std::time::Instant;

use clap::{CommandFactory, FromArgMatches};
use fakenews_core::eval::RunRecord;

use args::Cli;

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let argv = match config::expand_argv(&Cli::command(), argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let command = Cli::command();
    let matches = match command.clone().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let (verb, effective) = config::effective_config(&command, &matches);
    let start = Instant::now();
    match commands::run(&cli) {
        Ok(outcome) => {
            let mut record = RunRecord::new(&verb, effective, cli.seed);
            record.score = outcome.score;
            record.metadata = outcome.metadata;
            record.wall_seconds = start.elapsed().as_secs_f64();
            match record.write(&cli.out_dir) {
                Ok(path) => log::info!("run ledger written to {}", path.display()),
                Err(e) => {
                    eprintln!("error: could not write the run ledger: {e}");
                    return ExitCode::from(1);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
