mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use speakerid_core::Error;

use args::{Cli, Command};

/// 2 for bad configuration or input files, 3 for I/O, 4 for processing.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Frame { source, .. } => exit_code(source),
        Error::Config(_)
        | Error::InvalidScene(_)
        | Error::InvalidGeometry(_)
        | Error::InsufficientArray { .. }
        | Error::Format(_)
        | Error::InvalidTraining(_) => 2,
        Error::Io { .. } => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Localize(a) => commands::localize(a),
        Command::Detect(a) => commands::detect(a),
        Command::Recognize(a) => commands::recognize(a),
        Command::Train(a) => commands::train(a),
        Command::Fuse(a) => commands::fuse_lines(a),
        Command::Demo(a) => commands::demo(a),
        Command::Experiment(a) => commands::experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
