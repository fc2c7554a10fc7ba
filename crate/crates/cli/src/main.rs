use std::process::ExitCode;

use bclab_cli::Cli;
use clap::Parser;

fn main() -> ExitCode {
    match bclab_cli::run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
