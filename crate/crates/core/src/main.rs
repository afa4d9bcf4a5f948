use std::process::ExitCode;

use clap::Parser;
use dualpure::cli::{exit_code, run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.name());
            ExitCode::from(exit_code(&e))
        }
    }
}
