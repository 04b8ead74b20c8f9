use std::process::ExitCode;

use clap::Parser;
use riskseq::cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("riskseq: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
