use std::process::ExitCode;

use clap::Parser;
use phfock_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("phfock: {e}");
            ExitCode::from(e.code)
        }
    }
}
