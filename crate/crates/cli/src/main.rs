use std::process::ExitCode;

use clap::Parser;
use towerplex_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.error_line());
            ExitCode::FAILURE
        }
    }
}
