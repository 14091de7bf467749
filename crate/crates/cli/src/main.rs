use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = augrank_cli::Cli::parse();
    match augrank_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("augrank: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
