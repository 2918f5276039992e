use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = eml_cli::Cli::parse();
    match eml_cli::run(cli) {
        Ok(outcome) if outcome.failures == 0 => ExitCode::SUCCESS,
        Ok(outcome) => {
            eprintln!("{} sub-task(s) failed", outcome.failures);
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
