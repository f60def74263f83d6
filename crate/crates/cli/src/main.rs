use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use pcsmri_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match pcsmri_cli::run(&cli) {
        Ok(text) => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.code())
        }
    }
}
