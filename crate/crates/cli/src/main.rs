mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Spectra(a) => commands::spectra(a),
        Command::Validate(a) => commands::validate(a),
        Command::Anomaly(a) => commands::anomaly(a),
        Command::Accumulate(a) => commands::accumulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pslap: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
