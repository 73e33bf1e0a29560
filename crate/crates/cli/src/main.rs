mod args;
mod commands;
mod config;
mod error;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match &cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Score(a) => commands::score(a),
        Command::Toy(a) => commands::toy(a),
        Command::Robustness(a) => commands::robustness_cmd(a),
        Command::Analyze(a) => commands::analyze(a),
    };
    match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(error::EXIT_IO as u8);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let (label, code) = e.category();
            eprintln!("error[{label}]: {e}");
            ExitCode::from(code as u8)
        }
    }
}
