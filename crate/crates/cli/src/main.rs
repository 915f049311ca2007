mod args;
mod output;
mod run;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use run::CliError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // clap reports help and version as errors too
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run::execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Resonance(_) => 3,
                CliError::Io(_) => 1,
                _ => 2,
            })
        }
    }
}
