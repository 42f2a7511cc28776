mod args;
mod benchmark;
mod detect;
mod error;
mod gain_curve;
mod output;
mod scenario;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn run(cli: &Cli) -> Result<(), CliError> {
    let tuning = match &cli.command {
        Command::Detect(a) => &a.tuning,
        Command::Benchmark(a) => &a.tuning,
        Command::GainCurve(a) => &a.tuning,
    };
    if let Some(t) = tuning.threads {
        if t == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(CliError::usage)?;
    }
    match &cli.command {
        Command::Detect(a) => detect::run(a),
        Command::Benchmark(a) => benchmark::run(a),
        Command::GainCurve(a) => gain_curve::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
