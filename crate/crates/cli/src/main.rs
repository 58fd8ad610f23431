use std::process::ExitCode;

use clap::Parser;
use urnlab_cli::{emit, run, Cli, ExperimentConfig};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let config = match ExperimentConfig::from_cli(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = run(&config);
    match emit(&config, &outcome) {
        Ok(Some(text)) => print!("{text}"),
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: writing output: {e}");
            return ExitCode::from(2);
        }
    }
    for e in &outcome.report.errors {
        eprintln!("error: {e}");
    }
    if outcome.report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
