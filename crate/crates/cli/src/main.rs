mod args;
mod commands;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.global.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| CliError::input(e.to_string()))?;
    }
    match &cli.command {
        Command::Ingest(cmd) => commands::ingest(cmd),
        Command::Metrics(args) => commands::metrics(&cli.global, args),
        Command::Analyze(cmd) => commands::analyze(&cli.global, cmd),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.report(cli.global.json_errors);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
