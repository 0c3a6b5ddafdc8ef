mod args;
mod commands;
mod error;
mod format;
mod svg;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn run(cli: &Cli) -> Result<(), CliError> {
    if !(cli.tail > 0.0 && cli.tail < 0.5) {
        return Err(CliError::Config(format!("--tail must lie in (0, 0.5), got {}", cli.tail)));
    }
    if cli.seed.is_some() {
        log::debug!("--seed is accepted but unused");
    }
    match &cli.command {
        Command::Classify => commands::classify(cli),
        Command::Solve(a) => commands::solve(cli, a),
        Command::Verify(a) => commands::verify(cli, a),
        Command::Refine(a) => commands::refine(cli, a),
        Command::Plot(a) => commands::plot(cli, a),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ATTRITION_LOG", "warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
