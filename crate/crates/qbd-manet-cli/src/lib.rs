//! Std-side companion of the `qbd-manet` core: scenario files, subcommands,
//! JSON/CSV outputs and process exit codes.
//!
//! Exit codes: 0 on success, 1 when a validation gate fails (simulation
//! disagrees with the analytic model, or an oracle disagrees with a closed
//! form), 2 on configuration or IO problems.

pub mod cli;
pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Validation(_) => 1,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(context: &str, err: std::io::Error) -> Self {
        CliError::Config(format!("{context}: {err}"))
    }
}

/// Runs one parsed command to completion.
pub fn dispatch(cli: cli::Cli) -> Result<(), CliError> {
    match cli.command {
        cli::Command::Analyze(args) => commands::analyze(&config::load_scenario(&args)?),
        cli::Command::Simulate(args) => commands::simulate(&config::load_scenario(&args)?),
        cli::Command::Validate(args) => commands::validate(&config::load_scenario(&args)?),
        cli::Command::Sweep(args) => {
            commands::sweep(&config::load_scenario(&args.common)?, args.campaign)
        }
        cli::Command::Oracle(args) => {
            commands::oracle(&config::load_scenario(&args.common)?, args.trials)
        }
    }
}
