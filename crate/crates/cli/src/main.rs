//! `ctmdp-opt`: batch front end to `ctmdp-core`.
//!
//! Exit status: 0 on success, 1 on domain errors (invalid model, scheduler
//! or analysis failure), 2 on usage errors.

mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::UsageError;

fn run(cli: Cli) -> anyhow::Result<(String, bool)> {
    let ok = |s: String| (s, true);
    Ok(match cli.command {
        Command::Validate(model) => commands::validate(&model)?,
        Command::Uniformise { model, prune } => ok(commands::uniformise_cmd(&model, prune)?),
        Command::Greedy(model) => ok(commands::greedy(&model)?),
        Command::Bound { model, time } => ok(commands::bound(&model, &time)?),
        Command::Evaluate { model, eval, scheduler } => ok(commands::evaluate_cmd(&model, &eval, &scheduler)?),
        Command::StepBounded { model, eval, scheduler, steps } => {
            ok(commands::step_bounded_cmd(&model, &eval, &scheduler, steps)?)
        }
        Command::Simulate { model, time, scheduler, samples, seed, confidence } => {
            ok(commands::simulate(&model, &time, &scheduler, samples, seed, confidence)?)
        }
        Command::Synthesize { model, eval, method, preamble, budget, output } => {
            ok(commands::synthesize(&model, &eval, method, preamble, budget, output.as_deref())?)
        }
        Command::Saddle { model, eval, preamble, budget } => ok(commands::saddle(&model, &eval, preamble, budget)?),
        Command::Determinise { model, eval, scheduler, output } => {
            ok(commands::determinise_cmd(&model, &eval, &scheduler, output.as_deref())?)
        }
    })
}

fn main() -> ExitCode {
    // clap prints usage and exits with status 2 on malformed arguments
    let cli = Cli::parse();
    match run(cli) {
        Ok((output, valid)) => {
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = writeln!(std::io::stdout().lock(), "{output}");
            if valid {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) if err.is::<UsageError>() => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
