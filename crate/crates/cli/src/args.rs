use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ctmdp_core::rational::parse_rational;
use ctmdp_core::synthesis::CANDIDATE_BUDGET;
use ctmdp_core::Rational;
use num::Signed;

#[derive(Debug, Parser)]
#[command(name = "ctmdp-opt", version, about = "Optimal time-abstract schedulers for CTMDPs and CTMGs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a model and report every invariant violation.
    Validate(ModelArgs),
    /// Print the uniformisation of a model as a model document.
    Uniformise {
        #[command(flatten)]
        model: ModelArgs,
        /// Drop locations unreachable from the initial distribution.
        #[arg(long)]
        prune: bool,
    },
    /// Exact greedy analysis: greedy actions, step vectors, discriminator.
    Greedy(ModelArgs),
    /// Coarse and refined greed bounds for a time bound.
    Bound {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_parser = parse_time)]
        time: Rational,
    },
    /// Certified time-bounded reachability under a scheduler.
    Evaluate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long)]
        scheduler: PathBuf,
    },
    /// Reachability within a time bound and a bounded number of steps.
    StepBounded {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long)]
        scheduler: PathBuf,
        /// Maximal number of discrete steps.
        #[arg(long)]
        steps: usize,
    },
    /// Monte-Carlo estimate with a normal-approximation confidence interval.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_parser = parse_time)]
        time: Rational,
        #[arg(long)]
        scheduler: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.99, value_parser = parse_confidence)]
        confidence: f64,
    },
    /// Synthesize an optimal scheduler (or strategy pair for games).
    Synthesize {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// Defaults to `dp` for uniform models and `enumerate` otherwise.
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Preamble depth for enumeration; defaults to the refined greed
        /// bound, capped by the candidate budget.
        #[arg(long)]
        preamble: Option<usize>,
        /// Refuse enumerations with more candidate tables than this.
        #[arg(long, default_value_t = CANDIDATE_BUDGET)]
        budget: u128,
        /// Also write the scheduler document to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare sup-inf and inf-sup over greedy-tailed preamble strategies.
    Saddle {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long)]
        preamble: Option<usize>,
        /// Refuse enumerations with more candidate tables than this.
        #[arg(long, default_value_t = CANDIDATE_BUDGET)]
        budget: u128,
    },
    /// Replace randomized decisions by pure ones without losing value.
    Determinise {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long)]
        scheduler: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model document (`.ctmdp`).
    pub model: PathBuf,
    /// Make goal locations absorbing before analysis.
    #[arg(long)]
    pub absorb_goal: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_parser = parse_time)]
    pub time: Rational,
    #[arg(long, default_value_t = 1e-9, value_parser = parse_epsilon)]
    pub epsilon: f64,
    /// Compute step probabilities in exact rational arithmetic.
    #[arg(long)]
    pub exact_steps: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Dp,
    Enumerate,
}

fn parse_time(s: &str) -> Result<Rational, String> {
    let t = parse_rational(s).map_err(|e| e.to_string())?;
    if t.is_negative() {
        return Err(format!("time bound must be non-negative, got {s}"));
    }
    Ok(t)
}

fn parse_epsilon(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(e) if e > 0.0 && e < 1.0 => Ok(e),
        Ok(_) => Err(format!("epsilon must lie in (0, 1), got {s}")),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_confidence(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(c) if c > 0.0 && c < 1.0 => Ok(c),
        Ok(_) => Err(format!("confidence must lie in (0, 1), got {s}")),
        Err(e) => Err(e.to_string()),
    }
}
