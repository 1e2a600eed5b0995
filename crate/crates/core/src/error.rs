use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("malformed rational literal `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// A violated model invariant. Violations are data; `validate` collects them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    InitialMass { total: String },
    NegativeInitial { location: String },
    NoEnabledAction { location: String },
    GoalNotAbsorbing { location: String, action: String, target: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InitialMass { total } => write!(f, "initial mass ≠ 1 (sum = {total})"),
            Violation::NegativeInitial { location } => {
                write!(f, "negative initial probability at {location}")
            }
            Violation::NoEnabledAction { location } => {
                write!(f, "no enabled action at {location}")
            }
            Violation::GoalNotAbsorbing { location, action, target } => write!(
                f,
                "goal not absorbing at {location} (action {action} leads to {target})"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{context}: {source}")]
    Rational { context: String, source: RationalError },
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("duplicate location `{0}`")]
    DuplicateLocation(String),
    #[error("duplicate action `{0}`")]
    DuplicateAction(String),
    #[error("duplicate transition {from} -{action}-> {to}")]
    DuplicateTransition { from: String, action: String, to: String },
    #[error("negative rate on {from} -{action}-> {to}")]
    NegativeRate { from: String, action: String, to: String },
    #[error("invalid model: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("action {action} is not enabled at {location}")]
    NotEnabled { location: String, action: String },
    #[error("no decision for location {0}")]
    MissingDecision(String),
    #[error("decision weights at {0} must be non-negative and sum to 1")]
    BadDistribution(String),
    #[error("scheduler document: {0}")]
    Scheduler(String),
    #[error("model is not uniform")]
    NonUniform,
    #[error("path is not valid in the model: {0}")]
    InvalidPath(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("candidate budget exceeded: {candidates} candidates > {budget}")]
    BudgetExceeded { candidates: u128, budget: u128 },
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
