//! Optimal time-abstract schedulers and time-bounded reachability for
//! continuous-time Markov decision processes (CTMDPs) and two-player
//! continuous-time Markov games.
//!
//! The pipeline for a model `M`:
//!
//! 1. [`uniformise`] it, so that step counts become Poisson distributed
//!    independently of the scheduler;
//! 2. run the exact [`greedy`] analysis on the uniformisation to get the
//!    greedy actions, the standard greedy scheduler and the discriminator;
//! 3. derive a greed bound, after which the standard greedy scheduler is
//!    optimal;
//! 4. optimise the finite preamble before the bound ([`synthesis`]) and
//!    evaluate the result with certified intervals ([`reachability`]).
//!
//! [`simulate`] provides an independent Monte-Carlo estimate.

pub mod error;
pub mod fixtures;
pub mod format;
pub mod generate;
pub mod greedy;
pub mod model;
pub mod poisson;
pub mod rational;
pub mod reachability;
pub mod scheduler;
pub mod simulate;
pub mod synthesis;
pub mod uniformise;

pub use error::{Error, Result, Violation};
pub use format::{parse_model, parse_model_unchecked, serialize_model};
pub use greedy::{
    check_greed_bound, greed_bound, greedy_analysis, shift, step_vector, sup_step_vectors, GreedBound,
    GreedyAnalysis, StepVector,
};
pub use model::{Act, CtmdpModel, EmbeddedDtmc, Loc, Location, Player, TimeAbstractPath, Transition};
pub use poisson::{poisson_weights, PoissonWeights};
pub use rational::Rational;
pub use reachability::{
    evaluate, evaluate_general, evaluate_uniform, path_probability, step_bounded, EvalOptions, Evaluation,
    ValueInterval,
};
pub use scheduler::{Choice, FiniteMemoryPolicy, HistoryPolicy, HistoryScheduler, Scheduler, StrategyPair};
pub use simulate::{estimate, sample_run, Estimate};
pub use synthesis::{
    check_saddle, check_saddle_with_budget, determinise, greedy_tail, synth_enumerate, synth_uniform_dp, Method, SaddleReport,
    SynthesisResult, Synthesized,
};
pub use uniformise::{is_uniform, lift_scheduler, uniformise, vis_project, LiftedScheduler, UniformisationResult};
