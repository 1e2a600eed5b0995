//! Bundled example models.

use crate::format::parse_model;
use crate::model::CtmdpModel;

/// Three-location example CTMDP: two non-goal locations `l0`, `l1` with
/// actions `a`, `b`, and the absorbing goal `l2`.
pub const EXAMPLE_CTMDP: &str = include_str!("../fixtures/example.ctmdp");

/// [`EXAMPLE_CTMDP`] with `l1` owned by the minimising player.
pub const EXAMPLE_GAME: &str = include_str!("../fixtures/example_game.ctmdp");

/// The positional scheduler `{l0 -> b, l1 -> a}` for the example.
pub const EXAMPLE_S3: &str = include_str!("../fixtures/s3.sched");

pub fn example_model() -> CtmdpModel {
    parse_model(EXAMPLE_CTMDP).expect("bundled fixture parses")
}

pub fn example_game() -> CtmdpModel {
    parse_model(EXAMPLE_GAME).expect("bundled fixture parses")
}
