//! The `.ctmdp` model document: JSON with rational rates written as
//! decimal or `p/q` strings.

use std::collections::BTreeMap;

use num::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::model::{CtmdpModel, Location, Player, Transition};
use crate::rational::{format_rational, parse_rational, Rational};

/// A rational literal as it may appear in a document. Strings are the
/// canonical form; bare JSON numbers are accepted and read from their
/// decimal text, so no float rounding happens.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum Literal {
    Text(String),
    Number(serde_json::Number),
}

impl Literal {
    pub(crate) fn parse(&self, context: impl FnOnce() -> String) -> Result<Rational> {
        let text = match self {
            Literal::Text(s) => s.clone(),
            Literal::Number(n) => n.to_string(),
        };
        parse_rational(&text).map_err(|source| Error::Rational { context: context(), source })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocationEntry {
    id: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    goal: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionEntry {
    from: String,
    action: String,
    to: String,
    rate: Literal,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    #[serde(default)]
    name: String,
    locations: Vec<LocationEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    players: BTreeMap<String, String>,
    actions: Vec<String>,
    transitions: Vec<TransitionEntry>,
    initial: BTreeMap<String, Literal>,
}

pub(crate) fn syntax_error(e: serde_json::Error) -> Error {
    Error::Syntax { line: e.line(), column: e.column(), message: e.to_string() }
}

/// Parses a model document without judging its semantics.
pub fn parse_model_unchecked(document: &str) -> Result<CtmdpModel> {
    let doc: ModelDocument = serde_json::from_str(document).map_err(syntax_error)?;

    let mut locations: Vec<Location> = doc
        .locations
        .iter()
        .map(|l| Location { id: l.id.clone(), player: Player::Max, goal: l.goal })
        .collect();
    let find_loc = |id: &str| {
        locations
            .iter()
            .position(|l| l.id == id)
            .ok_or_else(|| Error::UnknownLocation(id.to_string()))
    };
    let find_act = |id: &str| {
        doc.actions
            .iter()
            .position(|a| a == id)
            .ok_or_else(|| Error::UnknownAction(id.to_string()))
    };

    let mut players = Vec::new();
    for (id, kind) in &doc.players {
        let player = match kind.as_str() {
            "max" => Player::Max,
            "min" => Player::Min,
            other => {
                return Err(Error::InvalidArgument(format!("unknown player kind `{other}` for {id}")))
            }
        };
        players.push((find_loc(id)?, player));
    }

    let mut transitions = Vec::with_capacity(doc.transitions.len());
    for t in &doc.transitions {
        let from = find_loc(&t.from)?;
        let action = find_act(&t.action)?;
        let to = find_loc(&t.to)?;
        let rate = t
            .rate
            .parse(|| format!("rate of {} -{}-> {}", t.from, t.action, t.to))?;
        transitions.push(Transition { from, action, to, rate });
    }

    let mut initial = vec![Rational::zero(); locations.len()];
    for (id, p) in &doc.initial {
        let l = find_loc(id)?;
        initial[l] = p.parse(|| format!("initial probability of {id}"))?;
    }

    for (l, player) in players {
        locations[l].player = player;
    }
    CtmdpModel::new(doc.name, locations, doc.actions, transitions, initial)
}

/// Parses and validates a model document. Every invariant except goal
/// absorption is enforced here; a non-absorbing goal region is reported by
/// [`CtmdpModel::validate`] and repaired by [`CtmdpModel::absorb_goal`].
pub fn parse_model(document: &str) -> Result<CtmdpModel> {
    let model = parse_model_unchecked(document)?;
    let fatal: Vec<Violation> = model
        .validate()
        .into_iter()
        .filter(|v| !matches!(v, Violation::GoalNotAbsorbing { .. }))
        .collect();
    if fatal.is_empty() {
        Ok(model)
    } else {
        Err(Error::Invalid(fatal))
    }
}

pub fn serialize_model(model: &CtmdpModel) -> String {
    let doc = ModelDocument {
        name: model.name().to_string(),
        locations: model
            .locations()
            .iter()
            .map(|l| LocationEntry { id: l.id.clone(), goal: l.goal })
            .collect(),
        players: model
            .locations()
            .iter()
            .filter(|l| l.player == Player::Min)
            .map(|l| (l.id.clone(), "min".to_string()))
            .collect(),
        actions: model.actions().to_vec(),
        transitions: model
            .transitions()
            .iter()
            .map(|t| TransitionEntry {
                from: model.location_id(t.from).to_string(),
                action: model.action_id(t.action).to_string(),
                to: model.location_id(t.to).to_string(),
                rate: Literal::Text(format_rational(&t.rate)),
            })
            .collect(),
        initial: model
            .initial()
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(l, p)| (model.location_id(l).to_string(), Literal::Text(format_rational(p))))
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("model documents always serialize")
}
