//! CTMDPs and continuous-time Markov games with exact rational rates.
//!
//! Locations and actions are addressed by their index in declaration order;
//! that order is authoritative for every tie-break downstream.

use std::collections::HashMap;
use std::fmt;

use num::{One, Signed, Zero};

use crate::error::{Error, Result, Violation};
use crate::rational::{format_rational, to_f64, Rational};

/// Index of a location in [`CtmdpModel::locations`].
pub type Loc = usize;
/// Index of an action in [`CtmdpModel::actions`].
pub type Act = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Player {
    #[default]
    Max,
    Min,
}

impl Player {
    pub fn as_str(self) -> &'static str {
        match self {
            Player::Max => "max",
            Player::Min => "min",
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub id: String,
    pub player: Player,
    pub goal: bool,
}

impl Location {
    pub fn new(id: impl Into<String>) -> Self {
        Location { id: id.into(), player: Player::Max, goal: false }
    }

    pub fn goal(id: impl Into<String>) -> Self {
        Location { id: id.into(), player: Player::Max, goal: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: Loc,
    pub action: Act,
    pub to: Loc,
    pub rate: Rational,
}

/// A CTMDP (all locations owned by [`Player::Max`]) or a two-player
/// continuous-time Markov game.
#[derive(Debug, Clone, PartialEq)]
pub struct CtmdpModel {
    name: String,
    locations: Vec<Location>,
    actions: Vec<String>,
    transitions: Vec<Transition>,
    initial: Vec<Rational>,
    // rows[l][a]: successors with positive rate, in transition-list order
    rows: Vec<Vec<Vec<(Loc, Rational)>>>,
    exit: Vec<Vec<Rational>>,
}

impl CtmdpModel {
    /// Builds a model, checking referential integrity only. Semantic
    /// invariants are reported by [`CtmdpModel::validate`].
    pub fn new(
        name: impl Into<String>,
        locations: Vec<Location>,
        actions: Vec<String>,
        transitions: Vec<Transition>,
        initial: Vec<Rational>,
    ) -> Result<Self> {
        let n = locations.len();
        let m = actions.len();
        let mut seen = HashMap::new();
        for (i, loc) in locations.iter().enumerate() {
            if seen.insert(loc.id.as_str(), i).is_some() {
                return Err(Error::DuplicateLocation(loc.id.clone()));
            }
        }
        let mut seen_act = HashMap::new();
        for (i, a) in actions.iter().enumerate() {
            if seen_act.insert(a.as_str(), i).is_some() {
                return Err(Error::DuplicateAction(a.clone()));
            }
        }
        if initial.len() != n {
            return Err(Error::InvalidArgument(format!(
                "initial distribution has {} entries for {} locations",
                initial.len(),
                n
            )));
        }

        let mut rows = vec![vec![Vec::new(); m]; n];
        let mut exit = vec![vec![Rational::zero(); m]; n];
        let mut triples = HashMap::new();
        for t in &transitions {
            if t.from >= n {
                return Err(Error::UnknownLocation(format!("#{}", t.from)));
            }
            if t.to >= n {
                return Err(Error::UnknownLocation(format!("#{}", t.to)));
            }
            if t.action >= m {
                return Err(Error::UnknownAction(format!("#{}", t.action)));
            }
            let names = || {
                (
                    locations[t.from].id.clone(),
                    actions[t.action].clone(),
                    locations[t.to].id.clone(),
                )
            };
            if triples.insert((t.from, t.action, t.to), ()).is_some() {
                let (from, action, to) = names();
                return Err(Error::DuplicateTransition { from, action, to });
            }
            if t.rate.is_negative() {
                let (from, action, to) = names();
                return Err(Error::NegativeRate { from, action, to });
            }
            if t.rate.is_positive() {
                rows[t.from][t.action].push((t.to, t.rate.clone()));
                exit[t.from][t.action] += &t.rate;
            }
        }

        Ok(CtmdpModel {
            name: name.into(),
            locations,
            actions,
            transitions,
            initial,
            rows,
            exit,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Initial distribution, dense in location order.
    pub fn initial(&self) -> &[Rational] {
        &self.initial
    }

    pub fn num_locations(&self) -> usize {
        self.locations.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn location_id(&self, l: Loc) -> &str {
        &self.locations[l].id
    }

    pub fn action_id(&self, a: Act) -> &str {
        &self.actions[a]
    }

    pub fn location_index(&self, id: &str) -> Option<Loc> {
        self.locations.iter().position(|l| l.id == id)
    }

    pub fn action_index(&self, id: &str) -> Option<Act> {
        self.actions.iter().position(|a| a == id)
    }

    pub fn is_goal(&self, l: Loc) -> bool {
        self.locations[l].goal
    }

    pub fn player(&self, l: Loc) -> Player {
        self.locations[l].player
    }

    /// True when at least one location belongs to the minimising player.
    pub fn is_game(&self) -> bool {
        self.locations.iter().any(|l| l.player == Player::Min)
    }

    /// Successors of `(l, a)` with positive rate.
    pub fn successors(&self, l: Loc, a: Act) -> &[(Loc, Rational)] {
        &self.rows[l][a]
    }

    /// Total exit rate `R(l, a, L)`.
    pub fn exit_rate(&self, l: Loc, a: Act) -> &Rational {
        &self.exit[l][a]
    }

    pub fn rate(&self, l: Loc, a: Act, to: Loc) -> Rational {
        self.rows[l][a]
            .iter()
            .find(|(s, _)| *s == to)
            .map(|(_, r)| r.clone())
            .unwrap_or_else(Rational::zero)
    }

    pub fn is_enabled(&self, l: Loc, a: Act) -> bool {
        self.exit[l][a].is_positive()
    }

    /// Enabled actions at `l`, in declaration order.
    pub fn enabled(&self, l: Loc) -> impl Iterator<Item = Act> + '_ {
        (0..self.actions.len()).filter(move |&a| self.is_enabled(l, a))
    }

    pub fn enabled_vec(&self, l: Loc) -> Vec<Act> {
        self.enabled(l).collect()
    }

    pub fn max_exit_rate(&self) -> Rational {
        self.exit
            .iter()
            .flatten()
            .fold(Rational::zero(), |acc, r| if *r > acc { r.clone() } else { acc })
    }

    /// Reports every violated invariant; an empty list means the model is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut total = Rational::zero();
        for (l, p) in self.initial.iter().enumerate() {
            if p.is_negative() {
                out.push(Violation::NegativeInitial { location: self.location_id(l).to_string() });
            }
            total += p;
        }
        if !total.is_one() {
            out.push(Violation::InitialMass { total: format_rational(&total) });
        }
        for l in 0..self.num_locations() {
            if self.enabled(l).next().is_none() {
                out.push(Violation::NoEnabledAction { location: self.location_id(l).to_string() });
            }
        }
        for l in (0..self.num_locations()).filter(|&l| self.is_goal(l)) {
            for a in self.enabled(l) {
                if let Some((to, _)) = self.rows[l][a].iter().find(|(to, _)| !self.is_goal(*to)) {
                    out.push(Violation::GoalNotAbsorbing {
                        location: self.location_id(l).to_string(),
                        action: self.action_id(a).to_string(),
                        target: self.location_id(*to).to_string(),
                    });
                }
            }
        }
        out
    }

    /// Fails with [`Error::Invalid`] unless [`CtmdpModel::validate`] is empty.
    pub fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(violations))
        }
    }

    /// Time-abstract transition probabilities `P(l, a, l') = R(l, a, l') / R(l, a, L)`.
    pub fn embedded_probabilities(&self) -> EmbeddedDtmc {
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(l, by_action)| {
                by_action
                    .iter()
                    .enumerate()
                    .map(|(a, succ)| {
                        let total = &self.exit[l][a];
                        if total.is_zero() {
                            None
                        } else {
                            Some(succ.iter().map(|(to, r)| (*to, r / total)).collect())
                        }
                    })
                    .collect()
            })
            .collect();
        EmbeddedDtmc { rows }
    }

    /// Replaces every goal location's transitions by a single self-loop on
    /// the first action. The loop rate is the largest exit rate among
    /// non-goal locations (or among all locations when no non-goal location
    /// has an enabled action), so the transform never raises the maximal
    /// exit rate that matters for uniformisation.
    pub fn absorb_goal(&self) -> CtmdpModel {
        if !self.locations.iter().any(|l| l.goal) || self.actions.is_empty() {
            return self.clone();
        }
        let mut rate = Rational::zero();
        for l in (0..self.num_locations()).filter(|&l| !self.is_goal(l)) {
            for r in &self.exit[l] {
                if *r > rate {
                    rate = r.clone();
                }
            }
        }
        if rate.is_zero() {
            rate = self.max_exit_rate();
        }
        if rate.is_zero() {
            rate = Rational::one();
        }
        let mut transitions: Vec<Transition> = self
            .transitions
            .iter()
            .filter(|t| !self.is_goal(t.from))
            .cloned()
            .collect();
        for l in (0..self.num_locations()).filter(|&l| self.is_goal(l)) {
            transitions.push(Transition { from: l, action: 0, to: l, rate: rate.clone() });
        }
        // already-absorbing goals keep their declared transition order
        let unchanged = (0..self.num_locations()).filter(|&l| self.is_goal(l)).all(|l| {
            let own: Vec<_> = self.transitions.iter().filter(|t| t.from == l).collect();
            own.len() == 1 && own[0].action == 0 && own[0].to == l && own[0].rate == rate
        });
        if unchanged {
            return self.clone();
        }
        CtmdpModel::new(
            self.name.clone(),
            self.locations.clone(),
            self.actions.clone(),
            transitions,
            self.initial.clone(),
        )
        .expect("absorb_goal preserves structural validity")
    }

    /// Copy of the model with location `l` reassigned to `player`.
    pub fn with_player(&self, l: Loc, player: Player) -> CtmdpModel {
        let mut out = self.clone();
        out.locations[l].player = player;
        out
    }

    /// Copy of the model with a different initial distribution.
    pub fn with_initial(&self, initial: Vec<Rational>) -> Result<CtmdpModel> {
        CtmdpModel::new(
            self.name.clone(),
            self.locations.clone(),
            self.actions.clone(),
            self.transitions.clone(),
            initial,
        )
    }

    /// Copy of the model with one more transition.
    pub fn with_transition(&self, t: Transition) -> Result<CtmdpModel> {
        let mut transitions = self.transitions.clone();
        transitions.push(t);
        CtmdpModel::new(
            self.name.clone(),
            self.locations.clone(),
            self.actions.clone(),
            transitions,
            self.initial.clone(),
        )
    }

    /// Probability mass of the initial distribution on goal locations.
    pub fn initial_goal_mass(&self) -> Rational {
        self.initial
            .iter()
            .enumerate()
            .filter(|(l, _)| self.is_goal(*l))
            .fold(Rational::zero(), |acc, (_, p)| acc + p)
    }
}

/// Embedded discrete-time transition probabilities, defined exactly for
/// enabled `(location, action)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedDtmc {
    rows: Vec<Vec<Option<Vec<(Loc, Rational)>>>>,
}

impl EmbeddedDtmc {
    /// `None` when `a` is not enabled at `l`.
    pub fn row(&self, l: Loc, a: Act) -> Option<&[(Loc, Rational)]> {
        self.rows[l][a].as_deref()
    }

    pub fn prob(&self, l: Loc, a: Act, to: Loc) -> Rational {
        self.row(l, a)
            .and_then(|r| r.iter().find(|(s, _)| *s == to))
            .map(|(_, p)| p.clone())
            .unwrap_or_else(Rational::zero)
    }

    /// Floating-point copy of the rows, used by the numeric evaluators.
    pub fn to_f64(&self) -> Vec<Vec<Option<Vec<(Loc, f64)>>>> {
        self.rows
            .iter()
            .map(|by_action| {
                by_action
                    .iter()
                    .map(|row| row.as_ref().map(|r| r.iter().map(|(to, p)| (*to, to_f64(p))).collect()))
                    .collect()
            })
            .collect()
    }
}

/// A time-abstract path `l0 -a0-> l1 -a1-> ...`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TimeAbstractPath {
    pub start: Loc,
    pub steps: Vec<(Act, Loc)>,
}

impl TimeAbstractPath {
    pub fn new(start: Loc) -> Self {
        TimeAbstractPath { start, steps: Vec::new() }
    }

    pub fn push(&mut self, action: Act, to: Loc) {
        self.steps.push((action, to));
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> Loc {
        self.steps.last().map(|&(_, l)| l).unwrap_or(self.start)
    }

    /// Locations visited, starting location included.
    pub fn locations(&self) -> impl Iterator<Item = Loc> + '_ {
        std::iter::once(self.start).chain(self.steps.iter().map(|&(_, l)| l))
    }

    /// Checks that every step has positive rate in `model`.
    pub fn check(&self, model: &CtmdpModel) -> Result<()> {
        if self.start >= model.num_locations() {
            return Err(Error::InvalidPath(format!("unknown start #{}", self.start)));
        }
        let mut at = self.start;
        for &(a, to) in &self.steps {
            if a >= model.num_actions() || to >= model.num_locations() || !model.rate(at, a, to).is_positive() {
                return Err(Error::InvalidPath(format!(
                    "no transition {} -{}-> {}",
                    model.location_id(at),
                    model.actions().get(a).map(String::as_str).unwrap_or("?"),
                    model.locations().get(to).map(|l| l.id.as_str()).unwrap_or("?"),
                )));
            }
            at = to;
        }
        Ok(())
    }

    pub fn display(&self, model: &CtmdpModel) -> String {
        let mut s = model.location_id(self.start).to_string();
        for &(a, l) in &self.steps {
            s.push_str(&format!(" -{}-> {}", model.action_id(a), model.location_id(l)));
        }
        s
    }
}
