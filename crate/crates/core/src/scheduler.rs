//! Time-abstract schedulers: positional, hop-counting and randomized
//! hop-counting decision tables, plus history-dependent tables for small
//! experiments.
//!
//! All analytic evaluators work on [`FiniteMemoryPolicy`]: a scheduler whose
//! decision depends on the current location and a finite memory updated on
//! every step. Hop-counting schedulers use the capped step count as memory.
//! The simulator only needs [`HistoryPolicy`], which every finite-memory
//! policy gets for free.

use std::collections::{BTreeMap, HashMap};

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{syntax_error, Literal};
use crate::model::{Act, CtmdpModel, Loc, Player, TimeAbstractPath};
use crate::rational::{format_rational, Rational};

/// A single decision: a pure action or a distribution over actions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Choice {
    Action(Act),
    Random(Vec<(Act, Rational)>),
}

impl Choice {
    pub fn is_pure(&self) -> bool {
        match self {
            Choice::Action(_) => true,
            Choice::Random(w) => w.iter().filter(|(_, p)| !p.is_zero()).count() <= 1,
        }
    }

    /// Weight of action `a`.
    pub fn weight(&self, a: Act) -> Rational {
        match self {
            Choice::Action(b) if *b == a => Rational::one(),
            Choice::Action(_) => Rational::zero(),
            Choice::Random(w) => w
                .iter()
                .filter(|(b, _)| *b == a)
                .fold(Rational::zero(), |acc, (_, p)| acc + p),
        }
    }

    /// Actions with positive weight, with their weights.
    pub fn support(&self) -> Vec<(Act, Rational)> {
        match self {
            Choice::Action(a) => vec![(*a, Rational::one())],
            Choice::Random(w) => w.iter().filter(|(_, p)| p.is_positive()).cloned().collect(),
        }
    }

    pub fn support_f64(&self) -> Vec<(Act, f64)> {
        self.support()
            .into_iter()
            .map(|(a, p)| (a, crate::rational::to_f64(&p)))
            .collect()
    }

    /// The pure action, when the choice is pure.
    pub fn pure_action(&self) -> Option<Act> {
        match self {
            Choice::Action(a) => Some(*a),
            Choice::Random(_) if self.is_pure() => self.support().first().map(|(a, _)| *a),
            Choice::Random(_) => None,
        }
    }

    fn check(&self, model: &CtmdpModel, l: Loc) -> Result<()> {
        let not_enabled = |a: Act| Error::NotEnabled {
            location: model.location_id(l).to_string(),
            action: model.actions().get(a).cloned().unwrap_or_else(|| format!("#{a}")),
        };
        match self {
            Choice::Action(a) => {
                if *a >= model.num_actions() || !model.is_enabled(l, *a) {
                    return Err(not_enabled(*a));
                }
            }
            Choice::Random(w) => {
                let mut total = Rational::zero();
                for (a, p) in w {
                    if p.is_negative() {
                        return Err(Error::BadDistribution(model.location_id(l).to_string()));
                    }
                    if p.is_positive() && (*a >= model.num_actions() || !model.is_enabled(l, *a)) {
                        return Err(not_enabled(*a));
                    }
                    total += p;
                }
                if !total.is_one() {
                    return Err(Error::BadDistribution(model.location_id(l).to_string()));
                }
            }
        }
        Ok(())
    }
}

/// Decision tables indexed by location. Step index `i` counts the discrete
/// steps taken so far; counting schedulers consult `preamble[i]` for
/// `i < preamble.len()` and `tail` afterwards.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Scheduler {
    Positional(Vec<Act>),
    Counting { preamble: Vec<Vec<Act>>, tail: Vec<Act> },
    RandomizedCounting { preamble: Vec<Vec<Choice>>, tail: Vec<Choice> },
}

impl Scheduler {
    /// Positional scheduler from `(location id, action id)` pairs. Locations
    /// not mentioned get their first enabled action.
    pub fn positional_from_ids(model: &CtmdpModel, pairs: &[(&str, &str)]) -> Result<Scheduler> {
        let mut table: Vec<Act> = (0..model.num_locations())
            .map(|l| model.enabled(l).next().unwrap_or(0))
            .collect();
        for (l, a) in pairs {
            let li = model.location_index(l).ok_or_else(|| Error::UnknownLocation(l.to_string()))?;
            let ai = model.action_index(a).ok_or_else(|| Error::UnknownAction(a.to_string()))?;
            table[li] = ai;
        }
        let s = Scheduler::Positional(table);
        s.check(model)?;
        Ok(s)
    }

    pub fn preamble_len(&self) -> usize {
        match self {
            Scheduler::Positional(_) => 0,
            Scheduler::Counting { preamble, .. } => preamble.len(),
            Scheduler::RandomizedCounting { preamble, .. } => preamble.len(),
        }
    }

    pub fn num_locations(&self) -> usize {
        match self {
            Scheduler::Positional(t) => t.len(),
            Scheduler::Counting { tail, .. } => tail.len(),
            Scheduler::RandomizedCounting { tail, .. } => tail.len(),
        }
    }

    /// Decision at location `l` after `step` discrete steps.
    pub fn choice(&self, step: usize, l: Loc) -> Choice {
        match self {
            Scheduler::Positional(t) => Choice::Action(t[l]),
            Scheduler::Counting { preamble, tail } => {
                Choice::Action(preamble.get(step).map_or(tail[l], |row| row[l]))
            }
            Scheduler::RandomizedCounting { preamble, tail } => {
                preamble.get(step).map_or(&tail[l], |row| &row[l]).clone()
            }
        }
    }

    /// Pure action at `(step, l)`, `None` for a proper randomization.
    pub fn action(&self, step: usize, l: Loc) -> Option<Act> {
        self.choice(step, l).pure_action()
    }

    pub fn is_deterministic(&self) -> bool {
        match self {
            Scheduler::RandomizedCounting { preamble, tail } => {
                preamble.iter().flatten().chain(tail).all(Choice::is_pure)
            }
            _ => true,
        }
    }

    /// The positional tail (the whole table for positional schedulers).
    pub fn tail_choices(&self) -> Vec<Choice> {
        match self {
            Scheduler::Positional(t) | Scheduler::Counting { tail: t, .. } => {
                t.iter().map(|&a| Choice::Action(a)).collect()
            }
            Scheduler::RandomizedCounting { tail, .. } => tail.clone(),
        }
    }

    /// Randomized-counting view of any scheduler.
    pub fn to_randomized(&self) -> Scheduler {
        let n = self.preamble_len();
        let locs = self.num_locations();
        Scheduler::RandomizedCounting {
            preamble: (0..n).map(|i| (0..locs).map(|l| self.choice(i, l)).collect()).collect(),
            tail: self.tail_choices(),
        }
    }

    /// Deterministic view when every decision is pure; counting schedulers
    /// without preamble become positional.
    pub fn to_deterministic(&self) -> Option<Scheduler> {
        let n = self.preamble_len();
        let locs = self.num_locations();
        let tail: Vec<Act> = (0..locs).map(|l| self.action(n, l)).collect::<Option<_>>()?;
        let mut preamble = Vec::with_capacity(n);
        for i in 0..n {
            preamble.push((0..locs).map(|l| self.action(i, l)).collect::<Option<Vec<_>>>()?);
        }
        Some(if n == 0 {
            Scheduler::Positional(tail)
        } else {
            Scheduler::Counting { preamble, tail }
        })
    }

    /// Checks that every decision refers to an enabled action of `model` and
    /// every distribution sums to one.
    pub fn check(&self, model: &CtmdpModel) -> Result<()> {
        if self.num_locations() != model.num_locations() {
            return Err(Error::Scheduler(format!(
                "scheduler covers {} locations, model has {}",
                self.num_locations(),
                model.num_locations()
            )));
        }
        for i in 0..=self.preamble_len() {
            for l in 0..model.num_locations() {
                self.choice(i, l).check(model, l)?;
            }
        }
        Ok(())
    }

    pub fn from_document(document: &str, model: &CtmdpModel) -> Result<Scheduler> {
        let doc: SchedulerDocument = serde_json::from_str(document).map_err(syntax_error)?;
        doc.bind(model)
    }

    /// Serializes the scheduler. Only locations accepted by `keep` are written.
    pub fn to_document_filtered(&self, model: &CtmdpModel, keep: impl Fn(Loc) -> bool) -> String {
        let entry = |c: &Choice| match c {
            Choice::Action(a) => Entry::Action(model.action_id(*a).to_string()),
            Choice::Random(w) => Entry::Random(
                w.iter()
                    .map(|(a, p)| (model.action_id(*a).to_string(), Literal::Text(format_rational(p))))
                    .collect(),
            ),
        };
        let table = |step: Option<usize>| -> BTreeMap<String, Entry> {
            (0..model.num_locations())
                .filter(|&l| keep(l))
                .map(|l| {
                    let c = match step {
                        Some(i) => self.choice(i, l),
                        None => self.choice(self.preamble_len(), l),
                    };
                    (model.location_id(l).to_string(), entry(&c))
                })
                .collect()
        };
        let doc = match self {
            Scheduler::Positional(_) => SchedulerDocument::Positional { map: table(None) },
            Scheduler::Counting { preamble, .. } => SchedulerDocument::Counting {
                preamble: (0..preamble.len()).map(|i| table(Some(i))).collect(),
                tail: table(None),
            },
            Scheduler::RandomizedCounting { preamble, .. } => SchedulerDocument::RandomizedCounting {
                preamble: (0..preamble.len()).map(|i| table(Some(i))).collect(),
                tail: table(None),
            },
        };
        serde_json::to_string_pretty(&doc).expect("scheduler documents always serialize")
    }

    pub fn to_document(&self, model: &CtmdpModel) -> String {
        self.to_document_filtered(model, |_| true)
    }

    /// Human readable `l -> a` listing of the tail, restricted by `keep`.
    pub fn describe_tail(&self, model: &CtmdpModel, keep: impl Fn(Loc) -> bool) -> String {
        let n = self.preamble_len();
        (0..model.num_locations())
            .filter(|&l| keep(l))
            .map(|l| match self.choice(n, l) {
                Choice::Action(a) => format!("{} -> {}", model.location_id(l), model.action_id(a)),
                c => format!("{} -> {:?}", model.location_id(l), c.support()),
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Entry {
    Action(String),
    Random(BTreeMap<String, Literal>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
enum SchedulerDocument {
    Positional {
        map: BTreeMap<String, Entry>,
    },
    Counting {
        #[serde(default)]
        preamble: Vec<BTreeMap<String, Entry>>,
        tail: BTreeMap<String, Entry>,
    },
    RandomizedCounting {
        #[serde(default)]
        preamble: Vec<BTreeMap<String, Entry>>,
        tail: BTreeMap<String, Entry>,
    },
}

impl SchedulerDocument {
    fn bind(&self, model: &CtmdpModel) -> Result<Scheduler> {
        let bind_entry = |l: Loc, e: &Entry| -> Result<Choice> {
            let act = |id: &str| model.action_index(id).ok_or_else(|| Error::UnknownAction(id.to_string()));
            Ok(match e {
                Entry::Action(a) => Choice::Action(act(a)?),
                Entry::Random(w) => {
                    let mut weights = Vec::with_capacity(w.len());
                    for (a, p) in w {
                        let p = p.parse(|| format!("weight of {a} at {}", model.location_id(l)))?;
                        weights.push((act(a)?, p));
                    }
                    weights.sort_by_key(|(a, _)| *a);
                    Choice::Random(weights)
                }
            })
        };
        let bind_table = |table: &BTreeMap<String, Entry>, fallback: Option<&[Choice]>| -> Result<Vec<Choice>> {
            let mut row: Vec<Option<Choice>> = vec![None; model.num_locations()];
            for (id, e) in table {
                let l = model.location_index(id).ok_or_else(|| Error::UnknownLocation(id.clone()))?;
                row[l] = Some(bind_entry(l, e)?);
            }
            row.into_iter()
                .enumerate()
                .map(|(l, c)| match (c, fallback) {
                    (Some(c), _) => Ok(c),
                    (None, Some(tail)) => Ok(tail[l].clone()),
                    (None, None) if model.is_goal(l) => model
                        .enabled(l)
                        .next()
                        .map(Choice::Action)
                        .ok_or_else(|| Error::MissingDecision(model.location_id(l).to_string())),
                    (None, None) => Err(Error::MissingDecision(model.location_id(l).to_string())),
                })
                .collect()
        };

        let (preamble, tail, randomized) = match self {
            SchedulerDocument::Positional { map } => (&[][..], map, false),
            SchedulerDocument::Counting { preamble, tail } => (preamble.as_slice(), tail, false),
            SchedulerDocument::RandomizedCounting { preamble, tail } => (preamble.as_slice(), tail, true),
        };
        let tail = bind_table(tail, None)?;
        let preamble = preamble
            .iter()
            .map(|t| bind_table(t, Some(&tail)))
            .collect::<Result<Vec<_>>>()?;
        let scheduler = Scheduler::RandomizedCounting { preamble, tail };
        scheduler.check(model)?;
        let has_random = match &scheduler {
            Scheduler::RandomizedCounting { preamble, tail } => preamble
                .iter()
                .flatten()
                .chain(tail)
                .any(|c| matches!(c, Choice::Random(_))),
            _ => false,
        };
        if randomized || has_random {
            return Ok(scheduler);
        }
        let det = scheduler.to_deterministic().expect("all entries are pure");
        Ok(match (self, det) {
            (SchedulerDocument::Counting { .. }, Scheduler::Positional(tail)) => {
                Scheduler::Counting { preamble: Vec::new(), tail }
            }
            (_, det) => det,
        })
    }
}

/// Decision interface used by the simulator: any function of the
/// time-abstract history.
pub trait HistoryPolicy: Sync {
    fn decide(&self, history: &TimeAbstractPath) -> Choice;
}

/// A scheduler with finite memory: the decision depends on the current
/// location and a memory cell in `0..memory_size()`, starting at 0 and
/// updated on every step.
pub trait FiniteMemoryPolicy: Sync {
    fn memory_size(&self) -> usize;
    fn update(&self, memory: usize, action: Act, to: Loc) -> usize;
    fn choose(&self, l: Loc, memory: usize) -> Choice;
}

impl<T: FiniteMemoryPolicy> HistoryPolicy for T {
    fn decide(&self, history: &TimeAbstractPath) -> Choice {
        let m = history
            .steps
            .iter()
            .fold(0, |m, &(a, to)| self.update(m, a, to));
        self.choose(history.last(), m)
    }
}

impl FiniteMemoryPolicy for Scheduler {
    fn memory_size(&self) -> usize {
        self.preamble_len() + 1
    }

    fn update(&self, memory: usize, _action: Act, _to: Loc) -> usize {
        (memory + 1).min(self.preamble_len())
    }

    fn choose(&self, l: Loc, memory: usize) -> Choice {
        self.choice(memory, l)
    }
}

/// Counting strategies for both players of a game. Each strategy is a
/// full-width table; only entries at the owner's locations are meaningful.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyPair {
    pub max_strategy: Scheduler,
    pub min_strategy: Scheduler,
    owners: Vec<Player>,
}

impl StrategyPair {
    pub fn new(model: &CtmdpModel, max_strategy: Scheduler, min_strategy: Scheduler) -> Self {
        let owners = (0..model.num_locations()).map(|l| model.player(l)).collect();
        StrategyPair { max_strategy, min_strategy, owners }
    }

    /// The combined scheduler: each location follows its owner's strategy.
    pub fn combined(&self) -> Scheduler {
        let n = self.max_strategy.preamble_len().max(self.min_strategy.preamble_len());
        let pick = |i: usize, l: Loc| match self.owners[l] {
            Player::Max => self.max_strategy.choice(i, l),
            Player::Min => self.min_strategy.choice(i, l),
        };
        let locs = self.owners.len();
        let randomized = Scheduler::RandomizedCounting {
            preamble: (0..n).map(|i| (0..locs).map(|l| pick(i, l)).collect()).collect(),
            tail: (0..locs).map(|l| pick(n, l)).collect(),
        };
        randomized.to_deterministic().unwrap_or(randomized)
    }
}

/// A history-dependent table: explicit decisions for listed histories,
/// a fallback scheduler elsewhere.
#[derive(Debug, Clone)]
pub struct HistoryScheduler {
    pub table: HashMap<TimeAbstractPath, Choice>,
    pub fallback: Scheduler,
}

impl HistoryPolicy for HistoryScheduler {
    fn decide(&self, history: &TimeAbstractPath) -> Choice {
        match self.table.get(history) {
            Some(c) => c.clone(),
            None => self.fallback.choice(history.len(), history.last()),
        }
    }
}
