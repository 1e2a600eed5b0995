//! Uniformisation with observable and unobservable location copies, and the
//! projection of uniformised histories and schedulers back to the source
//! model.
//!
//! For a source model with `n` locations the uniformised model keeps the
//! observable locations at indices `0..n` and places the unobservable copy
//! of `l` at index `n + l`. Copy ids carry the `__u` suffix.

use std::collections::HashSet;

use num::{Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{Act, CtmdpModel, Loc, Location, TimeAbstractPath, Transition};
use crate::rational::Rational;
use crate::scheduler::{Choice, FiniteMemoryPolicy, Scheduler};

#[derive(Debug, Clone, PartialEq)]
pub struct UniformisationResult {
    pub uniform_model: CtmdpModel,
    /// The uniform exit rate, equal to the maximal exit rate of the source.
    pub rate: Rational,
    source_locations: usize,
}

impl UniformisationResult {
    pub fn source_locations(&self) -> usize {
        self.source_locations
    }

    /// Unobservable copy of an observable location.
    pub fn counterpart(&self, l: Loc) -> Loc {
        debug_assert!(l < self.source_locations);
        l + self.source_locations
    }

    pub fn is_observable(&self, l: Loc) -> bool {
        l < self.source_locations
    }

    /// The source location a uniformised location stands for.
    pub fn project(&self, l: Loc) -> Loc {
        l % self.source_locations
    }

    /// Keeps only locations reachable from the initial distribution. The
    /// copy correspondence is lost, so only the model is returned.
    pub fn pruned_model(&self) -> CtmdpModel {
        let m = &self.uniform_model;
        let mut reach = vec![false; m.num_locations()];
        let mut stack: Vec<Loc> = (0..m.num_locations()).filter(|&l| m.initial()[l].is_positive()).collect();
        for &l in &stack {
            reach[l] = true;
        }
        while let Some(l) = stack.pop() {
            for a in m.enabled(l) {
                for (to, _) in m.successors(l, a) {
                    if !reach[*to] {
                        reach[*to] = true;
                        stack.push(*to);
                    }
                }
            }
        }
        let index: Vec<Option<usize>> = reach
            .iter()
            .scan(0, |next, &r| {
                Some(if r {
                    *next += 1;
                    Some(*next - 1)
                } else {
                    None
                })
            })
            .collect();
        let locations = (0..m.num_locations())
            .filter(|&l| reach[l])
            .map(|l| m.locations()[l].clone())
            .collect();
        let transitions = m
            .transitions()
            .iter()
            .filter_map(|t| match (index[t.from], index[t.to]) {
                (Some(from), Some(to)) => Some(Transition { from, to, ..t.clone() }),
                _ => None,
            })
            .collect();
        let initial = (0..m.num_locations())
            .filter(|&l| reach[l])
            .map(|l| m.initial()[l].clone())
            .collect();
        CtmdpModel::new(m.name(), locations, m.actions().to_vec(), transitions, initial)
            .expect("pruning preserves structural validity")
    }
}

/// `Some(λ)` iff every enabled `(l, a)` has total exit rate exactly `λ`.
pub fn is_uniform(model: &CtmdpModel) -> Option<Rational> {
    let mut rate: Option<&Rational> = None;
    for l in 0..model.num_locations() {
        for a in model.enabled(l) {
            let r = model.exit_rate(l, a);
            match rate {
                None => rate = Some(r),
                Some(x) if x != r => return None,
                Some(_) => {}
            }
        }
    }
    rate.cloned()
}

pub fn uniformise(model: &CtmdpModel) -> UniformisationResult {
    let n = model.num_locations();
    let rate = model.max_exit_rate();

    let mut taken: HashSet<String> = model.locations().iter().map(|l| l.id.clone()).collect();
    let mut locations = model.locations().to_vec();
    for l in model.locations() {
        let mut id = format!("{}__u", l.id);
        while taken.contains(&id) {
            id.push_str("__u");
        }
        taken.insert(id.clone());
        locations.push(Location { id, ..l.clone() });
    }

    // outgoing transitions of each observable location in U
    let mut rows: Vec<Vec<(Act, Loc, Rational)>> = vec![Vec::new(); n];
    for t in model.transitions() {
        rows[t.from].push((t.action, t.to, t.rate.clone()));
    }
    for (l, row) in rows.iter_mut().enumerate() {
        for a in model.enabled(l) {
            let filler = &rate - model.exit_rate(l, a);
            if filler.is_positive() {
                row.push((a, n + l, filler));
            }
        }
    }
    let mut transitions = Vec::new();
    for offset in [0, n] {
        for (l, row) in rows.iter().enumerate() {
            transitions.extend(row.iter().map(|(a, to, r)| Transition {
                from: l + offset,
                action: *a,
                to: *to,
                rate: r.clone(),
            }));
        }
    }
    let mut initial = model.initial().to_vec();
    initial.extend(std::iter::repeat_n(Rational::zero(), n));

    let uniform_model = CtmdpModel::new(
        format!("{}-uniform", model.name()),
        locations,
        model.actions().to_vec(),
        transitions,
        initial,
    )
    .expect("uniformisation preserves structural validity");
    UniformisationResult { uniform_model, rate, source_locations: n }
}

/// Deletes unobservable locations and the transitions leading into them.
pub fn vis_project(path: &TimeAbstractPath, result: &UniformisationResult) -> Result<TimeAbstractPath> {
    if !result.is_observable(path.start) {
        return Err(Error::InvalidPath(format!(
            "path starts at unobservable location {}",
            result.uniform_model.location_id(path.start)
        )));
    }
    Ok(TimeAbstractPath {
        start: path.start,
        steps: path
            .steps
            .iter()
            .filter(|(_, to)| result.is_observable(*to))
            .copied()
            .collect(),
    })
}

/// A scheduler over the source model acting on the uniformisation: every
/// decision is taken on the projected history, so `l` and its copy always
/// agree and counting schedulers count visible steps only.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedScheduler {
    pub inner: Scheduler,
    source_locations: usize,
}

pub fn lift_scheduler(scheduler: &Scheduler, result: &UniformisationResult) -> LiftedScheduler {
    LiftedScheduler { inner: scheduler.clone(), source_locations: result.source_locations }
}

impl LiftedScheduler {
    /// The equivalent positional table over the uniformised model, when the
    /// source scheduler is positional.
    pub fn to_positional(&self) -> Option<Scheduler> {
        match &self.inner {
            Scheduler::Positional(t) => Some(Scheduler::Positional(t.iter().chain(t).copied().collect())),
            _ => None,
        }
    }
}

impl FiniteMemoryPolicy for LiftedScheduler {
    fn memory_size(&self) -> usize {
        self.inner.memory_size()
    }

    fn update(&self, memory: usize, action: Act, to: Loc) -> usize {
        if to < self.source_locations {
            self.inner.update(memory, action, to)
        } else {
            memory
        }
    }

    fn choose(&self, l: Loc, memory: usize) -> Choice {
        self.inner.choose(l % self.source_locations, memory)
    }
}
