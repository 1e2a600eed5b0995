//! Exact greedy analysis of time-abstract step probabilities.
//!
//! Indexing: entry `i` of a step vector is the probability of having reached
//! the goal region within `i` discrete steps, so entry 0 is `1` at goal
//! locations and `0` elsewhere. Action vectors `d_{l,a}` use next-step
//! indexing: entry `i` is `Σ P(l,a,l')·d_{l'}[i]` and lines up with entry
//! `i` of `shift(d_l)`, i.e. with entry `i + 1` of `d_l`.
//!
//! The supremum vectors are lexicographic optima, not entrywise optima: at
//! every index only the actions that are still optimal on all earlier
//! indices compete. A positional scheduler that always picks a surviving
//! action attains the supremum at every index.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{Act, CtmdpModel, EmbeddedDtmc, Loc, Player};
use crate::rational::{ceil_natural, to_f64, Rational};
use crate::scheduler::Scheduler;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StepVector(pub Vec<Rational>);

impl StepVector {
    pub fn entries(&self) -> &[Rational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Drops the first entry.
    pub fn shift(&self) -> Result<StepVector> {
        if self.0.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "cannot shift a step vector of length {}",
                self.0.len()
            )));
        }
        Ok(StepVector(self.0[1..].to_vec()))
    }

    /// Entries `from..to`, convenient for comparisons against one-step-first
    /// listings.
    pub fn slice(&self, from: usize, to: usize) -> &[Rational] {
        &self.0[from..to]
    }
}

/// `shift(v)[i] = v[i + 1]`.
pub fn shift(v: &StepVector) -> Result<StepVector> {
    v.shift()
}

fn one_step(row: &[(Loc, Rational)], d: &[Vec<Rational>], i: usize) -> Rational {
    row.iter().fold(Rational::zero(), |acc, (to, p)| acc + p * &d[*to][i])
}

fn goal_entry(model: &CtmdpModel, l: Loc) -> Rational {
    if model.is_goal(l) {
        Rational::one()
    } else {
        Rational::zero()
    }
}

/// Step probability vectors `d_{l,S}` (length `depth + 1`) of a positional
/// scheduler.
pub fn step_vector(model: &CtmdpModel, scheduler: &Scheduler, depth: usize) -> Result<Vec<StepVector>> {
    if scheduler.preamble_len() != 0 || !scheduler.is_deterministic() {
        return Err(Error::InvalidArgument("step vectors need a positional scheduler".into()));
    }
    scheduler.check(model)?;
    let p = model.embedded_probabilities();
    let n = model.num_locations();
    let mut d: Vec<Vec<Rational>> = (0..n).map(|l| vec![goal_entry(model, l)]).collect();
    for i in 0..depth {
        let next: Vec<Rational> = (0..n)
            .map(|l| {
                if model.is_goal(l) {
                    Rational::one()
                } else {
                    let a = scheduler.action(0, l).expect("deterministic");
                    one_step(p.row(l, a).expect("checked enabled"), &d, i)
                }
            })
            .collect();
        for (row, v) in d.iter_mut().zip(next) {
            row.push(v);
        }
    }
    Ok(d.into_iter().map(StepVector).collect())
}

struct LexOptimum {
    vectors: Vec<Vec<Rational>>,
    survivors: Vec<Vec<Act>>,
}

/// Lexicographic optimum with `entries` entries per location. `survivors[l]`
/// holds the actions matching the optimum on aligned indices `0..entries-1`.
fn lex_optimum(model: &CtmdpModel, p: &EmbeddedDtmc, entries: usize) -> LexOptimum {
    let n = model.num_locations();
    let mut vectors: Vec<Vec<Rational>> = (0..n).map(|l| vec![goal_entry(model, l)]).collect();
    let mut survivors: Vec<Vec<Act>> = (0..n).map(|l| model.enabled_vec(l)).collect();
    for i in 0..entries.saturating_sub(1) {
        // every location reads sweep i before any writes sweep i + 1
        let mut next = Vec::with_capacity(n);
        for l in 0..n {
            if model.is_goal(l) {
                next.push(Rational::one());
                continue;
            }
            let values: Vec<(Act, Rational)> = survivors[l]
                .iter()
                .map(|&a| (a, one_step(p.row(l, a).expect("enabled"), &vectors, i)))
                .collect();
            let better = |x: &Rational, y: &Rational| match model.player(l) {
                Player::Max => x > y,
                Player::Min => x < y,
            };
            let best = values
                .iter()
                .map(|(_, v)| v)
                .fold(None::<&Rational>, |acc, v| match acc {
                    Some(b) if !better(v, b) => Some(b),
                    _ => Some(v),
                })
                .cloned()
                .unwrap_or_else(Rational::zero);
            survivors[l] = values.iter().filter(|(_, v)| *v == best).map(|(a, _)| *a).collect();
            next.push(best);
        }
        for (row, v) in vectors.iter_mut().zip(next) {
            row.push(v);
        }
    }
    LexOptimum { vectors, survivors }
}

/// Supremum step vectors `d_l` (length `depth + 1`), lexicographically
/// maximal at player-Max and minimal at player-Min locations.
pub fn sup_step_vectors(model: &CtmdpModel, depth: usize) -> Vec<StepVector> {
    let p = model.embedded_probabilities();
    lex_optimum(model, &p, depth + 1)
        .vectors
        .into_iter()
        .map(StepVector)
        .collect()
}

/// Comparison depth used by [`greedy_analysis`]: `max(1, |L| - 2)`.
pub fn comparison_depth(model: &CtmdpModel) -> usize {
    model.num_locations().saturating_sub(2).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyAnalysis {
    pub depth: usize,
    /// `d_l`, length `depth + 2`.
    pub sup_vectors: Vec<StepVector>,
    /// `d_{l,a}` in next-step indexing, length `depth + 1`; `None` for
    /// actions not enabled at `l`.
    pub action_vectors: Vec<Vec<Option<StepVector>>>,
    pub greedy_actions: Vec<BTreeSet<Act>>,
    pub standard_greedy: Vec<Act>,
    pub discriminator: Option<Rational>,
}

impl GreedyAnalysis {
    pub fn standard_greedy_scheduler(&self) -> Scheduler {
        Scheduler::Positional(self.standard_greedy.clone())
    }

    pub fn is_greedy(&self, l: Loc, a: Act) -> bool {
        self.greedy_actions[l].contains(&a)
    }
}

/// Greedy analysis at the default depth.
pub fn greedy_analysis(model: &CtmdpModel) -> GreedyAnalysis {
    greedy_analysis_at_depth(model, comparison_depth(model))
}

/// Greedy analysis comparing aligned indices `0..=depth`.
pub fn greedy_analysis_at_depth(model: &CtmdpModel, depth: usize) -> GreedyAnalysis {
    let p = model.embedded_probabilities();
    let opt = lex_optimum(model, &p, depth + 2);
    let n = model.num_locations();

    let action_vectors: Vec<Vec<Option<StepVector>>> = (0..n)
        .map(|l| {
            (0..model.num_actions())
                .map(|a| {
                    p.row(l, a).map(|row| {
                        StepVector((0..=depth).map(|i| one_step(row, &opt.vectors, i)).collect())
                    })
                })
                .collect()
        })
        .collect();

    let greedy_actions: Vec<BTreeSet<Act>> = (0..n)
        .map(|l| {
            if model.is_goal(l) {
                model.enabled(l).collect()
            } else {
                opt.survivors[l].iter().copied().collect()
            }
        })
        .collect();
    let standard_greedy: Vec<Act> = greedy_actions
        .iter()
        .map(|set| set.iter().next().copied().unwrap_or(0))
        .collect();

    let mut discriminator: Option<Rational> = None;
    for l in (0..n).filter(|&l| !model.is_goal(l)) {
        for a in model.enabled(l).filter(|a| !greedy_actions[l].contains(a)) {
            let av = action_vectors[l][a].as_ref().expect("enabled");
            let gap = (0..=depth).find_map(|i| {
                let diff = &opt.vectors[l][i + 1] - &av.0[i];
                let diff = if model.player(l) == Player::Min { -diff } else { diff };
                (!diff.is_zero()).then_some(diff)
            });
            let gap = gap.expect("non-greedy actions differ within the comparison depth");
            debug_assert!(gap.is_positive());
            if discriminator.as_ref().is_none_or(|m| gap < *m) {
                discriminator = Some(gap);
            }
        }
    }

    GreedyAnalysis {
        depth,
        sup_vectors: opt.vectors.into_iter().map(StepVector).collect(),
        action_vectors,
        greedy_actions,
        standard_greedy,
        discriminator,
    }
}

/// Greed bounds for uniform rate `lambda`, discriminator `mu` and time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GreedBound {
    /// `⌈2λt/μ⌉`
    pub coarse: u64,
    /// `⌈λt(1+μ)/μ⌉`
    pub refined: u64,
}

pub fn greed_bound(lambda: &Rational, mu: Option<&Rational>, t: &Rational) -> Result<GreedBound> {
    if !lambda.is_positive() {
        return Err(Error::InvalidArgument("rate must be positive".into()));
    }
    if t.is_negative() {
        return Err(Error::InvalidArgument("time bound must be non-negative".into()));
    }
    let Some(mu) = mu else {
        return Ok(GreedBound::default());
    };
    if !mu.is_positive() || *mu > Rational::one() {
        return Err(Error::InvalidArgument(format!("discriminator {mu} outside (0, 1]")));
    }
    let lt = lambda * t;
    let coarse = ceil_natural(&(Rational::from_integer(2.into()) * &lt / mu));
    let refined = ceil_natural(&(&lt * (Rational::one() + mu) / mu));
    Ok(GreedBound { coarse, refined })
}

/// Checks `μ·p(n) ≥ Σ_{i≥1} p(n+i)` for the Poisson distribution with mean
/// `lambda_t`, using upward-rounded arithmetic on the right-hand side and a
/// downward-rounded `μ`. The inequality is evaluated as
/// `μ ≥ Σ_{i≥1} Π_{j≤i} λt/(n+j)`, which is decreasing in `n`, so a `true`
/// result extends to every `m ≥ n`. At most `horizon` terms are summed
/// explicitly; the rest is bounded by a geometric series, and `false` is
/// returned when that bound is unavailable.
pub fn check_greed_bound(lambda_t: &Rational, mu: &Rational, n: u64, horizon: u64) -> bool {
    if !lambda_t.is_positive() {
        return true;
    }
    let mu_lo = to_f64(mu).next_down();
    let x = to_f64(lambda_t).next_up();
    let mut term = 1.0_f64;
    let mut sum = 0.0_f64;
    for i in 1..=horizon.max(1) {
        term = ((term * x).next_up() / (n + i) as f64).next_up();
        sum = (sum + term).next_up();
        if sum > mu_lo {
            return false;
        }
        let ratio = (x / (n + i + 1) as f64).next_up();
        if ratio < 1.0 {
            let remainder = ((term * ratio).next_up() / (1.0 - ratio).next_down()).next_up();
            if remainder <= f64::MIN_POSITIVE || i == horizon.max(1) {
                return (sum + remainder).next_up() <= mu_lo;
            }
        }
    }
    false
}

/// Lexicographic comparison helper for step vectors of equal length.
pub fn lex_cmp(a: &[Rational], b: &[Rational]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}
