//! Construction of optimal schedulers and game strategies.
//!
//! Every synthesized scheduler is a hop-counting scheduler whose tail is
//! the standard greedy scheduler; past the greed bound non-greedy decisions
//! cannot pay off, so only a finite preamble has to be optimised.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::greedy::{greed_bound, greedy_analysis, GreedBound, GreedyAnalysis};
use crate::model::{Act, CtmdpModel, Loc, Player};
use crate::poisson::poisson_weights;
use crate::rational::{from_f64, to_f64, Rational};
use crate::reachability::{evaluate, EvalOptions, ValueInterval};
use crate::scheduler::{Choice, Scheduler, StrategyPair};
use crate::uniformise::{is_uniform, uniformise};

/// Default refusal threshold for exhaustive enumeration.
pub const CANDIDATE_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Dp,
    Enumerate,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dp => "dp",
            Method::Enumerate => "enumerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Synthesized {
    Scheduler(Scheduler),
    Strategies(StrategyPair),
}

impl Synthesized {
    /// The scheduler every location follows.
    pub fn combined(&self) -> Scheduler {
        match self {
            Synthesized::Scheduler(s) => s.clone(),
            Synthesized::Strategies(p) => p.combined(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub scheduler: Synthesized,
    pub value: ValueInterval,
    pub method: Method,
    pub preamble_depth: usize,
    pub greed_bound_used: GreedBound,
    /// Decisions (DP) or candidates (enumeration) that tied with the chosen
    /// one within tolerance.
    pub ties: usize,
    pub notes: Vec<String>,
}

/// Greedy information for a model: for non-uniform models it is taken
/// from the uniformisation and restricted to the observable locations.
#[derive(Debug, Clone)]
pub struct GreedyContext {
    pub analysis: GreedyAnalysis,
    pub standard_greedy: Vec<Act>,
    /// Uniform rate of the model, or of its uniformisation.
    pub rate: Rational,
}

impl GreedyContext {
    pub fn new(model: &CtmdpModel) -> Self {
        match is_uniform(model) {
            Some(rate) => {
                let analysis = greedy_analysis(model);
                GreedyContext { standard_greedy: analysis.standard_greedy.clone(), analysis, rate }
            }
            None => {
                let u = uniformise(model);
                let analysis = greedy_analysis(&u.uniform_model);
                let standard_greedy = analysis.standard_greedy[..model.num_locations()].to_vec();
                GreedyContext { analysis, standard_greedy, rate: u.rate }
            }
        }
    }

    pub fn greed_bound(&self, t: f64) -> Result<GreedBound> {
        greed_bound(&self.rate, self.analysis.discriminator.as_ref(), &time_rational(t)?)
    }

    pub fn scheduler(&self) -> Scheduler {
        Scheduler::Positional(self.standard_greedy.clone())
    }
}

fn time_rational(t: f64) -> Result<Rational> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time bound must be non-negative, got {t}")));
    }
    from_f64(t).ok_or_else(|| Error::InvalidArgument(format!("time bound must be finite, got {t}")))
}

/// `S̄`: the decisions of `scheduler` for step indices below `n`, the greedy
/// positional scheduler from step `n` on.
pub fn greedy_tail(scheduler: &Scheduler, n: usize, greedy: &[Act]) -> Scheduler {
    if n == 0 {
        return Scheduler::Positional(greedy.to_vec());
    }
    let locs = greedy.len();
    if scheduler.is_deterministic() {
        let preamble = (0..n)
            .map(|i| (0..locs).map(|l| scheduler.action(i, l).expect("deterministic")).collect())
            .collect();
        Scheduler::Counting { preamble, tail: greedy.to_vec() }
    } else {
        let preamble = (0..n).map(|i| (0..locs).map(|l| scheduler.choice(i, l)).collect()).collect();
        Scheduler::RandomizedCounting { preamble, tail: greedy.iter().map(|&a| Choice::Action(a)).collect() }
    }
}

fn better(player: Player, x: f64, y: f64) -> bool {
    match player {
        Player::Max => x > y,
        Player::Min => x < y,
    }
}

fn package(model: &CtmdpModel, scheduler: Scheduler) -> Synthesized {
    if model.is_game() {
        Synthesized::Strategies(StrategyPair::new(model, scheduler.clone(), scheduler))
    } else {
        Synthesized::Scheduler(scheduler)
    }
}

/// Backward induction over the step index for uniform models and games.
/// Decisions from the refined greed bound on are the standard greedy ones.
pub fn synth_uniform_dp(model: &CtmdpModel, t: f64, epsilon: f64) -> Result<SynthesisResult> {
    let rate = is_uniform(model).ok_or(Error::NonUniform)?;
    let ctx = GreedyContext::new(model);
    let bound = ctx.greed_bound(t)?;
    let lambda_t = to_f64(&rate) * t;
    let weights = poisson_weights(lambda_t, epsilon)?;
    let n = weights.n_max;
    let g: Vec<f64> = (0..=n + 1).map(|i| weights.tail_mid(i)).collect();
    debug_assert!(g.windows(2).all(|w| w[0] >= w[1]));

    let p = model.embedded_probabilities().to_f64();
    let locs = model.num_locations();
    let greedy_from = (bound.refined as usize).min(n + 1);
    let tie_tol = 8.0 * (n + 2) as f64 * f64::EPSILON;

    let mut next = vec![0.0_f64; locs];
    let mut decisions: Vec<Vec<Act>> = vec![Vec::new(); greedy_from];
    let mut ties = 0;
    for i in (0..=n).rev() {
        let value_of = |l: Loc, a: Act| -> f64 {
            p[l][a]
                .as_ref()
                .expect("enabled")
                .iter()
                .map(|&(to, q)| q * if model.is_goal(to) { g[i + 1] } else { next[to] })
                .sum()
        };
        let mut current = vec![0.0_f64; locs];
        let mut row = ctx.standard_greedy.clone();
        for l in (0..locs).filter(|&l| !model.is_goal(l)) {
            if i >= greedy_from {
                current[l] = value_of(l, ctx.standard_greedy[l]);
                continue;
            }
            let values: Vec<(Act, f64)> = model.enabled(l).map(|a| (a, value_of(l, a))).collect();
            let best = values
                .iter()
                .map(|&(_, v)| v)
                .reduce(|x, y| if better(model.player(l), y, x) { y } else { x })
                .expect("every location has an enabled action");
            let close: Vec<Act> =
                values.iter().filter(|(_, v)| (v - best).abs() <= tie_tol).map(|(a, _)| *a).collect();
            if close.len() > 1 {
                ties += 1;
            }
            row[l] = close[0];
            current[l] = best;
        }
        if i < greedy_from {
            decisions[i] = row;
        }
        next = current;
    }

    let scheduler = if greedy_from == 0 {
        ctx.scheduler()
    } else {
        Scheduler::Counting { preamble: decisions, tail: ctx.standard_greedy.clone() }
    };
    let value = evaluate(model, &scheduler, t, &EvalOptions::with_epsilon(epsilon))?.value;
    let mut notes = Vec::new();
    if (bound.refined as usize) > greedy_from {
        notes.push(format!(
            "preamble cut at the Poisson truncation point {} (greed bound {})",
            greedy_from, bound.refined
        ));
    }
    Ok(SynthesisResult {
        scheduler: package(model, scheduler),
        value,
        method: Method::Dp,
        preamble_depth: greedy_from,
        greed_bound_used: bound,
        ties,
        notes,
    })
}

/// Deterministic preamble tables for one player's locations, decoded from a
/// mixed-radix index whose most significant digit is `(step 0, first
/// location)`.
#[derive(Debug, Clone)]
struct TableSpace {
    slots: Vec<(usize, Loc)>,
    options: Vec<Vec<Act>>,
}

impl TableSpace {
    fn new(model: &CtmdpModel, preamble: usize, owner: Player) -> Self {
        let locs: Vec<Loc> = (0..model.num_locations())
            .filter(|&l| !model.is_goal(l) && model.player(l) == owner)
            .collect();
        let slots: Vec<(usize, Loc)> = (0..preamble).flat_map(|i| locs.iter().map(move |&l| (i, l))).collect();
        let options = slots.iter().map(|&(_, l)| model.enabled_vec(l)).collect();
        TableSpace { slots, options }
    }

    fn count(&self) -> u128 {
        self.options.iter().fold(1u128, |acc, o| acc.saturating_mul(o.len() as u128))
    }

    fn write(&self, mut index: u128, table: &mut [Vec<Act>]) {
        for (slot, opts) in self.slots.iter().zip(&self.options).rev() {
            let radix = opts.len() as u128;
            table[slot.0][slot.1] = opts[(index % radix) as usize];
            index /= radix;
        }
    }
}

struct Candidates {
    max_space: TableSpace,
    min_space: TableSpace,
    greedy: Vec<Act>,
    preamble: usize,
}

impl Candidates {
    fn new(model: &CtmdpModel, preamble: usize, greedy: Vec<Act>, budget: u128) -> Result<Self> {
        let max_space = TableSpace::new(model, preamble, Player::Max);
        let min_space = TableSpace::new(model, preamble, Player::Min);
        let candidates = max_space.count().saturating_mul(min_space.count());
        if candidates > budget {
            return Err(Error::BudgetExceeded { candidates, budget });
        }
        Ok(Candidates { max_space, min_space, greedy, preamble })
    }

    fn scheduler(&self, max_index: u128, min_index: u128) -> Scheduler {
        if self.preamble == 0 {
            return Scheduler::Positional(self.greedy.clone());
        }
        let mut preamble = vec![self.greedy.clone(); self.preamble];
        self.max_space.write(max_index, &mut preamble);
        self.min_space.write(min_index, &mut preamble);
        Scheduler::Counting { preamble, tail: self.greedy.clone() }
    }

    /// Values of all candidate pairs, `[max_index][min_index]`.
    fn evaluate(&self, model: &CtmdpModel, t: f64, opts: &EvalOptions) -> Result<Vec<Vec<ValueInterval>>> {
        let rows = self.max_space.count();
        let cols = self.min_space.count();
        let flat: Vec<ValueInterval> = (0..rows * cols)
            .into_par_iter()
            .map(|k| Ok(evaluate(model, &self.scheduler(k / cols, k % cols), t, opts)?.value))
            .collect::<Result<_>>()?;
        Ok(flat.chunks(cols as usize).map(<[_]>::to_vec).collect())
    }
}

/// Number of deterministic preamble tables of length `preamble`.
pub fn candidate_count(model: &CtmdpModel, preamble: usize) -> u128 {
    TableSpace::new(model, preamble, Player::Max)
        .count()
        .saturating_mul(TableSpace::new(model, preamble, Player::Min).count())
}

/// Largest preamble not above `wanted` whose candidate count fits `budget`.
pub fn capped_preamble(model: &CtmdpModel, wanted: usize, budget: u128) -> usize {
    let mut p = wanted;
    while p > 0 && candidate_count(model, p) > budget {
        p -= 1;
    }
    p
}

// earliest index whose mid is within `tol` of the optimum
fn pick(values: &[f64], player: Player, tol: f64) -> (usize, usize) {
    let best = values
        .iter()
        .copied()
        .reduce(|x, y| if better(player, y, x) { y } else { x })
        .expect("non-empty");
    let close: Vec<usize> = (0..values.len()).filter(|&i| (values[i] - best).abs() <= tol).collect();
    (close[0], close.len() - 1)
}

/// Exhaustive search over deterministic preamble tables of length
/// `preamble` followed by the standard greedy tail.
pub fn synth_enumerate(model: &CtmdpModel, t: f64, epsilon: f64, preamble: usize) -> Result<SynthesisResult> {
    synth_enumerate_with_budget(model, t, epsilon, preamble, CANDIDATE_BUDGET)
}

pub fn synth_enumerate_with_budget(
    model: &CtmdpModel,
    t: f64,
    epsilon: f64,
    preamble: usize,
    budget: u128,
) -> Result<SynthesisResult> {
    let ctx = GreedyContext::new(model);
    let bound = ctx.greed_bound(t)?;
    let cands = Candidates::new(model, preamble, ctx.standard_greedy.clone(), budget)?;
    let opts = EvalOptions::with_epsilon(epsilon);
    let values = cands.evaluate(model, t, &opts)?;
    let tol = 2.0 * epsilon;

    // max over Max tables of min over Min tables
    let responses: Vec<(usize, usize)> = values
        .iter()
        .map(|row| pick(&row.iter().map(ValueInterval::mid).collect::<Vec<_>>(), Player::Min, tol))
        .collect();
    let guaranteed: Vec<f64> = values.iter().zip(&responses).map(|(row, (j, _))| row[*j].mid()).collect();
    let (i, ties) = pick(&guaranteed, Player::Max, tol);
    let j = responses[i].0;
    let scheduler = cands.scheduler(i as u128, j as u128);

    let mut notes = Vec::new();
    if (bound.refined as usize) > preamble && ctx.analysis.discriminator.is_some() {
        notes.push(format!(
            "preamble {} is below the refined greed bound {}; optimality holds only within the searched class",
            preamble, bound.refined
        ));
    }
    Ok(SynthesisResult {
        scheduler: package(model, scheduler),
        value: values[i][j],
        method: Method::Enumerate,
        preamble_depth: preamble,
        greed_bound_used: bound,
        ties,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleReport {
    pub sup_inf: ValueInterval,
    pub inf_sup: ValueInterval,
}

impl SaddleReport {
    pub fn gap(&self) -> f64 {
        (self.sup_inf.mid() - self.inf_sup.mid()).abs()
    }
}

/// Both orders of optimisation over greedy-tailed preamble tables.
pub fn check_saddle(game: &CtmdpModel, t: f64, preamble: usize, epsilon: f64) -> Result<SaddleReport> {
    check_saddle_with_budget(game, t, preamble, epsilon, CANDIDATE_BUDGET)
}

pub fn check_saddle_with_budget(
    game: &CtmdpModel,
    t: f64,
    preamble: usize,
    epsilon: f64,
    budget: u128,
) -> Result<SaddleReport> {
    let ctx = GreedyContext::new(game);
    let cands = Candidates::new(game, preamble, ctx.standard_greedy.clone(), budget)?;
    let values = cands.evaluate(game, t, &EvalOptions::with_epsilon(epsilon))?;
    let tol = 2.0 * epsilon;
    let rows = values.len();
    let cols = values[0].len();

    let row_min: Vec<(usize, usize)> = values
        .iter()
        .map(|row| pick(&row.iter().map(ValueInterval::mid).collect::<Vec<_>>(), Player::Min, tol))
        .collect();
    let (i, _) = pick(&row_min.iter().zip(&values).map(|((j, _), r)| r[*j].mid()).collect::<Vec<_>>(), Player::Max, tol);
    let sup_inf = values[i][row_min[i].0];

    let col_max: Vec<usize> = (0..cols)
        .map(|j| pick(&(0..rows).map(|i| values[i][j].mid()).collect::<Vec<_>>(), Player::Max, tol).0)
        .collect();
    let (j, _) = pick(&(0..cols).map(|j| values[col_max[j]][j].mid()).collect::<Vec<_>>(), Player::Min, tol);
    let inf_sup = values[col_max[j]][j];

    Ok(SaddleReport { sup_inf, inf_sup })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Determinised {
    pub scheduler: Scheduler,
    pub replaced: usize,
    pub value_before: ValueInterval,
    pub value_after: ValueInterval,
}

/// Replaces randomized decisions one at a time, in increasing step order and
/// then location order, by the pure action that maximises the evaluated
/// value. Preamble decisions are visited at most once per run, so the value
/// is affine in each of them and no replacement loses more than the
/// evaluation tolerance. Tail decisions are replaced the same way.
pub fn determinise(model: &CtmdpModel, scheduler: &Scheduler, t: f64, epsilon: f64) -> Result<Determinised> {
    scheduler.check(model)?;
    let opts = EvalOptions::with_epsilon(epsilon);
    let value_before = evaluate(model, scheduler, t, &opts)?.value;
    if scheduler.is_deterministic() {
        return Ok(Determinised {
            scheduler: scheduler.clone(),
            replaced: 0,
            value_before,
            value_after: value_before,
        });
    }
    let Scheduler::RandomizedCounting { mut preamble, mut tail } = scheduler.to_randomized() else {
        unreachable!("to_randomized always yields the randomized form")
    };
    let steps = preamble.len();
    let mut replaced = 0;
    for i in 0..=steps {
        for l in 0..model.num_locations() {
            let current = if i < steps { &preamble[i][l] } else { &tail[l] };
            if current.is_pure() {
                continue;
            }
            let mut best: Option<(Act, f64)> = None;
            for (a, _) in current.support() {
                let mut trial_pre = preamble.clone();
                let mut trial_tail = tail.clone();
                if i < steps {
                    trial_pre[i][l] = Choice::Action(a);
                } else {
                    trial_tail[l] = Choice::Action(a);
                }
                let trial = Scheduler::RandomizedCounting { preamble: trial_pre, tail: trial_tail };
                let v = evaluate(model, &trial, t, &opts)?.value.mid();
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((a, v));
                }
            }
            let (a, _) = best.expect("non-empty support");
            if i < steps {
                preamble[i][l] = Choice::Action(a);
            } else {
                tail[l] = Choice::Action(a);
            }
            replaced += 1;
        }
    }
    let out = Scheduler::RandomizedCounting { preamble, tail }
        .to_deterministic()
        .expect("every decision is pure now");
    let value_after = evaluate(model, &out, t, &opts)?.value;
    Ok(Determinised { scheduler: out, replaced, value_before, value_after })
}
