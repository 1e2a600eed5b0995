//! Certified evaluation of time-bounded reachability probabilities.
//!
//! Every evaluation reduces to a uniform discrete-time chain with an
//! absorbing goal set. With `Δ_k` the goal mass first reached at step `k`
//! and `g(k) = Pr[Poisson(λt) ≥ k]`,
//!
//! ```text
//! Pr(t) = Σ_i p(i)·d[i] = d[0] + Σ_{k≥1} Δ_k·g(k)
//! ```
//!
//! The second form keeps `t = 0` and goal-initial models exact and makes the
//! truncation error `(1 − d[N])·g(N+1)` explicit.

use num::{Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{CtmdpModel, Loc, TimeAbstractPath};
use crate::poisson::{poisson_weights, PoissonWeights};
use crate::rational::{to_f64, Rational};
use crate::scheduler::{FiniteMemoryPolicy, HistoryPolicy};
use crate::uniformise::is_uniform;

/// Enclosure `[lo, hi]` of a probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ValueInterval {
    pub fn point(v: f64) -> Self {
        ValueInterval { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Target width of the truncation error.
    pub epsilon: f64,
    /// Run the step recursion in exact rational arithmetic.
    pub exact_steps: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { epsilon: 1e-9, exact_steps: false }
    }
}

impl EvalOptions {
    pub fn with_epsilon(epsilon: f64) -> Self {
        EvalOptions { epsilon, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: ValueInterval,
    /// Rate of the uniform chain that was analysed.
    pub rate: f64,
    pub lambda_t: f64,
    pub n_max: usize,
    /// Part of the interval width caused by Poisson truncation.
    pub truncation: f64,
    /// Interval width not explained by truncation (floating-point slack).
    pub rounding_slack: f64,
}

/// A discrete-time chain with absorbing goal states and exact rational
/// transition probabilities.
#[derive(Debug, Clone)]
struct GoalChain {
    initial: Vec<(usize, Rational)>,
    rows: Vec<Vec<(usize, Rational)>>,
    goal: Vec<bool>,
}

struct StepSeries {
    /// `d[0]`, exact up to one conversion.
    d0: f64,
    /// `Δ_k` for `k = 1..=steps` (index 0 unused).
    increments: Vec<f64>,
    /// absolute error bound of each increment
    errors: Vec<f64>,
}

impl GoalChain {
    fn series(&self, steps: usize, exact: bool) -> StepSeries {
        let d0_exact: Rational = self
            .initial
            .iter()
            .filter(|(s, _)| self.goal[*s])
            .fold(Rational::zero(), |acc, (_, p)| acc + p);
        let rest_exact = Rational::from_integer(1.into()) - &d0_exact;
        let d0 = to_f64(&d0_exact);
        if exact {
            let mut dist = vec![Rational::zero(); self.rows.len()];
            for (s, p) in self.initial.iter().filter(|(s, _)| !self.goal[*s]) {
                dist[*s] += p;
            }
            let mut increments = vec![0.0];
            let mut errors = vec![0.0];
            for _ in 0..steps {
                let mut next = vec![Rational::zero(); dist.len()];
                let mut absorbed = Rational::zero();
                for (s, mass) in dist.iter().enumerate().filter(|(_, m)| !m.is_zero()) {
                    for (to, p) in &self.rows[s] {
                        if self.goal[*to] {
                            absorbed += mass * p;
                        } else {
                            next[*to] += mass * p;
                        }
                    }
                }
                let inc = to_f64(&absorbed);
                increments.push(inc);
                errors.push(inc * f64::EPSILON);
                dist = next;
            }
            return StepSeries { d0, increments, errors };
        }

        let rows: Vec<Vec<(usize, f64)>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|(to, p)| (*to, to_f64(p))).collect())
            .collect();
        let width = rows.iter().map(Vec::len).max().unwrap_or(0) + 2;
        let rest = to_f64(&rest_exact);
        let mut dist = vec![0.0_f64; rows.len()];
        for (s, p) in self.initial.iter().filter(|(s, _)| !self.goal[*s]) {
            dist[*s] += to_f64(p);
        }
        let mut increments = vec![0.0];
        let mut errors = vec![0.0];
        for k in 1..=steps {
            let mut next = vec![0.0_f64; dist.len()];
            let mut absorbed = 0.0;
            for (s, &mass) in dist.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                for &(to, p) in &rows[s] {
                    if self.goal[to] {
                        absorbed += mass * p;
                    } else {
                        next[to] += mass * p;
                    }
                }
            }
            increments.push(absorbed);
            // the non-goal mass carries at most k·width relative rounding
            // steps; its change bounds the error of each increment
            errors.push(4.0 * (k * width + self.rows.len()) as f64 * f64::EPSILON * rest);
            dist = next;
        }
        StepSeries { d0, increments, errors }
    }
}

fn interval(series: &StepSeries, w: &PoissonWeights, step_cap: Option<usize>) -> (ValueInterval, f64) {
    let n = w.n_max;
    let last = step_cap.map_or(n, |k| k.min(n));
    let mut lo = 0.0;
    let mut hi = 0.0;
    let mut reached = series.d0;
    // mass of N beyond the truncation point, charged to steps 1..=last
    let mut truncation = 0.0;
    for k in 1..=last {
        let inc = series.increments[k];
        let err = series.errors[k];
        lo += (inc - err).max(0.0) * w.tail_lo(k);
        hi += (inc + err) * w.tail_hi(k);
        truncation += (inc + err) * w.tail_bound;
        reached += inc;
    }
    let sum_slack = (last + 2) as f64 * f64::EPSILON;
    let beyond = if step_cap.is_some_and(|k| k <= n) {
        0.0
    } else {
        let err_total: f64 = series.errors.iter().sum();
        ((1.0 - reached).max(0.0) + err_total).min(1.0) * w.tail_bound
    };
    let lo = (series.d0 + lo * (1.0 - sum_slack)).clamp(0.0, 1.0);
    let hi = (series.d0 + hi * (1.0 + sum_slack) + beyond).clamp(lo, 1.0);
    (ValueInterval { lo, hi }, truncation + beyond)
}

fn finish(chain: &GoalChain, rate: f64, t: f64, opts: &EvalOptions, step_cap: Option<usize>) -> Result<Evaluation> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time bound must be finite and non-negative, got {t}")));
    }
    let lambda_t = rate * t;
    let w = poisson_weights(lambda_t, opts.epsilon)?;
    let steps = step_cap.map_or(w.n_max, |k| k.min(w.n_max));
    let series = chain.series(steps, opts.exact_steps);
    let (value, truncation) = interval(&series, &w, step_cap);
    Ok(Evaluation {
        value,
        rate,
        lambda_t,
        n_max: w.n_max,
        truncation,
        rounding_slack: (value.width() - truncation).max(0.0),
    })
}

fn check_policy(model: &CtmdpModel, policy: &dyn FiniteMemoryPolicy) -> Result<()> {
    for m in 0..policy.memory_size() {
        for l in 0..model.num_locations() {
            for (a, _) in policy.choose(l, m).support() {
                if a >= model.num_actions() || !model.is_enabled(l, a) {
                    return Err(Error::NotEnabled {
                        location: model.location_id(l).to_string(),
                        action: model.actions().get(a).cloned().unwrap_or_else(|| format!("#{a}")),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Product of a uniform model with a finite-memory policy: states are
/// `(location, memory)` pairs.
fn uniform_chain(model: &CtmdpModel, policy: &dyn FiniteMemoryPolicy) -> GoalChain {
    let mem = policy.memory_size();
    let p = model.embedded_probabilities();
    let idx = |l: Loc, m: usize| l * mem + m;
    let states = model.num_locations() * mem;
    let mut rows = vec![Vec::new(); states];
    let mut goal = vec![false; states];
    for l in 0..model.num_locations() {
        for m in 0..mem {
            let s = idx(l, m);
            goal[s] = model.is_goal(l);
            if goal[s] {
                continue;
            }
            let mut row: Vec<(usize, Rational)> = Vec::new();
            for (a, weight) in policy.choose(l, m).support() {
                for (to, prob) in p.row(l, a).expect("policy checked") {
                    let target = idx(*to, policy.update(m, a, *to));
                    let q = &weight * prob;
                    match row.iter_mut().find(|(t, _)| *t == target) {
                        Some((_, acc)) => *acc += q,
                        None => row.push((target, q)),
                    }
                }
            }
            rows[s] = row;
        }
    }
    let initial = model
        .initial()
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_positive())
        .map(|(l, p)| (idx(l, 0), p.clone()))
        .collect();
    GoalChain { initial, rows, goal }
}

/// Time-bounded reachability of a uniform model under a finite-memory
/// policy, via the step probability series and Poisson weights.
pub fn evaluate_uniform(
    model: &CtmdpModel,
    policy: &dyn FiniteMemoryPolicy,
    t: f64,
    opts: &EvalOptions,
) -> Result<Evaluation> {
    let rate = is_uniform(model).ok_or(Error::NonUniform)?;
    check_policy(model, policy)?;
    finish(&uniform_chain(model, policy), to_f64(&rate), t, opts, None)
}

/// Reachability within time `t` and at most `k` discrete steps.
pub fn step_bounded(
    model: &CtmdpModel,
    policy: &dyn FiniteMemoryPolicy,
    t: f64,
    k: usize,
    opts: &EvalOptions,
) -> Result<Evaluation> {
    let rate = is_uniform(model).ok_or(Error::NonUniform)?;
    check_policy(model, policy)?;
    let chain = uniform_chain(model, policy);
    let full = finish(&chain, to_f64(&rate), t, opts, None)?;
    if k >= full.n_max {
        return Ok(full);
    }
    finish(&chain, to_f64(&rate), t, opts, Some(k))
}

/// Time-bounded reachability of an arbitrary model: builds the induced
/// continuous-time chain on `(location, memory, action)` states, uniformises
/// it and evaluates it like a uniform model.
pub fn evaluate_general(
    model: &CtmdpModel,
    policy: &dyn FiniteMemoryPolicy,
    t: f64,
    opts: &EvalOptions,
) -> Result<Evaluation> {
    check_policy(model, policy)?;
    let mem = policy.memory_size();
    let acts = model.num_actions();
    let idx = |l: Loc, m: usize, a: usize| (l * mem + m) * acts + a;
    let states = model.num_locations() * mem * acts;

    let rate = (0..model.num_locations())
        .flat_map(|l| (0..mem).map(move |m| (l, m)))
        .filter(|&(l, _)| !model.is_goal(l))
        .flat_map(|(l, m)| policy.choose(l, m).support().into_iter().map(move |(a, _)| (l, a)))
        .map(|(l, a)| model.exit_rate(l, a).clone())
        .fold(Rational::zero(), |acc, r| if r > acc { r } else { acc });
    let rate = if rate.is_zero() { Rational::from_integer(1.into()) } else { rate };

    let mut rows = vec![Vec::new(); states];
    let mut goal = vec![false; states];
    for l in 0..model.num_locations() {
        for m in 0..mem {
            for a in 0..acts {
                let s = idx(l, m, a);
                goal[s] = model.is_goal(l);
                if goal[s] || !model.is_enabled(l, a) {
                    continue;
                }
                let mut row: Vec<(usize, Rational)> = Vec::new();
                let stay = Rational::from_integer(1.into()) - model.exit_rate(l, a) / &rate;
                if stay.is_positive() {
                    row.push((s, stay));
                }
                for (to, r) in model.successors(l, a) {
                    let m2 = policy.update(m, a, *to);
                    for (a2, weight) in policy.choose(*to, m2).support() {
                        let target = idx(*to, m2, a2);
                        let q = r / &rate * &weight;
                        match row.iter_mut().find(|(t, _)| *t == target) {
                            Some((_, acc)) => *acc += q,
                            None => row.push((target, q)),
                        }
                    }
                }
                rows[s] = row;
            }
        }
    }
    let mut initial = Vec::new();
    for (l, p) in model.initial().iter().enumerate().filter(|(_, p)| p.is_positive()) {
        for (a, weight) in policy.choose(l, 0).support() {
            initial.push((idx(l, 0, a), p * &weight));
        }
    }
    finish(&GoalChain { initial, rows, goal }, to_f64(&rate), t, opts, None)
}

/// Evaluates with [`evaluate_uniform`] when the model is uniform and with
/// [`evaluate_general`] otherwise.
pub fn evaluate(model: &CtmdpModel, policy: &dyn FiniteMemoryPolicy, t: f64, opts: &EvalOptions) -> Result<Evaluation> {
    if is_uniform(model).is_some() {
        evaluate_uniform(model, policy, t, opts)
    } else {
        evaluate_general(model, policy, t, opts)
    }
}

/// Probability of traversing `path` within time `t` on a uniform model,
/// conditional on starting at `path.start`.
pub fn path_probability(model: &CtmdpModel, policy: &dyn HistoryPolicy, path: &TimeAbstractPath, t: f64) -> Result<f64> {
    let rate = is_uniform(model).ok_or(Error::NonUniform)?;
    path.check(model)?;
    let p = model.embedded_probabilities();
    let mut prob = 1.0;
    let mut prefix = TimeAbstractPath::new(path.start);
    for &(a, to) in &path.steps {
        let weight = policy.decide(&prefix).weight(a);
        prob *= to_f64(&weight) * to_f64(&p.prob(prefix.last(), a, to));
        prefix.push(a, to);
    }
    if path.is_empty() || prob == 0.0 {
        return Ok(prob);
    }
    let w = poisson_weights(to_f64(&rate) * t, 1e-16)?;
    Ok(prob * w.tail_mid(path.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example_model;
    use crate::rational::int;
    use crate::scheduler::Scheduler;
    use crate::uniformise::{lift_scheduler, uniformise};

    fn s3() -> Scheduler {
        Scheduler::Positional(vec![1, 0, 0])
    }

    #[test]
    fn zero_time_is_exact() {
        let m = example_model();
        let u = uniformise(&m);
        let lifted = lift_scheduler(&s3(), &u);
        let e = evaluate_uniform(&u.uniform_model, &lifted, 0.0, &EvalOptions::default()).unwrap();
        assert_eq!(e.value, ValueInterval::point(0.0));
        let e = evaluate_general(&m, &s3(), 0.0, &EvalOptions::default()).unwrap();
        assert_eq!(e.value, ValueInterval::point(0.0));
    }

    #[test]
    fn goal_initial_is_one() {
        let m = example_model().with_initial(vec![int(0), int(0), int(1)]).unwrap();
        let u = uniformise(&m);
        for t in [0.0, 0.5, 3.0] {
            let e = evaluate_general(&m, &s3(), t, &EvalOptions::default()).unwrap();
            assert_eq!(e.value, ValueInterval::point(1.0));
            let e = evaluate_uniform(&u.uniform_model, &lift_scheduler(&s3(), &u), t, &EvalOptions::default()).unwrap();
            assert_eq!(e.value, ValueInterval::point(1.0));
        }
    }

    #[test]
    fn non_uniform_is_rejected_by_uniform_evaluator() {
        let m = example_model();
        assert_eq!(
            evaluate_uniform(&m, &s3(), 1.0, &EvalOptions::default()).unwrap_err(),
            Error::NonUniform
        );
    }

    #[test]
    fn general_matches_uniform_on_lift() {
        let m = example_model();
        let u = uniformise(&m);
        let opts = EvalOptions::default();
        for t in [0.5, 1.0, 2.0] {
            let a = evaluate_general(&m, &s3(), t, &opts).unwrap().value;
            let b = evaluate_uniform(&u.uniform_model, &lift_scheduler(&s3(), &u), t, &opts).unwrap().value;
            assert!(a.width() <= 2e-9 && b.width() <= 2e-9, "{a:?} {b:?}");
            assert!((a.mid() - b.mid()).abs() <= 2e-9, "{a:?} {b:?}");
        }
    }

    #[test]
    fn exact_and_float_steps_agree() {
        let m = example_model();
        let u = uniformise(&m);
        let lifted = lift_scheduler(&s3(), &u);
        let f = evaluate_uniform(&u.uniform_model, &lifted, 1.0, &EvalOptions::default()).unwrap().value;
        let opts = EvalOptions { exact_steps: true, ..Default::default() };
        let e = evaluate_uniform(&u.uniform_model, &lifted, 1.0, &opts).unwrap().value;
        assert!((f.mid() - e.mid()).abs() < 1e-12);
        assert!(e.lo >= f.lo - 1e-15 && e.hi <= f.hi + 1e-15);
    }

    #[test]
    fn trap_is_near_zero() {
        // l1 with only action a looping forever, no goal reachable
        let m = example_model();
        let trap = crate::model::CtmdpModel::new(
            "trap",
            m.locations().to_vec(),
            m.actions().to_vec(),
            vec![
                crate::model::Transition { from: 0, action: 0, to: 0, rate: int(1) },
                crate::model::Transition { from: 1, action: 0, to: 1, rate: int(1) },
                crate::model::Transition { from: 2, action: 0, to: 2, rate: int(1) },
            ],
            m.initial().to_vec(),
        )
        .unwrap();
        let e = evaluate_general(&trap, &Scheduler::Positional(vec![0, 0, 0]), 1.0, &EvalOptions::default())
            .unwrap()
            .value;
        assert_eq!(e.lo, 0.0);
        assert!(e.hi <= 1e-9);
    }

    #[test]
    fn step_bounded_edges() {
        let m = example_model();
        let u = uniformise(&m);
        let lifted = lift_scheduler(&s3(), &u);
        let opts = EvalOptions::default();
        let full = evaluate_uniform(&u.uniform_model, &lifted, 1.0, &opts).unwrap();
        let zero = step_bounded(&u.uniform_model, &lifted, 1.0, 0, &opts).unwrap();
        assert_eq!(zero.value, ValueInterval::point(0.0));
        let at_max = step_bounded(&u.uniform_model, &lifted, 1.0, full.n_max, &opts).unwrap();
        assert_eq!(at_max.value, full.value);
        let mut prev = zero.value.lo;
        for k in 1..full.n_max {
            let v = step_bounded(&u.uniform_model, &lifted, 1.0, k, &opts).unwrap().value;
            assert!(v.lo >= prev && v.lo <= full.value.lo);
            prev = v.lo;
        }
    }

    #[test]
    fn path_probabilities() {
        let m = example_model();
        let u = uniformise(&m);
        let lifted = lift_scheduler(&s3(), &u);
        let um = &u.uniform_model;
        assert_eq!(path_probability(um, &lifted, &TimeAbstractPath::new(0), 1.0).unwrap(), 1.0);
        let path = TimeAbstractPath { start: 0, steps: vec![(1, 2)] };
        let p = path_probability(um, &lifted, &path, 1.0).unwrap();
        let expected = 0.5 * (1.0 - (-6.0_f64).exp());
        assert!((p - expected).abs() < 1e-14, "{p} {expected}");
        let path = TimeAbstractPath { start: 0, steps: vec![(0, 2)] };
        assert_eq!(path_probability(um, &lifted, &path, 1.0).unwrap(), 0.0);
    }
}
