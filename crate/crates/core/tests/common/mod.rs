//! Independent oracles for the integration tests. Nothing here calls the
//! library's analysis code: step vectors are propagated forwards, optima
//! are found by walking explicit history trees, and Poisson tails come from
//! `statrs`.
#![allow(dead_code)]

use std::cmp::Ordering;

use ctmdp_core::generate::{random_model, random_uniform_model};
use ctmdp_core::rational::to_f64;
use ctmdp_core::{fixtures, uniformise, Act, CtmdpModel, Loc, Player, Rational, Scheduler};
use num::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{DiscreteCDF, Poisson};

pub const EPS: f64 = 1e-9;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `Pr[Poisson(lt) ≥ k]`.
pub fn poisson_tail(lt: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if lt == 0.0 {
        return 0.0;
    }
    Poisson::new(lt).unwrap().sf(k as u64 - 1)
}

/// `Pr[Poisson(lt) = k]`.
pub fn poisson_pmf(lt: f64, k: usize) -> f64 {
    if lt == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let p = Poisson::new(lt).unwrap();
    if k == 0 {
        p.cdf(0)
    } else {
        p.cdf(k as u64) - p.cdf(k as u64 - 1)
    }
}

/// Exact one-step probabilities `P(l, a, ·)` from raw rates.
pub fn step_row(model: &CtmdpModel, l: Loc, a: Act) -> Vec<(Loc, Rational)> {
    let mut row: Vec<(Loc, Rational)> = Vec::new();
    let mut total = Rational::zero();
    for t in model.transitions().iter().filter(|t| t.from == l && t.action == a) {
        total += &t.rate;
        row.push((t.to, t.rate.clone()));
    }
    for (_, r) in row.iter_mut() {
        *r = &*r / &total;
    }
    row
}

pub fn enabled(model: &CtmdpModel, l: Loc) -> Vec<Act> {
    let mut acts: Vec<Act> = model.transitions().iter().filter(|t| t.from == l).map(|t| t.action).collect();
    acts.sort_unstable();
    acts.dedup();
    acts
}

/// `d_{l,S}[i]` for `i = 0..=depth`: probability of having visited the goal
/// within `i` steps from `l` under positional `choice`, by forward
/// propagation of the location distribution.
pub fn forward_step_vector(model: &CtmdpModel, choice: &[Act], start: Loc, depth: usize) -> Vec<Rational> {
    let n = model.num_locations();
    let mut dist = vec![Rational::zero(); n];
    dist[start] = Rational::one();
    let mut reached = Rational::zero();
    let mut out = Vec::with_capacity(depth + 1);
    for step in 0..=depth {
        // move goal mass into `reached`
        for l in 0..n {
            if model.is_goal(l) && !dist[l].is_zero() {
                reached += &dist[l];
                dist[l] = Rational::zero();
            }
        }
        out.push(reached.clone());
        if step == depth {
            break;
        }
        let mut next = vec![Rational::zero(); n];
        for l in 0..n {
            if dist[l].is_zero() {
                continue;
            }
            for (to, p) in step_row(model, l, choice[l]) {
                next[to] += &dist[l] * p;
            }
        }
        dist = next;
    }
    out
}

fn lex(a: &[Rational], b: &[Rational]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Lexicographically optimal step vector over all history-dependent
/// schedulers, by recursion over the history tree: every node picks the
/// action whose mixture of subtree vectors is lexicographically best for
/// the owner of the location.
pub fn history_tree_sup(model: &CtmdpModel, l: Loc, depth: usize) -> Vec<Rational> {
    if model.is_goal(l) {
        return vec![Rational::one(); depth + 1];
    }
    if depth == 0 {
        return vec![Rational::zero()];
    }
    let mut best: Option<Vec<Rational>> = None;
    for a in enabled(model, l) {
        let mut mix = vec![Rational::zero(); depth];
        for (to, p) in step_row(model, l, a) {
            for (i, v) in history_tree_sup(model, to, depth - 1).into_iter().enumerate() {
                mix[i] += &p * v;
            }
        }
        let take = match &best {
            None => true,
            Some(b) => match model.player(l) {
                Player::Max => lex(&mix, b) == Ordering::Greater,
                Player::Min => lex(&mix, b) == Ordering::Less,
            },
        };
        if take {
            best = Some(mix);
        }
    }
    let mut out = vec![Rational::zero()];
    out.extend(best.expect("enabled action"));
    out
}

/// Uniform rate of a model, computed from raw rates.
pub fn uniform_rate(model: &CtmdpModel) -> Option<Rational> {
    let mut rate: Option<Rational> = None;
    for l in 0..model.num_locations() {
        for a in enabled(model, l) {
            let e = model
                .transitions()
                .iter()
                .filter(|t| t.from == l && t.action == a)
                .fold(Rational::zero(), |acc, t| acc + &t.rate);
            match &rate {
                None => rate = Some(e),
                Some(r) if *r != e => return None,
                _ => {}
            }
        }
    }
    rate
}

/// Optimal value over history-dependent deterministic schedulers that may
/// decide freely during the first `depth` steps and then follow the
/// positional `tail`, on a uniform model. Max locations maximise, Min
/// locations minimise, node by node.
pub fn history_tree_value(model: &CtmdpModel, t: f64, depth: usize, tail: &[Act]) -> f64 {
    let lt = to_f64(&uniform_rate(model).expect("uniform model")) * t;
    let horizon = 200;
    let g: Vec<f64> = (0..=horizon + depth + 1).map(|k| poisson_tail(lt, k)).collect();

    // first-passage probabilities under the positional tail
    let n = model.num_locations();
    let first_passage: Vec<Vec<f64>> = (0..n)
        .map(|l| {
            let d = forward_step_vector(model, tail, l, horizon);
            let d: Vec<f64> = d.iter().map(to_f64).collect();
            (0..=horizon).map(|j| if j == 0 { d[0] } else { d[j] - d[j - 1] }).collect()
        })
        .collect();

    fn node(model: &CtmdpModel, l: Loc, k: usize, depth: usize, g: &[f64], fp: &[Vec<f64>]) -> f64 {
        if model.is_goal(l) {
            return g[k];
        }
        if k == depth {
            return fp[l].iter().enumerate().skip(1).map(|(j, f)| f * g[k + j]).sum();
        }
        let values = enabled(model, l).into_iter().map(|a| {
            step_row(model, l, a)
                .into_iter()
                .map(|(to, p)| to_f64(&p) * node(model, to, k + 1, depth, g, fp))
                .sum::<f64>()
        });
        match model.player(l) {
            Player::Max => values.fold(f64::NEG_INFINITY, f64::max),
            Player::Min => values.fold(f64::INFINITY, f64::min),
        }
    }

    model
        .initial()
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.is_zero())
        .map(|(l, p)| to_f64(p) * node(model, l, 0, depth, &g, &first_passage))
        .sum()
}

/// Brute-force bounds from explicit paths of at most `len` steps on a
/// uniform model under a deterministic scheduler: the probability of the
/// goal-reaching paths found so far (a lower bound on reachability) and the
/// probability of runs that provably miss the goal by time `t` (so one
/// minus it is an upper bound).
pub fn path_bounds(model: &CtmdpModel, scheduler: &Scheduler, t: f64, len: usize) -> (f64, f64) {
    let lt = to_f64(&uniform_rate(model).expect("uniform model")) * t;
    let mut reach = 0.0;
    let mut miss = 0.0;
    let mut frontier: Vec<(Loc, f64)> = model
        .initial()
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.is_zero())
        .map(|(l, p)| (l, to_f64(p)))
        .collect();
    for k in 0..=len {
        let mut next = Vec::new();
        for (l, p) in frontier {
            if model.is_goal(l) {
                reach += p * poisson_tail(lt, k);
                continue;
            }
            // exactly k jumps by time t: still outside the goal
            miss += p * poisson_pmf(lt, k);
            if k == len {
                continue;
            }
            let a = scheduler.action(k, l).expect("deterministic scheduler");
            for (to, q) in step_row(model, l, a) {
                next.push((to, p * to_f64(&q)));
            }
        }
        frontier = next;
    }
    (reach, miss)
}

/// Small models used by the property tests: the fixture, its game
/// variant, its uniformisation, and seeded random models.
pub fn corpus() -> Vec<CtmdpModel> {
    let mut out = vec![
        fixtures::example_model(),
        fixtures::example_game(),
        uniformise(&fixtures::example_model()).uniform_model,
    ];
    let mut r = rng(2024);
    for i in 0..6 {
        let n = r.random_range(2..=5);
        let k = r.random_range(1..=3);
        out.push(random_model(&mut r, n, k, i % 3 == 2));
    }
    for i in 0..6 {
        let n = r.random_range(2..=5);
        let k = r.random_range(1..=3);
        out.push(random_uniform_model(&mut r, n, k, i % 3 == 2));
    }
    out
}

/// Corpus models that are CTMDPs with a single optimising player.
pub fn mdp_corpus() -> Vec<CtmdpModel> {
    corpus().into_iter().filter(|m| !m.is_game()).collect()
}
