//! Seeded random models and schedulers for property tests and benchmarks.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::model::{CtmdpModel, Location, Player, Transition};
use crate::rational::{int, ratio, Rational};
use crate::scheduler::{Choice, Scheduler};

/// A uniform model with `locations` locations, the last one being the
/// absorbing goal, and up to `actions` actions per location. Action `0` is
/// enabled everywhere. With `game` set, non-goal locations are assigned to
/// random players.
pub fn random_uniform_model<R: Rng + ?Sized>(rng: &mut R, locations: usize, actions: usize, game: bool) -> CtmdpModel {
    assert!(locations >= 2 && actions >= 1);
    let rate: i64 = rng.random_range(2..=6);
    let goal = locations - 1;
    let locs: Vec<Location> = (0..locations)
        .map(|l| Location {
            id: format!("s{l}"),
            player: if game && l != goal && rng.random_bool(0.5) { Player::Min } else { Player::Max },
            goal: l == goal,
        })
        .collect();
    let acts: Vec<String> = (0..actions).map(|a| format!("a{a}")).collect();

    let mut transitions = vec![Transition { from: goal, action: 0, to: goal, rate: int(rate) }];
    for l in 0..goal {
        for a in 0..actions {
            if a > 0 && !rng.random_bool(0.75) {
                continue;
            }
            let mut weights = vec![0i64; locations];
            let mut left = rate;
            let targets = rng.random_range(1..=locations.min(3));
            for _ in 0..targets {
                if left == 0 {
                    break;
                }
                let to = rng.random_range(0..locations);
                let r = rng.random_range(1..=left);
                weights[to] += r;
                left -= r;
            }
            weights[l] += left;
            for (to, w) in weights.into_iter().enumerate().filter(|(_, w)| *w > 0) {
                transitions.push(Transition { from: l, action: a, to, rate: int(w) });
            }
        }
    }

    let mut initial = vec![int(0); locations];
    if rng.random_bool(0.5) {
        initial[0] = int(1);
    } else {
        let first = rng.random_range(0..goal);
        let second = rng.random_range(0..locations);
        initial[first] = ratio(1, 2);
        initial[second] += ratio(1, 2);
    }
    CtmdpModel::new(format!("random-{locations}x{actions}"), locs, acts, transitions, initial)
        .expect("generated models are structurally valid")
}

/// A generally non-uniform model: like [`random_uniform_model`] but every
/// enabled action gets its own integer exit rate in `1..=6`, and self-loops
/// are only added when drawn. The goal is absorbing.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, locations: usize, actions: usize, game: bool) -> CtmdpModel {
    assert!(locations >= 2 && actions >= 1);
    let goal = locations - 1;
    let locs: Vec<Location> = (0..locations)
        .map(|l| Location {
            id: format!("s{l}"),
            player: if game && l != goal && rng.random_bool(0.5) { Player::Min } else { Player::Max },
            goal: l == goal,
        })
        .collect();
    let acts: Vec<String> = (0..actions).map(|a| format!("a{a}")).collect();

    let mut transitions = vec![Transition { from: goal, action: 0, to: goal, rate: int(rng.random_range(1..=6)) }];
    for l in 0..goal {
        for a in 0..actions {
            if a > 0 && !rng.random_bool(0.75) {
                continue;
            }
            let mut weights = vec![0i64; locations];
            for _ in 0..rng.random_range(1..=locations.min(3)) {
                weights[rng.random_range(0..locations)] += rng.random_range(1..=3);
            }
            for (to, w) in weights.into_iter().enumerate().filter(|(_, w)| *w > 0) {
                transitions.push(Transition { from: l, action: a, to, rate: int(w) });
            }
        }
    }
    let mut initial = vec![int(0); locations];
    initial[rng.random_range(0..goal)] = int(1);
    CtmdpModel::new(format!("random-nonuniform-{locations}x{actions}"), locs, acts, transitions, initial)
        .expect("generated models are structurally valid")
}

/// A deterministic counting scheduler choosing uniformly among enabled
/// actions for every step of the preamble and the tail.
pub fn random_counting_scheduler<R: Rng + ?Sized>(rng: &mut R, model: &CtmdpModel, preamble: usize) -> Scheduler {
    let row = |rng: &mut R| -> Vec<usize> {
        (0..model.num_locations())
            .map(|l| *model.enabled_vec(l).choose(rng).expect("enabled action"))
            .collect()
    };
    let preamble = (0..preamble).map(|_| row(rng)).collect();
    Scheduler::Counting { preamble, tail: row(rng) }
}

fn random_choice<R: Rng + ?Sized>(rng: &mut R, enabled: &[usize]) -> Choice {
    if enabled.len() == 1 {
        return Choice::Action(enabled[0]);
    }
    let raw: Vec<i64> = enabled.iter().map(|_| rng.random_range(0..=4)).collect();
    let total: i64 = raw.iter().sum();
    if total == 0 {
        return Choice::Action(*enabled.choose(rng).expect("non-empty"));
    }
    Choice::Random(
        enabled
            .iter()
            .zip(raw)
            .filter(|(_, w)| *w > 0)
            .map(|(&a, w)| (a, Rational::new(w.into(), total.into())))
            .collect(),
    )
}

/// A randomized counting scheduler with random distributions in the
/// preamble and a random pure tail.
pub fn random_randomized_scheduler<R: Rng + ?Sized>(rng: &mut R, model: &CtmdpModel, preamble: usize) -> Scheduler {
    let preamble = (0..preamble)
        .map(|_| {
            (0..model.num_locations())
                .map(|l| random_choice(rng, &model.enabled_vec(l)))
                .collect()
        })
        .collect();
    let tail = (0..model.num_locations())
        .map(|l| Choice::Action(*model.enabled_vec(l).choose(rng).expect("enabled action")))
        .collect();
    Scheduler::RandomizedCounting { preamble, tail }
}
