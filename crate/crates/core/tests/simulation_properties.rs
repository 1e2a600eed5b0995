mod common;

use std::collections::HashMap;

use common::rng;
use ctmdp_core::generate::{random_model, random_randomized_scheduler};
use ctmdp_core::scheduler::HistoryPolicy;
use ctmdp_core::{
    estimate, evaluate, fixtures, Choice, EvalOptions, HistoryScheduler, Scheduler, TimeAbstractPath,
    ValueInterval,
};

/// The confidence interval must meet the certified interval.
fn assert_consistent(model: &ctmdp_core::CtmdpModel, policy: &dyn HistoryPolicy, exact: ValueInterval, seed: u64) {
    // 99.99% intervals keep this deterministic test far from flaky seeds
    let e = estimate(model, policy, 1.0, 50_000, seed, 0.9999).unwrap();
    assert!(e.lo() <= exact.hi && exact.lo <= e.hi(), "{}: {exact:?} misses [{}, {}]", model.name(), e.lo(), e.hi());
}

#[test]
fn every_scheduler_class_drives_the_simulator() {
    let model = fixtures::example_model();
    let opts = EvalOptions::default();

    let positional = Scheduler::Positional(vec![1, 0, 0]);
    let counting = Scheduler::Counting { preamble: vec![vec![0, 1, 0], vec![1, 1, 0]], tail: vec![1, 0, 0] };
    let randomized = Scheduler::RandomizedCounting {
        preamble: vec![vec![
            Choice::Random(vec![(0, common_half()), (1, common_half())]),
            Choice::Action(1),
            Choice::Action(0),
        ]],
        tail: vec![Choice::Action(1), Choice::Action(0), Choice::Action(0)],
    };
    for (i, s) in [positional, counting.clone(), randomized].iter().enumerate() {
        let v = evaluate(&model, s, 1.0, &opts).unwrap().value;
        assert_consistent(&model, s, v, 100 + i as u64);
    }

    // a history table spelling out the counting scheduler for its first
    // two steps behaves exactly like it
    let mut table = HashMap::new();
    table.insert(TimeAbstractPath::new(0), Choice::Action(0));
    table.insert(TimeAbstractPath::new(1), Choice::Action(1));
    for (a, to) in [(0, 1), (1, 1), (1, 0), (0, 0)] {
        let mut p = TimeAbstractPath::new(0);
        p.push(a, to);
        let c = counting.choice(1, to);
        table.insert(p, c);
    }
    let history = HistoryScheduler { table, fallback: counting.clone() };
    let v = evaluate(&model, &counting, 1.0, &opts).unwrap().value;
    assert_consistent(&model, &history, v, 200);
}

fn common_half() -> ctmdp_core::Rational {
    ctmdp_core::rational::ratio(1, 2)
}

#[test]
fn estimates_track_general_models() {
    let opts = EvalOptions::default();
    let mut r = rng(8);
    for i in 0..4 {
        let model = random_model(&mut r, 4, 2, false);
        let s = random_randomized_scheduler(&mut r, &model, 2);
        let v = evaluate(&model, &s, 1.0, &opts).unwrap().value;
        assert_consistent(&model, &s, v, 300 + i);
    }
}

#[test]
fn estimates_are_bit_reproducible() {
    let model = fixtures::example_model();
    let s = Scheduler::Positional(vec![1, 0, 0]);
    let a = estimate(&model, &s, 0.5, 10_000, 77, 0.99).unwrap();
    let b = estimate(&model, &s, 0.5, 10_000, 77, 0.99).unwrap();
    assert_eq!(a, b);
    let c = estimate(&model, &s, 0.5, 10_000, 78, 0.99).unwrap();
    assert_ne!(a.mean, c.mean);
}
