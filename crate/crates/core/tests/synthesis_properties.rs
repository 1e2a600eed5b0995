mod common;

use common::{history_tree_value, rng, EPS};
use ctmdp_core::generate::{random_model, random_randomized_scheduler, random_uniform_model};
use ctmdp_core::rational::{ratio, to_f64};
use ctmdp_core::synthesis::GreedyContext;
use ctmdp_core::{
    evaluate, evaluate_general, evaluate_uniform, lift_scheduler, synth_enumerate, synth_uniform_dp, uniformise,
    CtmdpModel, EvalOptions, Rational, Scheduler,
};
use rand::Rng;

/// A time bound for which the refined greed bound is at most 3.
fn short_time(model: &CtmdpModel) -> f64 {
    let ctx = GreedyContext::new(model);
    let mut lt = ratio(1, 2);
    if let Some(mu) = &ctx.analysis.discriminator {
        let cap = ratio(3, 1) * mu / (Rational::from_integer(1.into()) + mu) * ratio(99, 100);
        if cap < lt {
            lt = cap;
        }
    }
    let t = to_f64(&(lt / &ctx.rate));
    assert!(ctx.greed_bound(t).unwrap().refined <= 3);
    t
}

fn tail_of(s: &Scheduler) -> Vec<usize> {
    let n = s.preamble_len();
    (0..s.num_locations()).map(|l| s.action(n, l).unwrap()).collect()
}

#[test]
fn dp_matches_history_dependent_brute_force() {
    let mut r = rng(99);
    for i in 0..12 {
        let n = r.random_range(2..=4);
        let k = r.random_range(1..=2);
        let model = random_uniform_model(&mut r, n, k, i % 2 == 1);
        let t = short_time(&model);
        let dp = synth_uniform_dp(&model, t, EPS).unwrap();
        let tail = GreedyContext::new(&model).standard_greedy;
        let oracle = history_tree_value(&model, t, 3, &tail);
        assert!(
            (dp.value.mid() - oracle).abs() <= 2.0 * EPS,
            "{} (game: {}): dp {:?} vs history tree {oracle}",
            model.name(),
            model.is_game(),
            dp.value
        );
    }
}

#[test]
fn dp_on_larger_horizons_dominates_history_trees() {
    // with a long horizon the depth-3 search space is a strict subset
    let mut r = rng(5);
    for _ in 0..8 {
        let n = r.random_range(2..=4);
        let model = random_uniform_model(&mut r, n, 2, false);
        let dp = synth_uniform_dp(&model, 1.0, EPS).unwrap();
        let tail = GreedyContext::new(&model).standard_greedy;
        let oracle = history_tree_value(&model, 1.0, 3, &tail);
        assert!(oracle <= dp.value.mid() + 2.0 * EPS, "{}: {oracle} > {:?}", model.name(), dp.value);
    }
}

#[test]
fn randomization_does_not_help() {
    let opts = EvalOptions::default();
    let mut r = rng(17);
    for _ in 0..4 {
        let n = r.random_range(2..=4);
        let k = r.random_range(2..=3);
        let model = random_uniform_model(&mut r, n, k, false);
        let best = synth_uniform_dp(&model, 1.0, EPS).unwrap().value;
        for _ in 0..500 {
            let s = random_randomized_scheduler(&mut r, &model, 3);
            let v = evaluate_uniform(&model, &s, 1.0, &opts).unwrap().value;
            assert!(v.mid() <= best.mid() + 2.0 * EPS, "{}: {v:?} beats {best:?}", model.name());
        }
    }
}

#[test]
fn dp_is_deterministic() {
    let mut r = rng(23);
    for game in [false, true] {
        let model = random_uniform_model(&mut r, 4, 3, game);
        let a = synth_uniform_dp(&model, 1.5, EPS).unwrap();
        let b = synth_uniform_dp(&model, 1.5, EPS).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn dp_tail_agrees_on_copies() {
    let mut r = rng(31);
    for _ in 0..6 {
        let n = r.random_range(2..=4);
        let model = random_model(&mut r, n, 2, false);
        let u = uniformise(&model);
        let dp = synth_uniform_dp(&u.uniform_model, 1.0, EPS).unwrap();
        let tail = tail_of(&dp.scheduler.combined());
        for l in 0..u.source_locations() {
            assert_eq!(tail[l], tail[u.counterpart(l)], "{} at {l}", model.name());
        }
    }
}

#[test]
fn synthesized_schedulers_lift_without_loss() {
    let opts = EvalOptions::default();
    let mut r = rng(37);
    for _ in 0..6 {
        let n = r.random_range(2..=4);
        let model = random_model(&mut r, n, 2, false);
        let u = uniformise(&model);
        let res = synth_enumerate(&model, 1.0, EPS, 2).unwrap();
        let s = res.scheduler.combined();
        let direct = evaluate_general(&model, &s, 1.0, &opts).unwrap().value;
        let lifted = evaluate_uniform(&u.uniform_model, &lift_scheduler(&s, &u), 1.0, &opts).unwrap().value;
        assert!((direct.mid() - lifted.mid()).abs() <= 2.0 * EPS, "{}: {direct:?} vs {lifted:?}", model.name());
        assert_eq!(res.value, direct);
    }
}

#[test]
fn enumeration_never_beats_dp_on_uniform_models() {
    let mut r = rng(41);
    for _ in 0..8 {
        let n = r.random_range(2..=4);
        let model = random_uniform_model(&mut r, n, 2, false);
        let dp = synth_uniform_dp(&model, 1.0, EPS).unwrap();
        let en = synth_enumerate(&model, 1.0, EPS, 3).unwrap();
        assert!(en.value.mid() <= dp.value.mid() + 2.0 * EPS, "{}", model.name());
        let greedy = evaluate(&model, &GreedyContext::new(&model).scheduler(), 1.0, &EvalOptions::default())
            .unwrap()
            .value;
        assert!(en.value.mid() >= greedy.mid() - 2.0 * EPS, "{}", model.name());
    }
}
