mod common;

use ctmdp_core::rational::{int, ratio};
use ctmdp_core::{parse_model, serialize_model, uniformise, CtmdpModel, Location, Player, Rational, Transition};
use num::{One, Zero};
use proptest::prelude::*;

/// Structurally arbitrary valid models with fractional rates, mixed
/// players and a spread-out initial distribution.
fn arb_model() -> impl Strategy<Value = CtmdpModel> {
    (2usize..6, 1usize..4).prop_flat_map(|(n, k)| {
        let rates = prop::collection::vec(prop::collection::vec((0i64..4, 1i64..5), n * k), n);
        let players = prop::collection::vec(any::<bool>(), n);
        let init = prop::collection::vec(0i64..4, n);
        (Just(n), Just(k), rates, players, init).prop_map(|(n, k, rates, players, init)| {
            let goal = n - 1;
            let locations = (0..n)
                .map(|l| Location {
                    id: format!("loc{l}"),
                    player: if players[l] && l != goal { Player::Min } else { Player::Max },
                    goal: l == goal,
                })
                .collect();
            let actions = (0..k).map(|a| format!("act{a}")).collect();
            let mut transitions = vec![Transition { from: goal, action: 0, to: goal, rate: ratio(7, 2) }];
            for l in 0..goal {
                for a in 0..k {
                    for to in 0..n {
                        let (num, den) = rates[l][a * n + to];
                        // keep action 0 enabled everywhere
                        let num = if a == 0 && to == goal { num.max(1) } else { num };
                        if num > 0 {
                            transitions.push(Transition { from: l, action: a, to, rate: ratio(num, den) });
                        }
                    }
                }
            }
            let weights: Vec<i64> = init.iter().map(|w| w + 1).collect();
            let total: i64 = weights.iter().sum();
            let initial = weights.iter().map(|w| ratio(*w, total)).collect();
            CtmdpModel::new("arb", locations, actions, transitions, initial).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(model in arb_model()) {
        prop_assert!(model.validate().is_empty());
        let back = parse_model(&serialize_model(&model)).unwrap();
        prop_assert_eq!(back, model);
    }

    #[test]
    fn embedded_rows_sum_to_one(model in arb_model()) {
        let p = model.embedded_probabilities();
        for l in 0..model.num_locations() {
            for a in model.enabled(l) {
                let total = p.row(l, a).unwrap().iter().fold(Rational::zero(), |acc, (_, q)| acc + q);
                prop_assert_eq!(total, Rational::one());
            }
        }
    }

    #[test]
    fn absorb_goal_is_idempotent(model in arb_model()) {
        let once = model.absorb_goal();
        prop_assert!(once.validate().is_empty());
        prop_assert_eq!(once.absorb_goal(), once.clone());
    }

    #[test]
    fn uniformisation_has_uniform_exit_rates(model in arb_model()) {
        let u = uniformise(&model);
        for l in 0..u.uniform_model.num_locations() {
            for a in u.uniform_model.enabled(l) {
                prop_assert_eq!(u.uniform_model.exit_rate(l, a), &u.rate);
            }
        }
        prop_assert_eq!(common::uniform_rate(&u.uniform_model), Some(u.rate.clone()));
    }
}

#[test]
fn fixture_round_trips() {
    for model in common::corpus() {
        assert_eq!(parse_model(&serialize_model(&model)).unwrap(), model);
    }
}

#[test]
fn absorb_goal_repairs_leaky_goals() {
    let locations = vec![Location::new("x"), Location::goal("g")];
    let transitions = vec![
        Transition { from: 0, action: 0, to: 1, rate: int(2) },
        Transition { from: 1, action: 0, to: 0, rate: int(5) },
    ];
    let m = CtmdpModel::new("leaky", locations, vec!["a".into()], transitions, vec![int(1), int(0)]).unwrap();
    assert_eq!(m.validate().len(), 1);
    let fixed = m.absorb_goal();
    assert!(fixed.validate().is_empty());
    assert_eq!(fixed.successors(1, 0).len(), 1);
    assert_eq!(fixed.successors(1, 0)[0].0, 1);
}
