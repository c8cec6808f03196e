//! Classical values and max-sat against naive enumeration.

use std::collections::BTreeMap;

use nonlocal::gamedef::catalog::{
    cabello_extended, cabello_restricted, contradiction_subset, four_party_game, fourteen_equalities, mermin_ghz,
};
use nonlocal::gamedef::{NonlocalGame, ParityConstraint};
use nonlocal::lhvsolve::{classical_value, noncontextual_maxsat, win_probability, DeterministicStrategy, SolverConfig};
use nonlocal::qsim::{ObservableKind, Sign, SiteObservable};
use nonlocal::Prob;
use proptest::prelude::*;

/// Maximum of `win_probability` over every deterministic strategy.
fn brute_force_value(game: &NonlocalGame) -> (Prob, usize) {
    let slots: Vec<(usize, usize, usize)> = game
        .parties()
        .iter()
        .enumerate()
        .flat_map(|(p, party)| {
            (0..party.questions.len()).flat_map(move |q| (0..party.arity(q)).map(move |k| (p, q, k)))
        })
        .collect();
    assert!(slots.len() <= 16, "too many answer bits for brute force");
    let mut best = Prob::from_integer(0);
    let mut count = 0;
    for mask in 0u32..(1 << slots.len()) {
        let mut s = DeterministicStrategy::from_fn(game, |p, q| vec![Sign::Plus; game.parties()[p].arity(q)]);
        for (bit, (p, q, k)) in slots.iter().enumerate() {
            s.answers[*p][*q][*k] = Sign::from_bit((mask >> bit) & 1 == 1);
        }
        best = best.max(win_probability(game, &s).unwrap());
        count += 1;
    }
    (best, count)
}

#[test]
fn best_response_matches_full_enumeration() {
    for (game, size) in [(cabello_restricted(), 4096), (mermin_ghz(), 64), (four_party_game(), 4096)] {
        let (oracle, count) = brute_force_value(&game);
        assert_eq!(count, size, "{}", game.id());
        let solved = classical_value(&game, &SolverConfig::default()).unwrap();
        assert_eq!(solved.value, oracle, "{}", game.id());
        assert_eq!(solved.joint_strategies, size as u128);
        for s in &solved.optimal_strategies {
            assert_eq!(win_probability(&game, s).unwrap(), oracle);
        }
    }
}

#[test]
fn enumerated_values() {
    assert_eq!(brute_force_value(&cabello_restricted()).0, Prob::from_integer(1));
    assert_eq!(brute_force_value(&mermin_ghz()).0, Prob::new(3, 4));
    assert_eq!(brute_force_value(&four_party_game()).0, Prob::new(6, 7));
}

/// With weights renormalized after dropping context `i` of weight `w`, the
/// value can move either way but stays within `[(v - w)/(1 - w), v/(1 - w)]`;
/// without renormalization it never increases.
#[test]
fn removing_a_context_stays_within_renormalized_bounds() {
    let cfg = SolverConfig::default();
    let one = Prob::from_integer(1);
    for game in [cabello_restricted(), mermin_ghz(), four_party_game()] {
        let full = classical_value(&game, &cfg).unwrap().value;
        for i in 0..game.contexts().len() {
            let w = game.contexts()[i].weight;
            let v = classical_value(&game.without_context(i).unwrap(), &cfg).unwrap().value;
            let label = &game.contexts()[i].label;
            assert!(v >= (full - w) / (one - w), "{} without {label}: {v}", game.id());
            assert!(v * (one - w) <= full, "{} without {label}: {v}", game.id());
        }
    }
}

#[test]
fn renormalized_value_can_drop() {
    let game = four_party_game();
    let smaller = game.without_context(0).unwrap();
    let v = classical_value(&smaller, &SolverConfig::default()).unwrap().value;
    assert_eq!(v, Prob::new(11, 13));
    assert!(v < classical_value(&game, &SolverConfig::default()).unwrap().value);
}

/// Each side's question is private to one relation, so one side can always
/// repair the parity of its partner's answers.
#[test]
fn extended_game_has_a_perfect_classical_strategy() {
    let game = cabello_extended();
    for side in 0..2 {
        let mut owners = game.contexts().iter().map(|c| c.questions[side]).collect::<Vec<_>>();
        owners.sort_unstable();
        owners.dedup();
        assert_eq!(owners.len(), game.contexts().len());
    }
    let mut s = DeterministicStrategy::from_fn(&game, |p, q| vec![Sign::Plus; game.parties()[p].arity(q)]);
    for (ci, ctx) in game.contexts().iter().enumerate() {
        if !s.wins(&game, ci).unwrap() {
            s.answers[1][ctx.questions[1]][0] = Sign::Minus;
        }
    }
    assert_eq!(win_probability(&game, &s).unwrap(), Prob::from_integer(1));
    let solved = classical_value(&game, &SolverConfig { workers: 4, ..SolverConfig::default() }).unwrap();
    assert_eq!(solved.value, Prob::from_integer(1));
}

fn naive_maxsat(constraints: &[ParityConstraint]) -> (usize, usize) {
    let mut vars: Vec<SiteObservable> = constraints.iter().flat_map(|c| c.vars().to_vec()).collect();
    vars.sort();
    vars.dedup();
    let (mut best, mut witnesses) = (0, 0);
    for mask in 0usize..(1 << vars.len()) {
        let assignment: BTreeMap<SiteObservable, Sign> =
            vars.iter().enumerate().map(|(i, v)| (*v, Sign::from_bit((mask >> i) & 1 == 1))).collect();
        let satisfied = constraints
            .iter()
            .filter(|c| {
                let product = Sign::product(c.vars().iter().map(|v| assignment[v]));
                product == c.sign()
            })
            .count();
        if satisfied > best {
            best = satisfied;
            witnesses = 0;
        }
        if satisfied == best {
            witnesses += 1;
        }
    }
    (best, witnesses)
}

#[test]
fn maxsat_over_catalog_sets() {
    let fourteen = noncontextual_maxsat(&fourteen_equalities()).unwrap();
    assert_eq!((fourteen.max_satisfied, fourteen.witness_count()), naive_maxsat(&fourteen_equalities()));
    assert_eq!(fourteen.max_satisfied, 12);
    assert_eq!(fourteen.vars.len(), 12);
    let four = noncontextual_maxsat(&contradiction_subset()).unwrap();
    assert_eq!((four.max_satisfied, four.witness_count()), naive_maxsat(&contradiction_subset()));
    assert_eq!((four.max_satisfied, four.vars.len()), (3, 7));
}

#[test]
fn every_fourteen_witness_breaks_two_relations() {
    let constraints = fourteen_equalities();
    let r = noncontextual_maxsat(&constraints).unwrap();
    assert!(r.witness_count() > 0);
    for w in r.witnesses() {
        assert_eq!(w.len(), 12);
        let broken = constraints.iter().filter(|c| !c.holds_with(|v| w.get(&v).copied()).unwrap()).count();
        assert_eq!(broken, 2);
    }
}

fn random_constraint() -> impl Strategy<Value = ParityConstraint> {
    (proptest::collection::btree_set((0usize..3, 1usize..=4), 1..=4), any::<bool>()).prop_map(|(vars, minus)| {
        let vars = vars.into_iter().map(|(k, q)| SiteObservable::new(ObservableKind::ALL[k], q)).collect();
        ParityConstraint::new(vars, Sign::from_bit(minus)).unwrap()
    })
}

proptest! {
    #[test]
    fn maxsat_matches_naive_enumeration(constraints in proptest::collection::vec(random_constraint(), 1..8)) {
        let r = noncontextual_maxsat(&constraints).unwrap();
        prop_assert_eq!((r.max_satisfied, r.witness_count()), naive_maxsat(&constraints));
        for w in r.witnesses() {
            let ok = constraints.iter().filter(|c| c.holds_with(|v| w.get(&v).copied()).unwrap()).count();
            prop_assert_eq!(ok, r.max_satisfied);
        }
    }
}
