mod common;

use common::reachable;
use lsc::equivalence::{axiom_neighbors, replay, struct_equiv, EqTheory, EquivVerdict};
use lsc::syntax::{alpha_eq, parse, term_size, unfold, Term};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const BUDGET: usize = 20_000;

fn theory() -> impl Strategy<Value = EqTheory> {
    prop::sample::select(vec![EqTheory::Full, EqTheory::NeedEq, EqTheory::MamEq])
}

fn random_walk(t: &Term, th: EqTheory, len: usize, seed: u64) -> Term {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = term_size(t) + 2 * len + 2;
    let mut u = t.clone();
    for _ in 0..len {
        let ns = axiom_neighbors(&u, th, cap);
        match ns.choose(&mut rng) {
            Some((_, next)) => u = next.clone(),
            None => break,
        }
    }
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn axiom_steps_keep_the_unfolding(st in reachable(16, 8), th in theory()) {
        let (_, t) = st;
        for (_, u) in axiom_neighbors(&t, th, term_size(&t) + 4) {
            prop_assert!(alpha_eq(unfold(&u).as_term(), unfold(&t).as_term()));
        }
    }

    #[test]
    fn short_walks_are_found_and_replay(st in reachable(16, 8), th in theory(), len in 0..=3usize, seed in any::<u64>()) {
        let (_, t) = st;
        let u = random_walk(&t, th, len, seed);
        match struct_equiv(&t, &u, th, BUDGET) {
            EquivVerdict::Equivalent(path) => {
                let end = replay(&t, &path, th).unwrap();
                prop_assert!(alpha_eq(&end, &u), "replay ends at {end}, expected {u}");
            }
            v => prop_assert!(false, "{t} and {u}: {v:?}"),
        }
    }

    #[test]
    fn verdicts_are_symmetric(st in reachable(14, 6), th in theory(), seed in any::<u64>()) {
        let (_, t) = st;
        let u = random_walk(&t, th, 2, seed);
        let there = struct_equiv(&t, &u, th, BUDGET).is_equivalent();
        let back = struct_equiv(&u, &t, th, BUDGET).is_equivalent();
        prop_assert_eq!(there, back);
    }
}

#[test]
fn garbage_collection_example() {
    let t = parse("(\\y.y)[x<-\\z.z]").unwrap();
    let u = parse("\\y.y").unwrap();
    match struct_equiv(&t, &u, EqTheory::Full, 1000) {
        EquivVerdict::Equivalent(path) => assert_eq!(path.len(), 1),
        v => panic!("{v:?}"),
    }
}

#[test]
fn different_unfoldings_are_refuted() {
    let t = parse("(x x)[x<-\\y.y]").unwrap();
    let u = parse("(\\y.y) y").unwrap();
    assert_eq!(
        struct_equiv(&t, &u, EqTheory::Full, 1000),
        EquivVerdict::RefutedByUnfolding
    );
}
