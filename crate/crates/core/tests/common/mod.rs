#![allow(dead_code)]

use lsc::calculus::{step_calculus, Strategy as EvalStrategy};
use lsc::harness::{gen_closed_term, GenConfig};
use lsc::syntax::{PureTerm, Term};
use proptest::prelude::*;

const NAMES: [&str; 4] = ["x", "y", "z", "w"];

/// Arbitrary terms over a small name pool, open or closed, with
/// substitutions anywhere.
pub fn any_term() -> impl Strategy<Value = Term> {
    let leaf = prop::sample::select(&NAMES[..]).prop_map(Term::var);
    leaf.prop_recursive(5, 24, 2, |inner| {
        prop_oneof![
            (prop::sample::select(&NAMES[..]), inner.clone()).prop_map(|(x, b)| Term::abs(x, b)),
            (inner.clone(), inner.clone()).prop_map(|(f, a)| Term::app(f, a)),
            (inner.clone(), prop::sample::select(&NAMES[..]), inner).prop_map(|(b, x, u)| Term::esub(b, x, u)),
        ]
    })
}

pub fn closed_pure(max_size: usize) -> impl Strategy<Value = PureTerm> {
    any::<u64>().prop_map(move |seed| gen_closed_term(&GenConfig::new(seed, max_size)))
}

pub fn strategy() -> impl Strategy<Value = EvalStrategy> {
    prop::sample::select(&EvalStrategy::ALL[..])
}

/// A closed term reached from a random closed pure term in up to `steps`
/// calculus steps.
pub fn reachable(max_size: usize, steps: usize) -> impl Strategy<Value = (EvalStrategy, Term)> {
    (closed_pure(max_size), strategy(), 0..=steps).prop_map(|(p, s, n)| {
        let mut t: Term = p.into_term();
        for _ in 0..n {
            match step_calculus(&t, s) {
                Some((_, next)) => t = next,
                None => break,
            }
        }
        (s, t)
    })
}
