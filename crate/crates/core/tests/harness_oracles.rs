mod common;

use std::collections::BTreeSet;

use common::closed_pure;
use lsc::calculus::Strategy;
use lsc::harness::{
    differential_run, enumerate_closed_terms, gen_closed_term, gen_corpus, reference_eval, GenConfig, HarnessError,
};
use lsc::syntax::{alpha_eq, alpha_key, free_vars, is_well_named, render, term_size, Name, PureTerm, Term};
use proptest::prelude::*;

/// Closed terms of size exactly `n` with `k` variables in scope.
fn count(n: usize, k: usize) -> u64 {
    match n {
        0 => 0,
        1 => k as u64,
        _ => count(n - 1, k + 1) + (1..n - 1).map(|i| count(i, k) * count(n - 1 - i, k)).sum::<u64>(),
    }
}

/// Substitution-based weak evaluation with capture avoidance, by value or
/// by name, independent of explicit substitutions.
struct Naive {
    fresh: usize,
    fuel: usize,
}

impl Naive {
    fn subst(&mut self, t: &Term, x: &Name, u: &Term) -> Term {
        match t {
            Term::Var(y) if y == x => u.clone(),
            Term::Var(_) => t.clone(),
            Term::App(f, a) => Term::app(self.subst(f, x, u), self.subst(a, x, u)),
            Term::Abs(y, _) if y == x => t.clone(),
            Term::Abs(y, b) => {
                if free_vars(u).contains(y) {
                    self.fresh += 1;
                    let z = Name::from(format!("v{}", self.fresh).as_str());
                    let b = self.subst(b, y, &Term::Var(z.clone()));
                    Term::abs(z, self.subst(&b, x, u))
                } else {
                    Term::abs(y.clone(), self.subst(b, x, u))
                }
            }
            Term::ESub(..) => unreachable!("pure terms only"),
        }
    }

    fn eval(&mut self, t: &Term, by_value: bool) -> Option<Term> {
        match t {
            Term::App(f, a) => {
                let f = self.eval(f, by_value)?;
                let a = if by_value {
                    self.eval(a, by_value)?
                } else {
                    (**a).clone()
                };
                let Term::Abs(x, b) = f else {
                    unreachable!("closed terms evaluate to abstractions")
                };
                self.fuel = self.fuel.checked_sub(1)?;
                let r = self.subst(&b, &x, &a);
                self.eval(&r, by_value)
            }
            _ => Some(t.clone()),
        }
    }
}

#[test]
fn enumeration_matches_an_independent_count() {
    for n in 1..=7 {
        let total: u64 = (1..=n).map(|i| count(i, 0)).sum();
        let terms = enumerate_closed_terms(n).unwrap();
        assert_eq!(terms.len() as u64, total, "size {n}");
        let keys: BTreeSet<String> = terms.iter().map(|t| alpha_key(t)).collect();
        assert_eq!(keys.len(), terms.len(), "size {n}: duplicates up to alpha");
        assert!(terms.iter().all(|t| free_vars(t).is_empty() && term_size(t) <= n));
    }
    assert_eq!(enumerate_closed_terms(4).unwrap().len(), 7);
    assert_eq!(enumerate_closed_terms(7).unwrap().len(), 201);
}

#[test]
fn enumeration_refuses_large_sizes() {
    assert!(matches!(
        enumerate_closed_terms(12),
        Err(HarnessError::SizeTooLarge { .. })
    ));
}

#[test]
fn generator_regression_values() {
    assert_eq!(render(&gen_closed_term(&GenConfig::new(1, 4))), "\\x0.x0 x0");
    let a = gen_corpus(7, 20, 25);
    assert_eq!(a, gen_corpus(7, 20, 25));
    assert_ne!(a, gen_corpus(8, 20, 25));
}

#[test]
fn reference_eval_rejects_open_terms() {
    let open = PureTerm::parse("\\x.y").unwrap();
    assert!(matches!(
        reference_eval(&open, Strategy::Need, 5),
        Err(HarnessError::OpenTerm(_))
    ));
}

#[test]
fn delta_delta_groups_agree_on_prefixes() {
    let omega = PureTerm::parse("(\\x.x x)(\\x.x x)").unwrap();
    let d = differential_run(&omega, Strategy::Need, 30).unwrap();
    assert!(d.agrees(), "{:?}", d.mismatches);
    assert!(d.reference.is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn generated_terms_are_closed_well_named_and_bounded(seed in any::<u64>(), max in 2..30usize) {
        let t = gen_closed_term(&GenConfig::new(seed, max));
        prop_assert!(free_vars(&t).is_empty());
        prop_assert!(is_well_named(&t));
        prop_assert!(term_size(&t) <= max);
    }

    #[test]
    fn reference_eval_agrees_with_naive_substitution(p in closed_pure(20)) {
        for (s, by_value) in [(Strategy::Name, false), (Strategy::Need, false), (Strategy::ValueLR, true), (Strategy::ValueRL, true)] {
            let ours = reference_eval(&p, s, 800).unwrap();
            let naive = Naive { fresh: 0, fuel: 50 }.eval(p.as_term(), by_value);
            if let (Some(ours), Some(naive)) = (&ours, &naive) {
                if s != Strategy::Need {
                    prop_assert!(alpha_eq(ours.as_term(), naive), "{s}: {ours} vs {}", render(naive));
                }
            }
            if naive.is_some() {
                prop_assert!(ours.is_some(), "{s}: the oracle stops but ours does not");
            }
        }
    }
}
