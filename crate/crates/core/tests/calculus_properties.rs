mod common;

use common::reachable;
use lsc::calculus::{decompose_all, run_calculus, step_calculus, StepLabel, Strategy};
use lsc::harness::reference_eval;
use lsc::syntax::{alpha_eq, free_vars, unfold};
use proptest::prelude::*;

proptest! {
    #[test]
    fn at_most_one_redex(st in reachable(20, 12)) {
        let (s, t) = st;
        prop_assert!(decompose_all(&t, s).len() <= 1);
        prop_assert_eq!(decompose_all(&t, s).is_empty(), step_calculus(&t, s).is_none());
    }

    #[test]
    fn reduction_keeps_terms_closed(st in reachable(20, 12)) {
        let (s, t) = st;
        if let Some((_, next)) = step_calculus(&t, s) {
            prop_assert!(free_vars(&next).is_empty());
        }
    }

    #[test]
    fn exponential_steps_keep_the_unfolding(st in reachable(20, 12)) {
        let (s, t) = st;
        if let Some((StepLabel::Exp, next)) = step_calculus(&t, s) {
            prop_assert!(alpha_eq(unfold(&next).as_term(), unfold(&t).as_term()));
        }
    }

    #[test]
    fn value_strategies_agree_on_results(p in common::closed_pure(18)) {
        let lr = reference_eval(&p, Strategy::ValueLR, 300).unwrap();
        let rl = reference_eval(&p, Strategy::ValueRL, 300).unwrap();
        if let (Some(a), Some(b)) = (&lr, &rl) {
            prop_assert!(alpha_eq(a, b));
        }
    }

    #[test]
    fn need_never_takes_more_multiplicative_steps_than_name(p in common::closed_pure(18)) {
        let name = reference_eval(&p, Strategy::Name, 400).unwrap();
        let need = reference_eval(&p, Strategy::Need, 400).unwrap();
        let m = |s| run_calculus(p.as_term(), s, 400).iter().filter(|(l, _)| *l == StepLabel::Mul).count();
        if name.is_some() && need.is_some() {
            prop_assert!(m(Strategy::Need) <= m(Strategy::Name));
        }
    }
}
