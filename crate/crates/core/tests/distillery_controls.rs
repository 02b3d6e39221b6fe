//! The verifier must reject corrupted traces.

use lsc::distillery::{complexity_report, verify_step, verify_trace, Verdict, DEFAULT_BUDGET};
use lsc::machines::{run_machine, MachineId, Trace, TransitionLabel};
use lsc::syntax::{parse, PureTerm};

fn trace(m: MachineId, src: &str) -> Trace {
    run_machine(m, &PureTerm::parse(src).unwrap(), 200).unwrap()
}

const SOURCE: &str = "(\\x.x x x)((\\i.i)(\\j.j))";

#[test]
fn clean_traces_pass() {
    for m in MachineId::ALL {
        let r = verify_trace(&trace(m, SOURCE), DEFAULT_BUDGET);
        assert!(r.all_pass(), "{m}: {:?}", r.failures);
    }
}

#[test]
fn relabelled_commutative_steps_fail() {
    for m in MachineId::ALL {
        let tr = trace(m, SOURCE);
        let mut step = tr.steps.iter().find(|s| s.label.is_commutative()).unwrap().clone();
        step.label = TransitionLabel::E;
        assert!(matches!(verify_step(&step, DEFAULT_BUDGET), Verdict::Fail(_)), "{m}");
    }
}

#[test]
fn principal_steps_that_change_nothing_fail() {
    for m in MachineId::ALL {
        let tr = trace(m, SOURCE);
        let mut step = tr
            .steps
            .iter()
            .find(|s| s.label.calculus_label().is_some())
            .unwrap()
            .clone();
        step.decoded_post = step.decoded_pre.clone();
        assert!(!verify_step(&step, DEFAULT_BUDGET).is_pass(), "{m}");
    }
}

#[test]
fn commutative_steps_with_a_foreign_result_fail() {
    for m in MachineId::ALL {
        let tr = trace(m, SOURCE);
        let mut step = tr.steps.iter().find(|s| s.label.is_commutative()).unwrap().clone();
        step.decoded_post = parse("\\q.q q").unwrap();
        assert!(matches!(verify_step(&step, DEFAULT_BUDGET), Verdict::Fail(_)), "{m}");
    }
}

#[test]
fn dropping_a_principal_step_breaks_the_counts() {
    for m in MachineId::ALL {
        let mut tr = trace(m, SOURCE);
        let k = tr.steps.iter().position(|s| s.label.is_multiplicative()).unwrap();
        tr.steps.remove(k);
        let r = verify_trace(&tr, 1000);
        assert!(!r.all_pass(), "{m}");
    }
}

#[test]
fn complexity_of_clean_traces() {
    for m in MachineId::ALL {
        let r = complexity_report(&trace(m, SOURCE));
        assert!(r.exact_checks_hold(), "{m}: {r:?}");
        assert!(r.ratio <= 4.0);
    }
}
