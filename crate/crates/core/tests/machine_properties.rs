mod common;

use common::closed_pure;
use lsc::calculus::{run_calculus, Strategy as EvalStrategy};
use lsc::harness::{differential_run, machines_of};
use lsc::machines::{
    check_machine_invariants, decode_state, execute, inject, run_machine, step_machine, MachineId, Outcome,
};
use lsc::syntax::{alpha_eq, free_vars, unfold, PureTerm};
use proptest::prelude::*;

fn machine() -> impl Strategy<Value = MachineId> {
    prop::sample::select(&MachineId::ALL[..])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn injection_decodes_to_the_input(p in closed_pure(25), m in machine()) {
        let s = inject(m, &p).unwrap();
        prop_assert!(alpha_eq(&decode_state(&s).unwrap(), p.as_term()));
    }

    #[test]
    fn decodings_stay_closed_and_commutative_steps_keep_them(p in closed_pure(20), m in machine()) {
        let exec = execute(m, &p, 150).unwrap();
        for (i, label) in exec.labels.iter().enumerate() {
            let pre = decode_state(&exec.states[i]).unwrap();
            let post = decode_state(&exec.states[i + 1]).unwrap();
            prop_assert!(free_vars(&post).is_empty());
            if label.is_commutative() {
                prop_assert!(alpha_eq(unfold(&pre).as_term(), unfold(&post).as_term()));
            }
        }
    }

    #[test]
    fn principal_steps_track_the_calculus(p in closed_pure(20), m in machine()) {
        let exec = execute(m, &p, 150).unwrap();
        let principal: Vec<_> = exec.labels.iter().filter_map(|l| l.calculus_label()).collect();
        let calc: Vec<_> = run_calculus(p.as_term(), m.strategy(), principal.len()).into_iter().map(|(l, _)| l).collect();
        prop_assert_eq!(&principal, &calc);
        if exec.outcome == Outcome::Final {
            prop_assert!(run_calculus(p.as_term(), m.strategy(), principal.len() + 1).len() == principal.len());
        }
    }

    #[test]
    fn invariants_hold_along_runs(p in closed_pure(20), m in machine()) {
        let exec = execute(m, &p, 120).unwrap();
        let mut muls = 0;
        for (i, s) in exec.states.iter().enumerate() {
            if i > 0 && exec.labels[i - 1].is_multiplicative() {
                muls += 1;
            }
            let r = check_machine_invariants(s, Some(muls));
            prop_assert!(r.all_hold(), "state {i}: {:?}", r.failures());
        }
    }

    #[test]
    fn groups_agree_differentially(p in closed_pure(20), s in common::strategy()) {
        let d = differential_run(&p, s, 200).unwrap();
        prop_assert!(d.agrees(), "{:?}", d.mismatches);
    }

    #[test]
    fn stepping_is_deterministic(p in closed_pure(20), m in machine()) {
        let a = execute(m, &p, 80).unwrap();
        let b = execute(m, &p, 80).unwrap();
        prop_assert_eq!(a.labels, b.labels);
    }
}

#[test]
fn final_states_do_not_step() {
    for m in MachineId::ALL {
        let exec = execute(m, &PureTerm::parse("(\\x.x)(\\y.y)").unwrap(), 50).unwrap();
        assert_eq!(exec.outcome, Outcome::Final);
        assert!(step_machine(exec.last()).unwrap().is_none());
    }
}

#[test]
fn machines_cover_every_strategy() {
    for s in EvalStrategy::ALL {
        assert!(!machines_of(s).is_empty());
    }
    assert_eq!(
        machines_of(EvalStrategy::Need),
        [MachineId::Wam, MachineId::MergedWam, MachineId::PointingWam]
    );
}

#[test]
fn traces_serialize_one_json_object_per_line() {
    let tr = run_machine(MachineId::SplitCek, &PureTerm::parse("(\\x.x x)(\\y.y)").unwrap(), 40).unwrap();
    for line in tr.to_jsonl().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.is_object());
    }
}
