use super::*;
use crate::calculus::run_calculus;
use crate::syntax::{alpha_eq, parse, unfold};

fn pt(s: &str) -> PureTerm {
    PureTerm::parse(s).unwrap()
}

fn t(s: &str) -> Term {
    parse(s).unwrap()
}

const SAMPLES: &[&str] = &[
    "(\\x.x)(\\y.y)",
    "(\\x.x x)(\\y.y)",
    "(\\x.\\y.x)(\\a.a)(\\b.b)",
    "(\\f.f (f (\\z.z)))(\\w.w)",
    "(\\x.(\\y.y x) (\\q.q))(\\a.\\b.a)",
    "(\\x.x x x)((\\i.i)(\\j.j))",
    "(\\k.\\l.k)((\\m.m)(\\n.n))((\\o.o o)(\\p.p))",
    "\\x.(\\y.y) x",
];

#[test]
fn kam_identity_trace() {
    let tr = run_machine(MachineId::Kam, &pt("(\\x.x)(\\y.y)"), 10).unwrap();
    use TransitionLabel::*;
    assert_eq!(tr.labels(), vec![C1, M, E]);
    assert_eq!(tr.outcome, Outcome::Final);
    assert!(alpha_eq(&tr.final_state().code, &t("\\y.y")));
}

#[test]
fn cek_identity_trace() {
    let tr = run_machine(MachineId::Cek, &pt("(\\x.x)(\\y.y)"), 10).unwrap();
    use TransitionLabel::*;
    assert_eq!(tr.labels(), vec![C1, C2, M, E]);
}

#[test]
fn every_machine_agrees_with_its_strategy() {
    for src in SAMPLES {
        let p = pt(src);
        for m in MachineId::ALL {
            let tr = run_machine(m, &p, 500).unwrap();
            assert_eq!(tr.outcome, Outcome::Final, "{m} {src}");
            let calc = run_calculus(p.as_term(), m.strategy(), 500);
            let last = calc
                .last()
                .map(|(_, t)| t.clone())
                .unwrap_or_else(|| p.as_term().clone());
            assert!(
                alpha_eq(unfold(tr.final_decoded()).as_term(), unfold(&last).as_term()),
                "{m} {src}: {} vs {}",
                render(tr.final_decoded()),
                render(&last)
            );
            assert_eq!(tr.counts.m + tr.counts.e, calc.len(), "{m} {src}");
        }
    }
}

#[test]
fn delta_delta_never_stops_and_keeps_invariants() {
    for m in MachineId::ALL {
        let exec = execute(m, &pt("(\\x.x x)(\\y.y y)"), 60).unwrap();
        assert_eq!(exec.outcome, Outcome::FuelExhausted);
        let mut muls = 0;
        for (i, s) in exec.states.iter().enumerate() {
            if i > 0 && exec.labels[i - 1].is_multiplicative() {
                muls += 1;
            }
            let r = check_machine_invariants(s, Some(muls));
            assert!(r.all_hold(), "{m} step {i}: {:?} in {}", r.failures(), render_state(s));
        }
    }
}

#[test]
fn invariants_hold_on_samples() {
    for src in SAMPLES {
        for m in MachineId::ALL {
            let exec = execute(m, &pt(src), 500).unwrap();
            let mut muls = 0;
            for (i, s) in exec.states.iter().enumerate() {
                if i > 0 && exec.labels[i - 1].is_multiplicative() {
                    muls += 1;
                }
                let r = check_machine_invariants(s, Some(muls));
                assert!(
                    r.all_hold(),
                    "{m} {src} step {i}: {:?} in {}",
                    r.failures(),
                    render_state(s)
                );
            }
        }
    }
}

#[test]
fn kam_decoding_of_a_variable_in_an_environment() {
    let mut s = inject(MachineId::Kam, &pt("\\z.z")).unwrap();
    s.code = t("x");
    let env = LocalEnv::empty().cons(Name::from("x"), Closure::new(t("\\y.y"), LocalEnv::empty()));
    s.parts = Components::Kam { env, stack: Vec::new() };
    assert_eq!(decode_state(&s).unwrap(), t("x[x<-\\y.y]"));
}

#[test]
fn merged_wam_suspends_on_a_variable() {
    let mut s = inject(MachineId::MergedWam, &pt("\\z.z")).unwrap();
    s.code = t("x");
    let outer = GlobalEntry::new(Name::from("w"), t("\\a.a"));
    s.parts = Components::MergedWam {
        stack: vec![MergedItem::Arg(t("w"))],
        env: vec![outer.clone(), GlobalEntry::new(Name::from("x"), t("\\b.b"))],
    };
    let (label, next) = step_machine(&s).unwrap().unwrap();
    assert_eq!(label, TransitionLabel::C2);
    assert_eq!(next.code, t("\\b.b"));
    match &next.parts {
        Components::MergedWam { stack, env } => {
            assert_eq!(env, &vec![outer]);
            assert_eq!(stack.last(), Some(&MergedItem::Head(Vec::new(), Name::from("x"))));
        }
        _ => unreachable!(),
    }
    assert_eq!(decode_state(&s).unwrap(), decode_state(&next).unwrap());
}

#[test]
fn duality_examples() {
    let x = Name::from("x");
    let y = Name::from("y");
    assert!(duality_check(&[], &[]));
    let env = vec![GlobalEntry::new(y.clone(), t("\\a.a")), GlobalEntry::boxed(x.clone())];
    assert!(duality_check(&env, &[(x.clone(), Vec::new())]));
    assert!(!duality_check(&env, &[]));
    assert!(!duality_check(&env, &[(y.clone(), Vec::new())]));
    assert!(!duality_check(&[], &[(x, Vec::new())]));
}

#[test]
fn pointing_box_mismatch_is_reported() {
    let mut s = inject(MachineId::PointingWam, &pt("\\z.z")).unwrap();
    s.code = t("\\b.b");
    s.parts = Components::PointingWam {
        stack: Vec::new(),
        dump: Vec::new(),
        env: vec![GlobalEntry::boxed(Name::from("x"))],
    };
    assert_eq!(decode_state(&s), Err(MachineError::DualityViolation));
    let r = check_machine_invariants(&s, None);
    assert_eq!(r.holds("duality"), Some(false));
    if let Components::PointingWam { dump, .. } = &mut s.parts {
        dump.push((Name::from("y"), Vec::new()));
    }
    assert!(matches!(step_machine(&s), Err(MachineError::MalformedState { .. })));
}

#[test]
fn cek_rejects_a_non_value_function_entry() {
    let mut s = inject(MachineId::Cek, &pt("(\\x.x)(\\y.y)")).unwrap();
    s.code = t("\\y.y");
    s.parts = Components::Cek {
        env: LocalEnv::empty(),
        stack: vec![Tagged::Fun(Closure::new(t("(\\x.x)(\\y.y)"), LocalEnv::empty()))],
    };
    let r = check_machine_invariants(&s, None);
    assert_eq!(r.holds("value"), Some(false));
}

#[test]
fn open_terms_are_rejected() {
    assert!(matches!(
        inject(MachineId::Wam, &pt("x")),
        Err(MachineError::OpenTerm(_))
    ));
}

#[test]
fn badly_named_terms_are_freshened() {
    let s = inject(MachineId::Mam, &pt("(\\x.x)(\\x.x)")).unwrap();
    assert!(is_well_named(&s.code));
}

#[test]
fn jsonl_has_a_header_and_one_line_per_step() {
    let tr = run_machine(MachineId::Wam, &pt("(\\x.x x)(\\y.y)"), 50).unwrap();
    let text = tr.to_jsonl();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), tr.steps.len() + 1);
    let first: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
    assert_eq!(first["i"], 1);
    assert!(first["counters"]["c"].is_u64());
}

#[test]
fn names_round_trip() {
    for m in MachineId::ALL {
        assert_eq!(m.as_str().parse::<MachineId>().unwrap(), m);
    }
}
