//! Checks that machine executions distill into calculus derivations:
//! per-step simulation clauses, whole-trace counts, progress, reflection,
//! strong bisimulation probes, and the complexity measures.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::calculus::{run_calculus, step_calculus, StepLabel, Strategy};
use crate::equivalence::{axiom_neighbors, struct_equiv, AxiomStep, EqTheory, EquivVerdict};
use crate::machines::{
    card, enabled_rules, env_and_dump_len, execute, inject, is_final_state, step_machine, Counts, MachineError,
    MachineId, MachineState, StepRecord, Trace, TransitionLabel,
};
use crate::syntax::{alpha_eq, render, term_size, PureTerm, Term};

/// Default node budget for equivalence searches.
pub const DEFAULT_BUDGET: usize = 20_000;

/// Ceiling on `|ρ|c / ((|t|+1)·max(1,|ρ|p))` accepted over a corpus.
pub const RATIO_CEILING: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    Identity,
    AlphaEq,
    Equiv(EqTheory),
}

/// What a transition must correspond to on decodings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Clause {
    /// Decodings related directly.
    Commutative(Relation),
    /// One calculus step, whose result is related to the post-decoding
    /// exactly (`None`) or by the given relation.
    Principal(StepLabel, Option<Relation>),
}

use Clause::{Commutative as Comm, Principal as Prin};
use Relation::{AlphaEq as Alpha, Equiv, Identity as Same};
use TransitionLabel::{C1, C2, E, M, M1, M2};

const FULL: Relation = Equiv(EqTheory::Full);
const NEED: Relation = Equiv(EqTheory::NeedEq);

/// The simulation clause of every (machine, transition) pair.
pub const CLAUSE_TABLE: &[(MachineId, TransitionLabel, Clause)] = &[
    (MachineId::Kam, C1, Comm(FULL)),
    (MachineId::Kam, M, Prin(StepLabel::Mul, None)),
    (MachineId::Kam, E, Prin(StepLabel::Exp, Some(FULL))),
    (MachineId::Cek, C1, Comm(FULL)),
    (MachineId::Cek, C2, Comm(Same)),
    (MachineId::Cek, M, Prin(StepLabel::Mul, None)),
    (MachineId::Cek, E, Prin(StepLabel::Exp, Some(FULL))),
    (MachineId::Lam, C1, Comm(FULL)),
    (MachineId::Lam, C2, Comm(Same)),
    (MachineId::Lam, M, Prin(StepLabel::Mul, None)),
    (MachineId::Lam, E, Prin(StepLabel::Exp, Some(FULL))),
    (MachineId::Mam, C1, Comm(Same)),
    (MachineId::Mam, M, Prin(StepLabel::Mul, Some(FULL))),
    (MachineId::Mam, E, Prin(StepLabel::Exp, Some(Alpha))),
    (MachineId::SplitCek, C1, Comm(FULL)),
    (MachineId::SplitCek, C2, Comm(FULL)),
    (MachineId::SplitCek, M, Prin(StepLabel::Mul, None)),
    (MachineId::SplitCek, E, Prin(StepLabel::Exp, Some(FULL))),
    (MachineId::Wam, C1, Comm(Same)),
    (MachineId::Wam, C2, Comm(Same)),
    (MachineId::Wam, M, Prin(StepLabel::Mul, Some(NEED))),
    (MachineId::Wam, E, Prin(StepLabel::Exp, Some(Alpha))),
    (MachineId::MergedWam, C1, Comm(Same)),
    (MachineId::MergedWam, C2, Comm(Same)),
    (MachineId::MergedWam, M, Prin(StepLabel::Mul, Some(NEED))),
    (MachineId::MergedWam, E, Prin(StepLabel::Exp, Some(Alpha))),
    (MachineId::PointingWam, C1, Comm(Same)),
    (MachineId::PointingWam, C2, Comm(Same)),
    (MachineId::PointingWam, M1, Prin(StepLabel::Mul, Some(NEED))),
    (MachineId::PointingWam, M2, Prin(StepLabel::Mul, Some(NEED))),
    (MachineId::PointingWam, E, Prin(StepLabel::Exp, Some(Alpha))),
];

pub fn clause(m: MachineId, l: TransitionLabel) -> Option<Clause> {
    CLAUSE_TABLE
        .iter()
        .find(|(mm, ll, _)| *mm == m && *ll == l)
        .map(|(_, _, c)| *c)
}

/// The equivalence a machine's distillery is stated for.
pub fn theory_of(m: MachineId) -> EqTheory {
    match m.strategy() {
        Strategy::Need => EqTheory::NeedEq,
        _ => EqTheory::Full,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "reason")]
pub enum Verdict {
    Pass,
    Fail(String),
    Inconclusive(String),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail(_))
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self, Verdict::Inconclusive(_))
    }

    /// Keeps the first non-passing verdict.
    fn and(self, other: impl FnOnce() -> Verdict) -> Verdict {
        match self {
            Verdict::Pass => other(),
            v => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DistilleryError {
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

fn relate(rel: Relation, expected: &Term, actual: &Term, budget: usize) -> Verdict {
    match rel {
        Relation::Identity if expected == actual => Verdict::Pass,
        Relation::Identity => Verdict::Fail(format!("{} is not {}", render(expected), render(actual))),
        Relation::AlphaEq if alpha_eq(expected, actual) => Verdict::Pass,
        Relation::AlphaEq => Verdict::Fail(format!("{} is not α-equal to {}", render(expected), render(actual))),
        Relation::Equiv(th) => match struct_equiv(expected, actual, th, budget) {
            EquivVerdict::Equivalent(_) => Verdict::Pass,
            EquivVerdict::RefutedByUnfolding => Verdict::Fail(format!(
                "{} and {} unfold differently ({th})",
                render(expected),
                render(actual)
            )),
            EquivVerdict::InconclusiveBudgetExhausted => {
                Verdict::Inconclusive(format!("{} vs {} ({th})", render(expected), render(actual)))
            }
        },
    }
}

/// Checks one transition against its simulation clause.
pub fn verify_step(r: &StepRecord, budget: usize) -> Verdict {
    let m = r.pre.machine;
    let Some(c) = clause(m, r.label) else {
        return Verdict::Fail(format!("{m} has no transition {}", r.label));
    };
    match c {
        Clause::Commutative(rel) => relate(rel, &r.decoded_pre, &r.decoded_post, budget),
        Clause::Principal(expected, tail) => match step_calculus(&r.decoded_pre, m.strategy()) {
            None => Verdict::Fail(format!("{} is {}-normal", render(&r.decoded_pre), m.strategy())),
            Some((label, _)) if label != expected => {
                Verdict::Fail(format!("calculus takes a {label} step, machine a {}", r.label))
            }
            Some((_, reduct)) => match tail {
                None if reduct == r.decoded_post => Verdict::Pass,
                None => Verdict::Fail(format!(
                    "reduct {} differs from {}",
                    render(&reduct),
                    render(&r.decoded_post)
                )),
                Some(rel) => relate(rel, &reduct, &r.decoded_post, budget),
            },
        },
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StepIssue {
    pub index: usize,
    pub label: TransitionLabel,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationReport {
    pub machine: MachineId,
    pub initial: String,
    pub steps: usize,
    pub passed: usize,
    pub failures: Vec<StepIssue>,
    pub inconclusive: Vec<StepIssue>,
    pub machine_counts: Counts,
    pub derivation_mul: usize,
    pub derivation_exp: usize,
    pub labels_correspond: bool,
    pub final_relation: Verdict,
}

impl SimulationReport {
    pub fn all_pass(&self) -> bool {
        self.failures.is_empty() && self.inconclusive.is_empty() && self.counts_agree() && self.final_relation.is_pass()
    }

    pub fn counts_agree(&self) -> bool {
        self.labels_correspond
            && self.machine_counts.m == self.derivation_mul
            && self.machine_counts.e == self.derivation_exp
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Verifies every step, then replays the distilled derivation from the
/// initial decoding and compares labels, counts and final terms.
pub fn verify_trace(tr: &Trace, budget: usize) -> SimulationReport {
    let mut passed = 0;
    let mut failures = Vec::new();
    let mut inconclusive = Vec::new();
    for r in &tr.steps {
        match verify_step(r, budget) {
            Verdict::Pass => passed += 1,
            Verdict::Fail(reason) => failures.push(StepIssue {
                index: r.index,
                label: r.label,
                reason,
            }),
            Verdict::Inconclusive(reason) => inconclusive.push(StepIssue {
                index: r.index,
                label: r.label,
                reason,
            }),
        }
    }
    let m = tr.machine;
    let principal: Vec<StepLabel> = tr.steps.iter().filter_map(|r| r.label.calculus_label()).collect();
    let derivation = run_calculus(&tr.initial_decoded, m.strategy(), principal.len());
    let derived: Vec<StepLabel> = derivation.iter().map(|(l, _)| *l).collect();
    let last = derivation.last().map(|(_, t)| t).unwrap_or(&tr.initial_decoded);
    let final_relation = relate(Relation::Equiv(theory_of(m)), last, tr.final_decoded(), budget);
    SimulationReport {
        machine: m,
        initial: render(&tr.initial),
        steps: tr.steps.len(),
        passed,
        failures,
        inconclusive,
        machine_counts: tr.counts,
        derivation_mul: derived.iter().filter(|l| **l == StepLabel::Mul).count(),
        derivation_exp: derived.iter().filter(|l| **l == StepLabel::Exp).count(),
        labels_correspond: derived == principal,
        final_relation,
    }
}

/// On a commutative-normal state, the machine makes a principal step
/// exactly when the decoding reduces, with the matching label.
pub fn verify_progress(s: &MachineState) -> Result<Verdict, DistilleryError> {
    if enabled_rules(s).iter().any(|l| l.is_commutative()) {
        return Err(DistilleryError::Precondition("a commutative transition applies".into()));
    }
    let decoded = crate::machines::decode_state(s)?;
    let calc = step_calculus(&decoded, s.machine.strategy());
    let mach = step_machine(s)?;
    Ok(match (calc, mach) {
        (None, None) if is_final_state(s) => Verdict::Pass,
        (None, Some((l, _))) => Verdict::Fail(format!("decoding is normal but the machine takes {l}")),
        (Some((l, _)), None) => Verdict::Fail(format!("decoding takes a {l} step but the machine is final")),
        (Some((cl, _)), Some((ml, _))) if ml.calculus_label() == Some(cl) => Verdict::Pass,
        (Some((cl, _)), Some((ml, _))) => Verdict::Fail(format!("decoding takes {cl}, machine takes {ml}")),
        (None, None) => Verdict::Fail("stuck state".into()),
    })
}

/// Commutative steps allowed before each principal step is realized.
fn commutative_allowance(m: MachineId, size: usize, principal_so_far: usize) -> usize {
    let local = match m {
        MachineId::Kam | MachineId::Mam => size,
        MachineId::Cek | MachineId::Lam | MachineId::SplitCek => 2 * size,
        _ => size + principal_so_far + 1,
    };
    8 * (local + 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ReflectionVerdict {
    Pass,
    Fail(String),
    Inconclusive(String),
    /// A commutative run outgrew its bound.
    FuelExhausted {
        realized: usize,
    },
}

impl ReflectionVerdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, ReflectionVerdict::Pass)
    }
}

/// Checks that the machine realizes each of the first `k` calculus steps
/// from `t`, after finitely many commutative transitions, with decodings
/// related by the machine's equivalence.
pub fn verify_reflection(
    m: MachineId,
    t: &PureTerm,
    k: usize,
    budget: usize,
) -> Result<ReflectionVerdict, DistilleryError> {
    let mut s = inject(m, t)?;
    let start = crate::machines::decode_state(&s)?;
    let derivation = run_calculus(&start, m.strategy(), k);
    let size = term_size(&s.code);
    let theory = theory_of(m);
    let mut counts = Counts::default();
    for (i, (label, term)) in derivation.iter().enumerate() {
        let mut commutative = 0;
        loop {
            match step_machine(&s)? {
                None => {
                    return Ok(ReflectionVerdict::Fail(format!(
                        "machine final before calculus step {}",
                        i + 1
                    )));
                }
                Some((l, next)) => {
                    counts.record(l);
                    s = next;
                    if l.is_commutative() {
                        commutative += 1;
                        if commutative > commutative_allowance(m, size, i) {
                            return Ok(ReflectionVerdict::FuelExhausted { realized: i });
                        }
                        continue;
                    }
                    if l.calculus_label() != Some(*label) {
                        return Ok(ReflectionVerdict::Fail(format!(
                            "step {}: calculus {label}, machine {l}",
                            i + 1
                        )));
                    }
                    break;
                }
            }
        }
        let decoded = crate::machines::decode_state(&s)?;
        match relate(Relation::Equiv(theory), term, &decoded, budget) {
            Verdict::Pass => {}
            Verdict::Fail(r) => return Ok(ReflectionVerdict::Fail(format!("step {}: {r}", i + 1))),
            Verdict::Inconclusive(r) => return Ok(ReflectionVerdict::Inconclusive(format!("step {}: {r}", i + 1))),
        }
    }
    if derivation.len() < k {
        let mut commutative = 0;
        loop {
            match step_machine(&s)? {
                None => break,
                Some((l, next)) if l.is_commutative() => {
                    commutative += 1;
                    if commutative > commutative_allowance(m, size, derivation.len()) {
                        return Ok(ReflectionVerdict::FuelExhausted {
                            realized: derivation.len(),
                        });
                    }
                    s = next;
                }
                Some((l, _)) => {
                    return Ok(ReflectionVerdict::Fail(format!(
                        "calculus is normal but the machine takes {l}"
                    )));
                }
            }
        }
    }
    let muls = derivation.iter().filter(|(l, _)| *l == StepLabel::Mul).count();
    let exps = derivation.len() - muls;
    if counts.m != muls || counts.e != exps {
        return Ok(ReflectionVerdict::Fail(format!(
            "counts differ: machine m={} e={}, calculus m={muls} e={exps}",
            counts.m, counts.e
        )));
    }
    Ok(ReflectionVerdict::Pass)
}

/// Whether the theory is a bisimulation for the strategy's reduction.
pub fn compatible(th: EqTheory, s: Strategy) -> bool {
    matches!(
        (th, s),
        (EqTheory::Full, Strategy::Name | Strategy::ValueLR | Strategy::ValueRL)
            | (EqTheory::NeedEq, Strategy::Need)
            | (EqTheory::MamEq, Strategy::Name)
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeOutcome {
    pub start: String,
    pub partner: String,
    pub path: Vec<AxiomStep>,
    pub verdict: Verdict,
}

/// Walks a random axiom path of length at most `path_len` from `t` to some
/// `u`, then checks that `t` and `u` reduce with the same label to
/// equivalent reducts, or are both normal.
pub fn bisimulation_probe<R: Rng>(
    t: &Term,
    th: EqTheory,
    strategy: Strategy,
    path_len: usize,
    budget: usize,
    rng: &mut R,
) -> Result<ProbeOutcome, DistilleryError> {
    if !compatible(th, strategy) {
        return Err(DistilleryError::Precondition(format!(
            "{th} does not go with {strategy}"
        )));
    }
    let cap = term_size(t) + 2 * path_len + 2;
    let mut u = t.clone();
    let mut path = Vec::new();
    for _ in 0..path_len {
        let neighbors = axiom_neighbors(&u, th, cap);
        let Some((step, next)) = neighbors.choose(rng) else {
            break;
        };
        path.push(step.clone());
        u = next.clone();
    }
    let verdict = compare_reducts(t, &u, th, strategy, budget).and(|| compare_reducts(&u, t, th, strategy, budget));
    Ok(ProbeOutcome {
        start: render(t),
        partner: render(&u),
        path,
        verdict,
    })
}

fn compare_reducts(t: &Term, u: &Term, th: EqTheory, strategy: Strategy, budget: usize) -> Verdict {
    match (step_calculus(t, strategy), step_calculus(u, strategy)) {
        (None, None) => Verdict::Pass,
        (Some((l, _)), None) => Verdict::Fail(format!("{} takes {l}, {} is normal", render(t), render(u))),
        (None, Some((l, _))) => Verdict::Fail(format!("{} is normal, {} takes {l}", render(t), render(u))),
        (Some((l1, _)), Some((l2, _))) if l1 != l2 => Verdict::Fail(format!("labels {l1} and {l2} differ")),
        (Some((_, t1)), Some((_, u1))) => relate(Relation::Equiv(th), &t1, &u1, budget),
    }
}

// ---------------------------------------------------------------------------
// Complexity

#[derive(Clone, Debug, Serialize)]
pub struct ComplexityReport {
    pub machine: MachineId,
    pub initial_size: usize,
    pub counts: Counts,
    pub max_commutative_run: usize,
    /// Bound on commutative runs, for machines with a local measure.
    pub local_bound: Option<usize>,
    /// Measure before each step (code size or card).
    pub measures: Vec<usize>,
    /// Indices of commutative steps that did not decrease the measure.
    pub measure_violations: Vec<usize>,
    /// Indices of prefixes breaking a call-by-need counting identity.
    pub identity_violations: Vec<usize>,
    pub ratio: f64,
}

impl ComplexityReport {
    pub fn exact_checks_hold(&self) -> bool {
        self.measure_violations.is_empty()
            && self.identity_violations.is_empty()
            && self.local_bound.is_none_or(|b| self.max_commutative_run <= b)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn measure(s: &MachineState) -> usize {
    match s.machine {
        MachineId::Cek | MachineId::Lam | MachineId::SplitCek => card(s),
        _ => term_size(&s.code),
    }
}

/// Measures the commutative overhead of a trace against the bounds of its
/// machine.
pub fn complexity_report(tr: &Trace) -> ComplexityReport {
    let m = tr.machine;
    let size = term_size(&tr.initial_state.code);
    let local_bound = match m {
        MachineId::Kam | MachineId::Mam => Some(size),
        MachineId::Cek | MachineId::Lam | MachineId::SplitCek => Some(2 * size),
        _ => None,
    };
    let need = m.strategy() == Strategy::Need;
    let mut measures = vec![measure(&tr.initial_state)];
    let mut measure_violations = Vec::new();
    let mut identity_violations = Vec::new();
    let mut run = 0;
    let mut max_run = 0;
    for r in &tr.steps {
        let after = measure(&r.post);
        if r.label.is_commutative() {
            run += 1;
            max_run = max_run.max(run);
            if local_bound.is_some() && after >= *measures.last().expect("nonempty") {
                measure_violations.push(r.index);
            }
        } else {
            run = 0;
        }
        measures.push(after);
        if need {
            let (env, dump) = env_and_dump_len(&r.post);
            let c = &r.counts;
            if c.c2 != c.e + dump || env + dump > c.m {
                identity_violations.push(r.index);
            }
        }
    }
    let c = tr.counts;
    let ratio = if c.total() == 0 {
        0.0
    } else {
        c.commutative() as f64 / ((size + 1) as f64 * c.principal().max(1) as f64)
    };
    ComplexityReport {
        machine: m,
        initial_size: size,
        counts: c,
        max_commutative_run: max_run,
        local_bound,
        measures,
        measure_violations,
        identity_violations,
        ratio,
    }
}

/// Runs `t` on `m` and reports every commutative-normal state that fails
/// progress.
pub fn progress_failures(m: MachineId, t: &PureTerm, fuel: usize) -> Result<Vec<(usize, String)>, DistilleryError> {
    let exec = execute(m, t, fuel)?;
    let mut out = Vec::new();
    for (i, s) in exec.states.iter().enumerate() {
        if enabled_rules(s).iter().any(|l| l.is_commutative()) {
            continue;
        }
        match verify_progress(s)? {
            Verdict::Pass => {}
            Verdict::Fail(r) | Verdict::Inconclusive(r) => out.push((i, r)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machines::{run_machine, Closure, Components, LocalEnv};
    use crate::syntax::{parse, Name};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(s: &str) -> PureTerm {
        PureTerm::parse(s).unwrap()
    }

    const DELTA_DELTA: &str = "(\\x.x x)(\\x.x x)";

    #[test]
    fn table_covers_exactly_the_admissible_labels() {
        for m in MachineId::ALL {
            for l in [C1, C2, M, M1, M2, E] {
                assert_eq!(clause(m, l).is_some(), m.labels().contains(&l), "{m} {l}");
            }
        }
    }

    #[test]
    fn kam_exponential_step_passes_through_gc() {
        let mut s = inject(MachineId::Kam, &pt("(\\x.x)(\\y.y)")).unwrap();
        s.code = parse("x").unwrap();
        let env = LocalEnv::empty().cons(
            Name::from("x"),
            Closure::new(parse("\\y.y").unwrap(), LocalEnv::empty()),
        );
        s.parts = Components::Kam { env, stack: Vec::new() };
        let (label, post) = step_machine(&s).unwrap().unwrap();
        let r = StepRecord {
            index: 1,
            label,
            decoded_pre: crate::machines::decode_state(&s).unwrap(),
            decoded_post: crate::machines::decode_state(&post).unwrap(),
            pre: s,
            post,
            counts: Counts::default(),
        };
        assert_eq!(r.label, E);
        assert_eq!(verify_step(&r, DEFAULT_BUDGET), Verdict::Pass);
    }

    #[test]
    fn principal_step_on_a_normal_decoding_fails() {
        let tr = run_machine(MachineId::Kam, &pt("(\\x.x)(\\y.y)"), 10).unwrap();
        let mut r = tr.steps[1].clone();
        assert_eq!(r.label, M);
        r.decoded_pre = parse("\\z.z").unwrap();
        assert!(verify_step(&r, DEFAULT_BUDGET).is_fail());
    }

    #[test]
    fn every_step_of_small_runs_passes() {
        for src in [
            "(\\x.x)(\\y.y)",
            DELTA_DELTA,
            "(\\x.x x)((\\i.i)(\\j.j))",
            "(\\k.\\l.k)((\\m.m)(\\n.n))((\\o.o o)(\\p.p))",
        ] {
            for m in MachineId::ALL {
                let tr = run_machine(m, &pt(src), 40).unwrap();
                let rep = verify_trace(&tr, DEFAULT_BUDGET);
                assert!(rep.all_pass(), "{m} {src}: {rep:?}");
            }
        }
    }

    #[test]
    fn identity_trace_counts() {
        let tr = run_machine(MachineId::Kam, &pt("(\\x.x)(\\y.y)"), 10).unwrap();
        let rep = verify_trace(&tr, DEFAULT_BUDGET);
        assert_eq!((rep.machine_counts.m, rep.derivation_mul), (1, 1));
        assert_eq!((rep.machine_counts.e, rep.derivation_exp), (1, 1));
    }

    #[test]
    fn zero_step_trace_passes_vacuously() {
        let tr = run_machine(MachineId::Wam, &pt("\\x.x"), 10).unwrap();
        assert!(tr.steps.is_empty());
        assert!(verify_trace(&tr, DEFAULT_BUDGET).all_pass());
        assert_eq!(complexity_report(&tr).ratio, 0.0);
    }

    #[test]
    fn progress_on_every_commutative_normal_state() {
        for m in MachineId::ALL {
            assert!(progress_failures(m, &pt(DELTA_DELTA), 40).unwrap().is_empty());
            assert!(progress_failures(m, &pt("(\\x.x x)((\\i.i)(\\j.j))"), 100)
                .unwrap()
                .is_empty());
        }
    }

    #[test]
    fn progress_requires_commutative_normal_states() {
        let s = inject(MachineId::Kam, &pt("(\\x.x)(\\y.y)")).unwrap();
        assert!(verify_progress(&s).is_err());
    }

    #[test]
    fn reflection_examples() {
        assert!(verify_reflection(MachineId::Kam, &pt(DELTA_DELTA), 4, DEFAULT_BUDGET)
            .unwrap()
            .is_pass());
        let tau_tau = pt("(\\z.(\\x.x x) z)(\\z.(\\x.x x) z)");
        assert!(verify_reflection(MachineId::Mam, &tau_tau, 3, DEFAULT_BUDGET)
            .unwrap()
            .is_pass());
        for m in MachineId::ALL {
            assert!(verify_reflection(m, &pt(DELTA_DELTA), 0, DEFAULT_BUDGET)
                .unwrap()
                .is_pass());
            assert!(
                verify_reflection(m, &pt("(\\x.x x)((\\i.i)(\\j.j))"), 10, DEFAULT_BUDGET)
                    .unwrap()
                    .is_pass()
            );
        }
    }

    #[test]
    fn cek_card_decreases_on_commutative_steps() {
        let tr = run_machine(MachineId::Cek, &pt("(\\x.x)(\\y.y)"), 10).unwrap();
        let rep = complexity_report(&tr);
        assert_eq!(rep.measures[0], 5);
        assert_eq!(rep.measures[1], 4);
        assert!(rep.measures[2] < rep.measures[1]);
        assert!(rep.exact_checks_hold());
    }

    #[test]
    fn wam_identities_on_delta_delta() {
        for m in [MachineId::Wam, MachineId::MergedWam, MachineId::PointingWam] {
            let tr = run_machine(m, &pt(DELTA_DELTA), 20).unwrap();
            assert!(complexity_report(&tr).exact_checks_hold(), "{m}");
        }
    }

    #[test]
    fn bisimulation_probe_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = parse("(x x)[x<-\\y.y]").unwrap();
        for _ in 0..5 {
            let o = bisimulation_probe(&t, EqTheory::Full, Strategy::Name, 1, DEFAULT_BUDGET, &mut rng).unwrap();
            assert!(o.verdict.is_pass(), "{o:?}");
        }
        let o = bisimulation_probe(&t, EqTheory::Full, Strategy::Name, 0, DEFAULT_BUDGET, &mut rng).unwrap();
        assert!(o.path.is_empty() && o.verdict.is_pass());
        let need = parse("y[y<-\\z.z]").unwrap();
        let o = bisimulation_probe(&need, EqTheory::NeedEq, Strategy::Need, 2, DEFAULT_BUDGET, &mut rng).unwrap();
        assert!(o.verdict.is_pass(), "{o:?}");
        assert!(bisimulation_probe(&need, EqTheory::NeedEq, Strategy::Name, 1, DEFAULT_BUDGET, &mut rng).is_err());
    }

    #[test]
    fn reports_serialize() {
        let tr = run_machine(MachineId::Lam, &pt(DELTA_DELTA), 12).unwrap();
        let sim: serde_json::Value = serde_json::from_str(&verify_trace(&tr, DEFAULT_BUDGET).to_json()).unwrap();
        assert_eq!(sim["machine"], "lam");
        let cx: serde_json::Value = serde_json::from_str(&complexity_report(&tr).to_json()).unwrap();
        assert!(cx["ratio"].is_f64());
    }
}
