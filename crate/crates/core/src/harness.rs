//! Random and exhaustive term sources, an evaluation oracle, the
//! differential runner, and the acceptance suites.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::calculus::{cbv_candidate_count, decompose_all, run_calculus, step_calculus, StepLabel, Strategy};
use crate::distillery::{
    bisimulation_probe, complexity_report, verify_progress, verify_reflection, verify_trace, ReflectionVerdict,
    Verdict, RATIO_CEILING,
};
use crate::equivalence::{struct_equiv, EqTheory};
use crate::machines::{check_machine_invariants, enabled_rules, execute, trace_of, MachineError, MachineId, Outcome};
use crate::syntax::{alpha_eq, free_vars, parse, render, term_size, unfold, Name, PureTerm, Term};

pub const DEFAULT_SEED: u64 = 0x5eed;

/// The suite seed: `LSC_SEED` when set and numeric, else [`DEFAULT_SEED`].
pub fn suite_seed() -> u64 {
    std::env::var("LSC_SEED")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("enumeration is limited to size {max}, got {got}")]
    SizeTooLarge { max: usize, got: usize },
    #[error("open term: free variables {0:?}")]
    OpenTerm(Vec<String>),
    #[error(transparent)]
    Machine(#[from] MachineError),
}

fn require_closed(t: &Term) -> Result<(), HarnessError> {
    let fv = free_vars(t);
    if fv.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::OpenTerm(fv.iter().map(|n| n.to_string()).collect()))
    }
}

// ---------------------------------------------------------------------------
// Generation

pub const APP_WEIGHT: f64 = 0.45;
pub const ABS_WEIGHT: f64 = 0.35;
pub const VAR_WEIGHT: f64 = 0.20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GenConfig {
    pub seed: u64,
    pub max_size: usize,
    pub closed: bool,
}

impl GenConfig {
    pub fn new(seed: u64, max_size: usize) -> GenConfig {
        GenConfig {
            seed,
            max_size,
            closed: true,
        }
    }
}

struct Generator<R> {
    rng: R,
    scope: Vec<Name>,
    next: usize,
}

impl<R: Rng> Generator<R> {
    fn abs(&mut self, budget: usize) -> Term {
        let x = Name::from(format!("x{}", self.next).as_str());
        self.next += 1;
        self.scope.push(x.clone());
        let body = self.term(budget - 1);
        self.scope.pop();
        Term::abs(x, body)
    }

    /// An application spine at the root; weak machines stop at once on an
    /// abstraction.
    fn redex_rooted(&mut self, budget: usize) -> Term {
        let args = self.rng.gen_range(1..=3).min((budget - 2) / 3);
        let mut sizes = vec![2; args + 1];
        let mut spare = budget - args - 2 * (args + 1);
        while spare > 0 {
            let k = self.rng.gen_range(0..sizes.len());
            sizes[k] += 1;
            spare -= 1;
        }
        let mut t = self.term(sizes[0]);
        for &n in &sizes[1..] {
            let a = self.term(n);
            t = Term::app(t, a);
        }
        t
    }

    fn term(&mut self, budget: usize) -> Term {
        let can_var = !self.scope.is_empty();
        let can_abs = budget >= 2;
        // both sides of an application need a closed-in-scope term
        let can_app = budget >= if can_var { 3 } else { 5 };
        let weights = [
            if can_app { APP_WEIGHT } else { 0.0 },
            if can_abs { ABS_WEIGHT } else { 0.0 },
            if can_var { VAR_WEIGHT } else { 0.0 },
        ];
        let total: f64 = weights.iter().sum();
        let mut pick = self.rng.gen::<f64>() * total;
        let mut choice = 2;
        for (i, w) in weights.iter().enumerate() {
            if *w > 0.0 && pick < *w {
                choice = i;
                break;
            }
            pick -= w;
        }
        match choice {
            0 => {
                let min = if can_var { 1 } else { 2 };
                let left = self.rng.gen_range(min..=budget - 1 - min);
                let f = self.term(left);
                let a = self.term(budget - 1 - left);
                Term::app(f, a)
            }
            1 => self.abs(budget),
            _ => {
                let i = self.rng.gen_range(0..self.scope.len());
                Term::Var(self.scope[i].clone())
            }
        }
    }
}

/// A random closed, well-named term of size at most `cfg.max_size`,
/// determined by the seed.
pub fn gen_closed_term(cfg: &GenConfig) -> PureTerm {
    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        scope: Vec::new(),
        next: 0,
    };
    let budget = cfg.max_size.max(2);
    let target = budget;
    let t = if target >= 5 {
        g.redex_rooted(target)
    } else {
        g.term(target)
    };
    PureTerm::new(t).expect("generated terms are pure")
}

/// `count` terms from consecutive seeds derived from `seed`.
pub fn gen_corpus(seed: u64, count: usize, max_size: usize) -> Vec<PureTerm> {
    (0..count as u64)
        .map(|i| {
            gen_closed_term(&GenConfig::new(
                seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(i),
                max_size,
            ))
        })
        .collect()
}

pub const MAX_ENUMERATION_SIZE: usize = 9;

/// All closed pure terms of size at most `max_size`, one per α-class, with
/// binders named by depth, ordered by size.
pub fn enumerate_closed_terms(max_size: usize) -> Result<Vec<PureTerm>, HarnessError> {
    if max_size > MAX_ENUMERATION_SIZE {
        return Err(HarnessError::SizeTooLarge {
            max: MAX_ENUMERATION_SIZE,
            got: max_size,
        });
    }
    let mut table: BTreeMap<(usize, usize), Vec<Term>> = BTreeMap::new();
    let mut out = Vec::new();
    for n in 1..=max_size {
        out.extend(
            terms_of(n, 0, &mut table)
                .into_iter()
                .map(|t| PureTerm::new(t).expect("pure")),
        );
    }
    Ok(out)
}

fn binder(depth: usize) -> Name {
    Name::from(format!("x{depth}").as_str())
}

/// Terms of size exactly `n` whose free variables are among the `depth`
/// innermost binders.
fn terms_of(n: usize, depth: usize, table: &mut BTreeMap<(usize, usize), Vec<Term>>) -> Vec<Term> {
    if let Some(v) = table.get(&(n, depth)) {
        return v.clone();
    }
    let mut out = Vec::new();
    if n == 1 {
        out.extend((0..depth).map(|d| Term::Var(binder(d))));
    } else {
        for body in terms_of(n - 1, depth + 1, table) {
            out.push(Term::abs(binder(depth), body));
        }
        for left in 1..n - 1 {
            let fs = terms_of(left, depth, table);
            let args = terms_of(n - 1 - left, depth, table);
            for f in &fs {
                for a in &args {
                    out.push(Term::app(f.clone(), a.clone()));
                }
            }
        }
    }
    table.insert((n, depth), out.clone());
    out
}

// ---------------------------------------------------------------------------
// Oracles

/// Normal form of `t` under `s`, unfolded, or `None` when `fuel` steps do
/// not reach it.
pub fn reference_eval(t: &PureTerm, s: Strategy, fuel: usize) -> Result<Option<PureTerm>, HarnessError> {
    require_closed(t)?;
    let mut cur: Term = t.as_term().clone();
    for _ in 0..fuel {
        match step_calculus(&cur, s) {
            Some((_, next)) => cur = next,
            None => return Ok(Some(unfold(&cur))),
        }
    }
    Ok(step_calculus(&cur, s).is_none().then(|| unfold(&cur)))
}

pub fn machines_of(s: Strategy) -> Vec<MachineId> {
    MachineId::ALL.into_iter().filter(|m| m.strategy() == s).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct MachineSummary {
    pub machine: MachineId,
    pub outcome: Outcome,
    pub mul: usize,
    pub exp: usize,
    pub principal: Vec<StepLabel>,
    pub result: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiffReport {
    pub group: Strategy,
    pub term: String,
    pub machines: Vec<MachineSummary>,
    pub reference: Option<String>,
    pub mismatches: Vec<String>,
}

impl DiffReport {
    pub fn agrees(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Runs every machine of a strategy and the calculus on `t`, comparing
/// principal label sequences and, when all stop, the unfolded results.
pub fn differential_run(t: &PureTerm, group: Strategy, fuel: usize) -> Result<DiffReport, HarnessError> {
    require_closed(t)?;
    let mut machines = Vec::new();
    let mut results = Vec::new();
    for m in machines_of(group) {
        let exec = execute(m, t, fuel)?;
        let principal: Vec<StepLabel> = exec.labels.iter().filter_map(|l| l.calculus_label()).collect();
        let result = match exec.outcome {
            Outcome::Final => Some(unfold(&crate::machines::decode_state(exec.last())?)),
            Outcome::FuelExhausted => None,
        };
        let c = exec.counts();
        machines.push(MachineSummary {
            machine: m,
            outcome: exec.outcome,
            mul: c.m,
            exp: c.e,
            principal,
            result: result.as_ref().map(|r| render(r)),
        });
        results.push(result);
    }
    let longest = machines.iter().map(|s| s.principal.len()).max().unwrap_or(0);
    let derivation: Vec<StepLabel> = run_calculus(t.as_term(), group, longest)
        .into_iter()
        .map(|(l, _)| l)
        .collect();
    let reference = reference_eval(t, group, fuel)?;
    let mut mismatches = Vec::new();
    for s in &machines {
        let n = s.principal.len().min(derivation.len());
        if s.principal[..n] != derivation[..n] {
            mismatches.push(format!("{}: principal labels diverge from the calculus", s.machine));
        }
        if s.outcome == Outcome::Final && s.principal.len() != derivation.len() {
            mismatches.push(format!(
                "{}: stopped after {} principal steps, calculus {}",
                s.machine,
                s.principal.len(),
                derivation.len()
            ));
        }
    }
    for (i, a) in machines.iter().enumerate() {
        for b in &machines[i + 1..] {
            let n = a.principal.len().min(b.principal.len());
            if a.principal[..n] != b.principal[..n] {
                mismatches.push(format!("{} and {} disagree on principal labels", a.machine, b.machine));
            }
        }
    }
    if results.iter().all(Option::is_some) {
        for (s, r) in machines.iter().zip(&results) {
            let r = r.as_ref().expect("checked");
            match &reference {
                Some(want) if alpha_eq(r, want) => {}
                Some(want) => mismatches.push(format!("{}: {} vs reference {}", s.machine, render(r), render(want))),
                None => mismatches.push(format!("{}: machine stops, reference does not", s.machine)),
            }
        }
    }
    Ok(DiffReport {
        group,
        term: render(t),
        machines,
        reference: reference.as_ref().map(|r| render(r)),
        mismatches,
    })
}

// ---------------------------------------------------------------------------
// Suites

#[derive(Clone, Debug, Default, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    pub inconclusive: usize,
    pub artifacts: Vec<String>,
    /// First few diagnostics and summary figures.
    pub notes: Vec<String>,
    pub seconds: f64,
}

impl SuiteResult {
    fn new(name: &str) -> SuiteResult {
        SuiteResult {
            name: name.to_string(),
            ..SuiteResult::default()
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.inconclusive == 0 && self.cases > 0
    }

    fn fail(&mut self, note: impl FnOnce() -> String) {
        self.failures += 1;
        if self.notes.len() < 12 {
            self.notes.push(note());
        }
    }

    fn inconclusive(&mut self, note: impl FnOnce() -> String) {
        self.inconclusive += 1;
        if self.notes.len() < 12 {
            self.notes.push(note());
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {} cases, {} failures, {} inconclusive ({:.1}s)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.failures,
            self.inconclusive,
            self.seconds
        )
    }
}

/// A calculus trace to reproduce: the start term, then each label with the
/// reduct it must produce (`None` where only the label is fixed).
#[derive(Clone, Debug)]
pub struct ReferenceTrace {
    pub name: &'static str,
    pub strategy: Strategy,
    pub start: &'static str,
    pub steps: &'static [(StepLabel, Option<&'static str>)],
}

use StepLabel::{Exp as Ex, Mul as Mu};

/// Ω under each strategy, and Ω delayed behind a redex, `((\z.δ) I)((\z.δ) I)`
/// with δ = `\x.x x` and I = `\y.y`, under call-by-name and left-to-right
/// call-by-value.
pub fn reference_traces() -> Vec<ReferenceTrace> {
    vec![
        ReferenceTrace {
            name: "omega-name",
            strategy: Strategy::Name,
            start: "(\\x.x x)(\\x.x x)",
            steps: &[
                (Mu, Some("(x x)[x<-\\x.x x]")),
                (Ex, Some("((\\x.x x) x)[x<-\\x.x x]")),
                (Mu, Some("(y y)[y<-x][x<-\\x.x x]")),
                (Ex, Some("(x y)[y<-x][x<-\\x.x x]")),
                (Ex, Some("((\\x.x x) y)[y<-x][x<-\\x.x x]")),
                (Mu, Some("(z z)[z<-y][y<-x][x<-\\x.x x]")),
                (Ex, None),
            ],
        },
        ReferenceTrace {
            name: "omega-value-lr",
            strategy: Strategy::ValueLR,
            start: "(\\x.x x)(\\x.x x)",
            steps: &[
                (Mu, Some("(x1 x1)[x1<-\\x.x x]")),
                (Ex, Some("((\\x.x x) x1)[x1<-\\x.x x]")),
                (Ex, Some("((\\x.x x)(\\x.x x))[x1<-\\x.x x]")),
                (Mu, Some("(x2 x2)[x2<-\\x.x x][x1<-\\x.x x]")),
                (Ex, Some("((\\x.x x) x2)[x2<-\\x.x x][x1<-\\x.x x]")),
                (Ex, None),
            ],
        },
        ReferenceTrace {
            name: "omega-value-rl",
            strategy: Strategy::ValueRL,
            start: "(\\x.x x)(\\x.x x)",
            steps: &[
                (Mu, Some("(x1 x1)[x1<-\\x.x x]")),
                (Ex, Some("(x1 (\\x.x x))[x1<-\\x.x x]")),
                (Ex, Some("((\\x.x x)(\\x.x x))[x1<-\\x.x x]")),
                (Mu, Some("(x2 x2)[x2<-\\x.x x][x1<-\\x.x x]")),
                (Ex, Some("(x2 (\\x.x x))[x2<-\\x.x x][x1<-\\x.x x]")),
                (Ex, None),
            ],
        },
        ReferenceTrace {
            name: "omega-need",
            strategy: Strategy::Need,
            start: "(\\x.x x)(\\x.x x)",
            steps: &[
                (Mu, Some("(x1 x1)[x1<-\\x.x x]")),
                (Ex, Some("((\\x.x x) x1)[x1<-\\x.x x]")),
                (Mu, Some("(x2 x2)[x2<-x1][x1<-\\x.x x]")),
                (Ex, Some("(x2 x2)[x2<-\\x.x x][x1<-\\x.x x]")),
                (Ex, Some("((\\x.x x) x2)[x2<-\\x.x x][x1<-\\x.x x]")),
                (Mu, Some("(x3 x3)[x3<-x2][x2<-\\x.x x][x1<-\\x.x x]")),
                (Ex, Some("(x3 x3)[x3<-\\x.x x][x2<-\\x.x x][x1<-\\x.x x]")),
                (Ex, Some("((\\x.x x) x3)[x3<-\\x.x x][x2<-\\x.x x][x1<-\\x.x x]")),
                (Mu, None),
            ],
        },
        ReferenceTrace {
            name: "delayed-omega-name",
            strategy: Strategy::Name,
            start: "((\\z.\\x.x x)(\\y.y))((\\z.\\x.x x)(\\y.y))",
            steps: &[
                (Mu, Some("(\\x.x x)[z<-\\y.y] ((\\z.\\x.x x)(\\y.y))")),
                (Mu, Some("(x x)[x<-(\\z.\\x.x x)(\\y.y)][z<-\\y.y]")),
                (Ex, None),
            ],
        },
        ReferenceTrace {
            name: "delayed-omega-value-lr",
            strategy: Strategy::ValueLR,
            start: "((\\z.\\x.x x)(\\y.y))((\\z.\\x.x x)(\\y.y))",
            steps: &[
                (Mu, Some("(\\x.x x)[z<-\\y.y] ((\\z.\\x.x x)(\\y.y))")),
                (Mu, Some("(\\x.x x)[z<-\\y.y] ((\\x.x x)[z<-\\y.y])")),
                (Mu, Some("(x x)[x<-(\\x.x x)[z<-\\y.y]][z<-\\y.y]")),
                // the value rule moves the payload's substitution outside
                (Ex, Some("((\\x.x x) x)[x<-\\x.x x][z<-\\y.y][z<-\\y.y]")),
            ],
        },
    ]
}

/// The fourth call-by-value reduct of the delayed Ω with the payload's
/// substitution left in place. The value rule lifts it out, so this form is
/// equivalent to the reduct but not α-equal to it.
pub const UNLIFTED_VALUE_REDUCT: &str = "((\\x.x x) x)[x<-(\\x.x x)[z<-\\y.y]][z<-\\y.y]";

/// Reproduces a reference trace; returns the first discrepancy.
pub fn check_reference_trace(r: &ReferenceTrace) -> Result<(), String> {
    let start = parse(r.start).map_err(|e| e.to_string())?;
    let got = run_calculus(&start, r.strategy, r.steps.len());
    if got.len() != r.steps.len() {
        return Err(format!("{}: stopped after {} steps", r.name, got.len()));
    }
    for (i, ((want_label, want_term), (label, term))) in r.steps.iter().zip(&got).enumerate() {
        if want_label != label {
            return Err(format!(
                "{} step {}: label {label}, expected {want_label}",
                r.name,
                i + 1
            ));
        }
        if let Some(w) = want_term {
            let w = parse(w).map_err(|e| e.to_string())?;
            if !alpha_eq(&w, term) {
                return Err(format!(
                    "{} step {}: {} is not {}",
                    r.name,
                    i + 1,
                    render(term),
                    render(&w)
                ));
            }
        }
    }
    Ok(())
}

/// Criterion 1: the reference traces.
pub fn suite_traces() -> SuiteResult {
    let clock = Instant::now();
    let mut res = SuiteResult::new("traces");
    for r in reference_traces() {
        res.cases += 1;
        if let Err(e) = check_reference_trace(&r) {
            res.fail(|| e);
        }
    }
    res.seconds = clock.elapsed().as_secs_f64();
    res
}

/// Criterion 2: at most one redex decomposition, and at most one
/// call-by-value candidate, on every enumerated term and its reducts.
pub fn suite_determinism(max_size: usize, depth: usize) -> SuiteResult {
    let clock = Instant::now();
    let mut res = SuiteResult::new("determinism");
    let terms = enumerate_closed_terms(max_size).expect("size within the enumeration limit");
    for t in &terms {
        for s in Strategy::ALL {
            let mut cur: Term = t.as_term().clone();
            for _ in 0..=depth {
                res.cases += 1;
                let n = decompose_all(&cur, s).len();
                if n > 1 {
                    res.fail(|| format!("{s} {}: {n} decompositions", render(&cur)));
                }
                let step = step_calculus(&cur, s);
                if (n == 0) != step.is_none() {
                    res.fail(|| format!("{s} {}: {n} decompositions but the search disagrees", render(&cur)));
                }
                if s.value_argument() {
                    match cbv_candidate_count(&cur, s) {
                        Ok(k) if k <= 1 => {}
                        Ok(k) => res.fail(|| format!("{s} {}: {k} candidates", render(&cur))),
                        Err(e) => res.fail(|| format!("{s} {}: {e}", render(&cur))),
                    }
                }
                match step {
                    Some((_, next)) => cur = next,
                    None => break,
                }
            }
        }
    }
    res.notes.insert(0, format!("{} enumerated terms", terms.len()));
    res.seconds = clock.elapsed().as_secs_f64();
    res
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CorpusConfig {
    pub seed: u64,
    pub terms: usize,
    pub max_size: usize,
    pub fuel: usize,
    pub budget: usize,
}

impl CorpusConfig {
    pub fn acceptance(seed: u64) -> CorpusConfig {
        CorpusConfig {
            seed,
            terms: 500,
            max_size: 25,
            fuel: 200,
            budget: crate::distillery::DEFAULT_BUDGET,
        }
    }
}

/// Results of criteria 3 to 7 and the progress half of 9, all computed on
/// one corpus of machine runs.
#[derive(Clone, Debug, Serialize)]
pub struct CorpusReport {
    pub distillation: SuiteResult,
    pub counts: SuiteResult,
    pub agreement: SuiteResult,
    pub invariants: SuiteResult,
    pub complexity: SuiteResult,
    pub progress: SuiteResult,
    pub states: usize,
    pub max_ratio: f64,
}

#[derive(Default)]
struct CaseOutcome {
    step_fail: Vec<String>,
    step_inconclusive: Vec<String>,
    steps: usize,
    count_fail: Vec<String>,
    agreement_cases: usize,
    agreement_fail: Vec<String>,
    states: usize,
    invariant_fail: Vec<String>,
    complexity_fail: Vec<String>,
    ratio: f64,
    progress_cases: usize,
    progress_fail: Vec<String>,
    principal: Option<(MachineId, Vec<StepLabel>)>,
}

fn run_case(m: MachineId, t: &PureTerm, cfg: &CorpusConfig) -> Result<CaseOutcome, HarnessError> {
    let mut o = CaseOutcome::default();
    let fresh = PureTerm::new(crate::syntax::fresh_rename(t, &Default::default())).expect("pure");
    let exec = execute(m, &fresh, cfg.fuel)?;
    let mut muls = 0;
    for (i, s) in exec.states.iter().enumerate() {
        if i > 0 && exec.labels[i - 1].is_multiplicative() {
            muls += 1;
        }
        o.states += 1;
        let rep = check_machine_invariants(s, Some(muls));
        if !rep.all_hold() {
            o.invariant_fail
                .push(format!("{m} {} state {i}: {:?}", render(t), rep.failures()));
        }
        if !enabled_rules(s).iter().any(|l| l.is_commutative()) {
            o.progress_cases += 1;
            match verify_progress(s) {
                Ok(Verdict::Pass) => {}
                Ok(v) => o.progress_fail.push(format!("{m} {} state {i}: {v:?}", render(t))),
                Err(e) => o.progress_fail.push(format!("{m} {} state {i}: {e}", render(t))),
            }
        }
    }
    o.principal = Some((m, exec.labels.iter().filter_map(|l| l.calculus_label()).collect()));
    let outcome = exec.outcome;
    let tr = trace_of(exec, t.clone(), cfg.fuel)?;
    let sim = verify_trace(&tr, cfg.budget);
    o.steps = sim.steps;
    for f in &sim.failures {
        o.step_fail
            .push(format!("{m} {} step {} {}: {}", render(t), f.index, f.label, f.reason));
    }
    for f in &sim.inconclusive {
        o.step_inconclusive
            .push(format!("{m} {} step {} {}: {}", render(t), f.index, f.label, f.reason));
    }
    if !sim.counts_agree() {
        o.count_fail.push(format!(
            "{m} {}: machine m={} e={}, derivation m={} e={}",
            render(t),
            sim.machine_counts.m,
            sim.machine_counts.e,
            sim.derivation_mul,
            sim.derivation_exp
        ));
    }
    match &sim.final_relation {
        Verdict::Pass => {}
        v => o.count_fail.push(format!("{m} {}: final terms {v:?}", render(t))),
    }
    if outcome == Outcome::Final {
        o.agreement_cases += 1;
        let got = unfold(tr.final_decoded());
        match reference_eval(t, m.strategy(), 10 * cfg.fuel)? {
            Some(want) if alpha_eq(&got, &want) => {}
            Some(want) => o
                .agreement_fail
                .push(format!("{m} {}: {} vs {}", render(t), render(&got), render(&want))),
            None => o
                .agreement_fail
                .push(format!("{m} {}: reference does not stop", render(t))),
        }
    }
    let cx = complexity_report(&tr);
    if !cx.exact_checks_hold() {
        o.complexity_fail.push(format!(
            "{m} {}: measure {:?}, identities {:?}, run {} bound {:?}",
            render(t),
            cx.measure_violations,
            cx.identity_violations,
            cx.max_commutative_run,
            cx.local_bound
        ));
    }
    o.ratio = cx.ratio;
    Ok(o)
}

fn sharded<T: Send, F: Fn(usize) -> T + Sync>(n: usize, f: F) -> Vec<T> {
    let workers = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
        .min(n.max(1));
    if workers <= 1 {
        return (0..n).map(f).collect();
    }
    let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
    std::thread::scope(|scope| {
        let f = &f;
        let chunks: Vec<_> = slots
            .chunks_mut(n.div_ceil(workers))
            .enumerate()
            .map(|(c, chunk)| {
                let base = c * n.div_ceil(workers);
                scope.spawn(move || {
                    for (k, slot) in chunk.iter_mut().enumerate() {
                        *slot = Some(f(base + k));
                    }
                })
            })
            .collect();
        for h in chunks {
            h.join().expect("worker panicked");
        }
    });
    slots.into_iter().map(|s| s.expect("filled")).collect()
}

/// Criteria 3 to 7 and progress, over `cfg.terms` random terms on all
/// eight machines.
pub fn suite_corpus(cfg: &CorpusConfig) -> CorpusReport {
    let clock = Instant::now();
    let terms = gen_corpus(cfg.seed, cfg.terms, cfg.max_size);
    let per_term: Vec<Vec<Result<CaseOutcome, HarnessError>>> = sharded(terms.len(), |i| {
        MachineId::ALL.iter().map(|m| run_case(*m, &terms[i], cfg)).collect()
    });
    let mut r = CorpusReport {
        distillation: SuiteResult::new("distillation"),
        counts: SuiteResult::new("simulation-counts"),
        agreement: SuiteResult::new("end-to-end"),
        invariants: SuiteResult::new("invariants"),
        complexity: SuiteResult::new("complexity"),
        progress: SuiteResult::new("progress"),
        states: 0,
        max_ratio: 0.0,
    };
    for (t, cases) in terms.iter().zip(per_term) {
        let mut principal: BTreeMap<MachineId, Vec<StepLabel>> = BTreeMap::new();
        for case in cases {
            let o = match case {
                Ok(o) => o,
                Err(e) => {
                    r.distillation.fail(|| format!("{}: {e}", render(t)));
                    continue;
                }
            };
            r.distillation.cases += o.steps;
            o.step_fail.into_iter().for_each(|n| r.distillation.fail(|| n));
            o.step_inconclusive
                .into_iter()
                .for_each(|n| r.distillation.inconclusive(|| n));
            r.counts.cases += 1;
            o.count_fail.into_iter().for_each(|n| r.counts.fail(|| n));
            r.agreement.cases += o.agreement_cases;
            o.agreement_fail.into_iter().for_each(|n| r.agreement.fail(|| n));
            r.invariants.cases += o.states;
            r.states += o.states;
            o.invariant_fail.into_iter().for_each(|n| r.invariants.fail(|| n));
            r.complexity.cases += 1;
            o.complexity_fail.into_iter().for_each(|n| r.complexity.fail(|| n));
            r.max_ratio = r.max_ratio.max(o.ratio);
            r.progress.cases += o.progress_cases;
            o.progress_fail.into_iter().for_each(|n| r.progress.fail(|| n));
            if let Some((m, p)) = o.principal {
                principal.insert(m, p);
            }
        }
        for group in [
            &[MachineId::Kam, MachineId::Mam][..],
            &[MachineId::Cek, MachineId::SplitCek],
            &[MachineId::Wam, MachineId::MergedWam, MachineId::PointingWam],
        ] {
            r.counts.cases += 1;
            let seqs: Vec<&Vec<StepLabel>> = group.iter().filter_map(|m| principal.get(m)).collect();
            let n = seqs.iter().map(|s| s.len()).min().unwrap_or(0);
            if seqs.windows(2).any(|w| w[0][..n] != w[1][..n]) {
                r.counts.fail(|| format!("{group:?} disagree on {}", render(t)));
            }
        }
    }
    if r.max_ratio > RATIO_CEILING {
        r.complexity
            .fail(|| format!("global ratio {:.3} exceeds {RATIO_CEILING}", r.max_ratio));
    }
    r.complexity.notes.insert(0, format!("max ratio {:.3}", r.max_ratio));
    r.invariants.notes.insert(0, format!("{} states", r.states));
    let secs = clock.elapsed().as_secs_f64();
    for s in [
        &mut r.distillation,
        &mut r.counts,
        &mut r.agreement,
        &mut r.invariants,
        &mut r.complexity,
        &mut r.progress,
    ] {
        s.seconds = secs;
    }
    r
}

/// Pairs of theory and strategy for which the theory is a bisimulation.
pub const BISIMULATION_PAIRS: [(EqTheory, Strategy); 5] = [
    (EqTheory::Full, Strategy::Name),
    (EqTheory::Full, Strategy::ValueLR),
    (EqTheory::Full, Strategy::ValueRL),
    (EqTheory::NeedEq, Strategy::Need),
    (EqTheory::MamEq, Strategy::Name),
];

/// A probe start: a random closed term, advanced a random number of steps
/// while it stays within `max_size`.
pub fn probe_term(rng: &mut ChaCha8Rng, strategy: Strategy, max_size: usize) -> Term {
    let cfg = GenConfig::new(rng.gen(), max_size);
    let mut t: Term = gen_closed_term(&cfg).into_term();
    for _ in 0..rng.gen_range(0..=6) {
        match step_calculus(&t, strategy) {
            Some((_, next)) if term_size(&next) <= max_size => t = next,
            _ => break,
        }
    }
    t
}

/// Criterion 8: strong bisimulation probes.
pub fn suite_bisimulation(seed: u64, cases: usize, path_len: usize, max_size: usize, budget: usize) -> SuiteResult {
    let clock = Instant::now();
    let mut res = SuiteResult::new("bisimulation");
    for (k, (th, s)) in BISIMULATION_PAIRS.iter().enumerate() {
        let outcomes = sharded(cases, |i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((k as u64) << 32) ^ i as u64);
            let t = probe_term(&mut rng, *s, max_size);
            bisimulation_probe(&t, *th, *s, path_len, budget, &mut rng)
        });
        let mut moved = 0;
        for o in outcomes {
            res.cases += 1;
            let o = match o {
                Ok(o) => o,
                Err(e) => {
                    res.fail(|| e.to_string());
                    continue;
                }
            };
            if o.start != o.partner {
                moved += 1;
            }
            match o.verdict {
                Verdict::Pass => {}
                Verdict::Fail(r) => res.fail(|| format!("{th}/{s} {} ~ {}: {r}", o.start, o.partner)),
                Verdict::Inconclusive(r) => res.inconclusive(|| format!("{th}/{s} {}: {r}", o.start)),
            }
        }
        res.notes.insert(
            k,
            format!("{th}/{s}: {moved} of {cases} partners differ from the start"),
        );
    }
    res.seconds = clock.elapsed().as_secs_f64();
    res
}

/// The reflection half of criterion 9.
pub fn suite_reflection(seed: u64, terms: usize, k: usize, max_size: usize, budget: usize) -> SuiteResult {
    let clock = Instant::now();
    let mut res = SuiteResult::new("reflection");
    let corpus = gen_corpus(seed ^ 0x00ff_00ff, terms, max_size);
    let verdicts = sharded(corpus.len(), |i| {
        MachineId::ALL
            .iter()
            .map(|m| (*m, verify_reflection(*m, &corpus[i], k, budget)))
            .collect::<Vec<_>>()
    });
    for (t, vs) in corpus.iter().zip(verdicts) {
        for (m, v) in vs {
            res.cases += 1;
            match v {
                Ok(ReflectionVerdict::Pass) => {}
                Ok(ReflectionVerdict::Inconclusive(r)) => res.inconclusive(|| format!("{m} {}: {r}", render(t))),
                Ok(v) => res.fail(|| format!("{m} {}: {v:?}", render(t))),
                Err(e) => res.fail(|| format!("{m} {}: {e}", render(t))),
            }
        }
    }
    res.seconds = clock.elapsed().as_secs_f64();
    res
}

/// One acceptance criterion and the suites that decide it.
#[derive(Clone, Debug, Serialize)]
pub struct Criterion {
    pub number: usize,
    pub title: &'static str,
    pub parts: Vec<SuiteResult>,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        self.parts.iter().all(SuiteResult::passed)
    }

    pub fn line(&self) -> String {
        let detail: Vec<String> = self
            .parts
            .iter()
            .map(|p| {
                format!(
                    "{} {} cases/{} fail/{} inconclusive",
                    p.name, p.cases, p.failures, p.inconclusive
                )
            })
            .collect();
        format!(
            "criterion {} [{}] {}: {}",
            self.number,
            if self.passed() { "PASS" } else { "FAIL" },
            self.title,
            detail.join("; ")
        )
    }
}

pub const SUITE_NAMES: [&str; 6] = [
    "traces",
    "determinism",
    "corpus",
    "bisimulation",
    "reflection",
    "acceptance",
];

/// Runs the suites of a criterion group by name, or `None` for an unknown
/// name. `corpus` covers criteria 3 to 7 and progress; `acceptance` runs
/// all nine criteria.
pub fn run_named_suite(name: &str, seed: u64) -> Option<Vec<Criterion>> {
    let crit = |number, title, parts| Criterion { number, title, parts };
    Some(match name {
        "traces" => vec![crit(1, "trace reproduction", vec![suite_traces()])],
        "determinism" => vec![crit(2, "exhaustive determinism", vec![suite_determinism(7, 15)])],
        "corpus" => corpus_criteria(&suite_corpus(&CorpusConfig::acceptance(seed)), None),
        "bisimulation" => vec![crit(
            8,
            "strong bisimulation",
            vec![suite_bisimulation(seed, 1000, 3, 20, crate::distillery::DEFAULT_BUDGET)],
        )],
        "reflection" => vec![crit(
            9,
            "reflection",
            vec![suite_reflection(seed, 200, 10, 25, crate::distillery::DEFAULT_BUDGET)],
        )],
        "acceptance" => acceptance(seed),
        _ => return None,
    })
}

fn corpus_criteria(r: &CorpusReport, reflection: Option<SuiteResult>) -> Vec<Criterion> {
    let mut ninth = vec![r.progress.clone()];
    ninth.extend(reflection);
    vec![
        Criterion {
            number: 3,
            title: "distillation verification",
            parts: vec![r.distillation.clone()],
        },
        Criterion {
            number: 4,
            title: "simulation counts",
            parts: vec![r.counts.clone()],
        },
        Criterion {
            number: 5,
            title: "end-to-end agreement",
            parts: vec![r.agreement.clone()],
        },
        Criterion {
            number: 6,
            title: "invariants",
            parts: vec![r.invariants.clone(), states_floor(r.states)],
        },
        Criterion {
            number: 7,
            title: "complexity bounds",
            parts: vec![r.complexity.clone()],
        },
        Criterion {
            number: 9,
            title: "progress and reflection",
            parts: ninth,
        },
    ]
}

pub const MIN_INVARIANT_STATES: usize = 100_000;

fn states_floor(states: usize) -> SuiteResult {
    let mut s = SuiteResult::new("state-count");
    s.cases = 1;
    if states < MIN_INVARIANT_STATES {
        s.fail(|| format!("{states} states, at least {MIN_INVARIANT_STATES} required"));
    }
    s
}

/// All nine criteria, in order.
pub fn acceptance(seed: u64) -> Vec<Criterion> {
    let budget = crate::distillery::DEFAULT_BUDGET;
    let corpus = suite_corpus(&CorpusConfig::acceptance(seed));
    let reflection = suite_reflection(seed, 200, 10, 25, budget);
    let mut out = vec![
        Criterion {
            number: 1,
            title: "trace reproduction",
            parts: vec![suite_traces()],
        },
        Criterion {
            number: 2,
            title: "exhaustive determinism",
            parts: vec![suite_determinism(7, 15)],
        },
    ];
    out.extend(corpus_criteria(&corpus, Some(reflection)));
    out.push(Criterion {
        number: 8,
        title: "strong bisimulation",
        parts: vec![suite_bisimulation(seed, 1000, 3, 20, budget)],
    });
    out.sort_by_key(|c| c.number);
    out
}

/// Whether [`UNLIFTED_VALUE_REDUCT`] is equivalent to the rule's result.
pub fn unlifted_reduct_is_equivalent(budget: usize) -> bool {
    let trace = reference_traces()
        .into_iter()
        .find(|r| r.name == "delayed-omega-value-lr")
        .expect("present");
    let ours = parse(trace.steps[3].1.expect("term")).expect("parses");
    let shown = parse(UNLIFTED_VALUE_REDUCT).expect("parses");
    struct_equiv(&ours, &shown, EqTheory::Full, budget).is_equivalent()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic_and_closed() {
        for seed in 0..300 {
            let cfg = GenConfig::new(seed, 12);
            let t = gen_closed_term(&cfg);
            assert_eq!(t, gen_closed_term(&cfg));
            assert!(free_vars(&t).is_empty());
            assert!(term_size(&t) <= 12);
            assert!(crate::syntax::is_well_named(&t));
        }
    }

    #[test]
    fn enumeration_small_sizes() {
        assert!(enumerate_closed_terms(1).unwrap().is_empty());
        let two = enumerate_closed_terms(2).unwrap();
        assert_eq!(two.len(), 1);
        assert!(alpha_eq(&two[0], &parse("\\x.x").unwrap()));
        assert_eq!(
            enumerate_closed_terms(10),
            Err(HarnessError::SizeTooLarge {
                max: MAX_ENUMERATION_SIZE,
                got: 10
            })
        );
    }

    #[test]
    fn reference_eval_examples() {
        let id = PureTerm::parse("(\\x.x)(\\y.y)").unwrap();
        let r = reference_eval(&id, Strategy::Name, 10).unwrap().unwrap();
        assert!(alpha_eq(&r, &parse("\\y.y").unwrap()));
        let omega = PureTerm::parse("(\\x.x x)(\\x.x x)").unwrap();
        for s in Strategy::ALL {
            assert_eq!(reference_eval(&omega, s, 50).unwrap(), None);
        }
        let delayed = PureTerm::parse("((\\z.\\x.x x)(\\y.y))((\\z.\\x.x x)(\\y.y))").unwrap();
        assert_eq!(reference_eval(&delayed, Strategy::ValueLR, 50).unwrap(), None);
        assert!(reference_eval(&PureTerm::parse("x").unwrap(), Strategy::Name, 1).is_err());
    }

    #[test]
    fn differential_examples() {
        let id = PureTerm::parse("(\\x.x)(\\y.y)").unwrap();
        let d = differential_run(&id, Strategy::Name, 10).unwrap();
        assert!(d.agrees(), "{d:?}");
        assert!(d.machines.iter().all(|s| s.mul == 1 && s.exp == 1));
        let omega = PureTerm::parse("(\\x.x x)(\\x.x x)").unwrap();
        let d = differential_run(&omega, Strategy::Need, 30).unwrap();
        assert!(d.agrees(), "{d:?}");
        let lam = PureTerm::parse("\\x.x").unwrap();
        for s in Strategy::ALL {
            let d = differential_run(&lam, s, 5).unwrap();
            assert!(d.agrees() && d.machines.iter().all(|m| m.mul == 0 && m.exp == 0));
        }
    }

    #[test]
    fn reference_traces_reproduce() {
        let r = suite_traces();
        assert!(r.passed(), "{r:?}");
        assert!(unlifted_reduct_is_equivalent(crate::distillery::DEFAULT_BUDGET));
    }
}
