//! Eight environment machines, their decodings into terms with explicit
//! substitutions, and their invariants as executable checks.
//!
//! All lists (environments, stacks, dumps) are `Vec`s whose head is the last
//! element. For global environments index 0 is therefore the outermost
//! substitution and `push` adds a new innermost one.

mod global;
mod local;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::{EvalContext, StepLabel, Strategy};
use crate::syntax::{
    alpha_key, free_occurrence_list, free_occurrence_paths, free_vars, fresh_rename, is_well_named, rename_free,
    render, subterms, support, term_size, Name, NameSupply, PureTerm, Term,
};

pub use global::{GlobalEntry, MergedItem, WamFrame};
pub use local::{Closure, LocalEnv, Tagged};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MachineId {
    Kam,
    Cek,
    Lam,
    Mam,
    SplitCek,
    Wam,
    MergedWam,
    PointingWam,
}

impl MachineId {
    pub const ALL: [MachineId; 8] = [
        MachineId::Kam,
        MachineId::Cek,
        MachineId::Lam,
        MachineId::Mam,
        MachineId::SplitCek,
        MachineId::Wam,
        MachineId::MergedWam,
        MachineId::PointingWam,
    ];

    pub fn strategy(self) -> Strategy {
        match self {
            MachineId::Kam | MachineId::Mam => Strategy::Name,
            MachineId::Cek | MachineId::SplitCek => Strategy::ValueLR,
            MachineId::Lam => Strategy::ValueRL,
            MachineId::Wam | MachineId::MergedWam | MachineId::PointingWam => Strategy::Need,
        }
    }

    pub fn labels(self) -> &'static [TransitionLabel] {
        use TransitionLabel::*;
        match self {
            MachineId::Kam | MachineId::Mam => &[C1, M, E],
            MachineId::PointingWam => &[C1, C2, M1, M2, E],
            _ => &[C1, C2, M, E],
        }
    }

    pub fn has_global_env(self) -> bool {
        matches!(
            self,
            MachineId::Mam | MachineId::Wam | MachineId::MergedWam | MachineId::PointingWam
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MachineId::Kam => "kam",
            MachineId::Cek => "cek",
            MachineId::Lam => "lam",
            MachineId::Mam => "mam",
            MachineId::SplitCek => "split-cek",
            MachineId::Wam => "wam",
            MachineId::MergedWam => "merged-wam",
            MachineId::PointingWam => "pointing-wam",
        }
    }
}

impl fmt::Display for MachineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MachineId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        MachineId::ALL
            .into_iter()
            .find(|m| m.as_str() == norm || m.as_str().replace('-', "") == norm)
            .ok_or_else(|| format!("unknown machine `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionLabel {
    C1,
    C2,
    M,
    M1,
    M2,
    E,
}

impl TransitionLabel {
    pub fn is_commutative(self) -> bool {
        matches!(self, TransitionLabel::C1 | TransitionLabel::C2)
    }

    pub fn is_multiplicative(self) -> bool {
        matches!(self, TransitionLabel::M | TransitionLabel::M1 | TransitionLabel::M2)
    }

    /// The calculus step a principal transition simulates.
    pub fn calculus_label(self) -> Option<StepLabel> {
        match self {
            TransitionLabel::C1 | TransitionLabel::C2 => None,
            TransitionLabel::E => Some(StepLabel::Exp),
            _ => Some(StepLabel::Mul),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TransitionLabel::C1 => "c1",
            TransitionLabel::C2 => "c2",
            TransitionLabel::M => "m",
            TransitionLabel::M1 => "m1",
            TransitionLabel::M2 => "m2",
            TransitionLabel::E => "e",
        }
    }
}

impl fmt::Display for TransitionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("open term: free variables {0:?}")]
    OpenTerm(Vec<String>),
    #[error("malformed {machine} state: {reason}")]
    MalformedState { machine: MachineId, reason: String },
    #[error("environment and dump are not dual")]
    DualityViolation,
}

/// Machine-specific components besides the code.
#[derive(Clone, Debug)]
pub enum Components {
    Kam {
        env: LocalEnv,
        stack: Vec<Closure>,
    },
    Cek {
        env: LocalEnv,
        stack: Vec<Tagged>,
    },
    Lam {
        env: LocalEnv,
        stack: Vec<Tagged>,
    },
    SplitCek {
        env: LocalEnv,
        stack: Vec<Closure>,
        dump: Vec<(Closure, Vec<Closure>)>,
    },
    Mam {
        stack: Vec<Term>,
        env: Vec<GlobalEntry>,
    },
    Wam {
        stack: Vec<Term>,
        dump: Vec<WamFrame>,
        env: Vec<GlobalEntry>,
    },
    MergedWam {
        stack: Vec<MergedItem>,
        env: Vec<GlobalEntry>,
    },
    PointingWam {
        stack: Vec<Term>,
        dump: Vec<(Name, Vec<Term>)>,
        env: Vec<GlobalEntry>,
    },
}

#[derive(Clone, Debug)]
pub struct MachineState {
    pub machine: MachineId,
    pub code: Term,
    pub parts: Components,
    pub supply: NameSupply,
    pub initial: PureTerm,
}

impl fmt::Display for MachineState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_state(self))
    }
}

/// The initial state for closed `t`. Terms that are not well-named are
/// freshened first.
pub fn inject(m: MachineId, t: &PureTerm) -> Result<MachineState, MachineError> {
    let fv = free_vars(t);
    if !fv.is_empty() {
        return Err(MachineError::OpenTerm(fv.iter().map(|n| n.to_string()).collect()));
    }
    let code = if is_well_named(t) {
        t.as_term().clone()
    } else {
        fresh_rename(t, &BTreeSet::new())
    };
    let initial = PureTerm::new(code.clone()).expect("renaming keeps terms pure");
    let parts = match m {
        MachineId::Kam => Components::Kam {
            env: LocalEnv::empty(),
            stack: Vec::new(),
        },
        MachineId::Cek => Components::Cek {
            env: LocalEnv::empty(),
            stack: Vec::new(),
        },
        MachineId::Lam => Components::Lam {
            env: LocalEnv::empty(),
            stack: Vec::new(),
        },
        MachineId::SplitCek => Components::SplitCek {
            env: LocalEnv::empty(),
            stack: Vec::new(),
            dump: Vec::new(),
        },
        MachineId::Mam => Components::Mam {
            stack: Vec::new(),
            env: Vec::new(),
        },
        MachineId::Wam => Components::Wam {
            stack: Vec::new(),
            dump: Vec::new(),
            env: Vec::new(),
        },
        MachineId::MergedWam => Components::MergedWam {
            stack: Vec::new(),
            env: Vec::new(),
        },
        MachineId::PointingWam => Components::PointingWam {
            stack: Vec::new(),
            dump: Vec::new(),
            env: Vec::new(),
        },
    };
    Ok(MachineState {
        machine: m,
        supply: NameSupply::after(&code),
        code,
        parts,
        initial,
    })
}

/// The labels of all rules whose guard holds in `s`.
pub fn enabled_rules(s: &MachineState) -> Vec<TransitionLabel> {
    if s.machine.has_global_env() {
        global::enabled(s)
    } else {
        local::enabled(s)
    }
}

/// Applies the unique matching rule, or returns `None` on a final state.
pub fn step_machine(s: &MachineState) -> Result<Option<(TransitionLabel, MachineState)>, MachineError> {
    let rules = enabled_rules(s);
    match rules.as_slice() {
        [] if is_final_state(s) => Ok(None),
        [] => Err(malformed(s, "no rule applies to a non-final state")),
        [label] => {
            let next = if s.machine.has_global_env() {
                global::fire(s, *label)
            } else {
                local::fire(s, *label)
            };
            Ok(Some((*label, next)))
        }
        many => Err(malformed(s, &format!("several rules apply: {many:?}"))),
    }
}

fn malformed(s: &MachineState, reason: &str) -> MachineError {
    MachineError::MalformedState {
        machine: s.machine,
        reason: reason.to_string(),
    }
}

/// Syntactic finality: an abstraction with nothing left to do.
pub fn is_final_state(s: &MachineState) -> bool {
    if !matches!(s.code, Term::Abs(..)) {
        return false;
    }
    match &s.parts {
        Components::Kam { stack, .. } => stack.is_empty(),
        Components::Cek { stack, .. } | Components::Lam { stack, .. } => stack.is_empty(),
        Components::SplitCek { stack, dump, .. } => stack.is_empty() && dump.is_empty(),
        Components::Mam { stack, .. } => stack.is_empty(),
        Components::Wam { stack, dump, .. } => stack.is_empty() && dump.is_empty(),
        Components::MergedWam { stack, .. } => stack.is_empty(),
        Components::PointingWam { stack, dump, .. } => stack.is_empty() && dump.is_empty(),
    }
}

/// The term a state stands for.
pub fn decode_state(s: &MachineState) -> Result<Term, MachineError> {
    decode_around(s, s.code.clone())
}

/// Decodes `s` with `filler` in place of its code.
pub fn decode_around(s: &MachineState, filler: Term) -> Result<Term, MachineError> {
    if s.machine.has_global_env() {
        global::decode(s, filler)
    } else {
        Ok(local::decode(s, filler))
    }
}

/// The evaluation context the decoding wraps around the code.
pub fn decoded_context(s: &MachineState) -> Result<Option<EvalContext>, MachineError> {
    let hole = s.supply.clone().fresh(&Name::from("hole"));
    let t = decode_around(s, Term::Var(hole.clone()))?;
    let paths = free_occurrence_paths(&t, &hole);
    Ok(match paths.as_slice() {
        [p] => EvalContext::from_path(&t, p, s.machine.strategy()),
        _ => None,
    })
}

/// Pointing WAM duality between a global environment and a dump.
pub fn duality_check(env: &[GlobalEntry], dump: &[(Name, Vec<Term>)]) -> bool {
    let mut top = dump.len();
    for entry in env {
        if entry.payload.is_none() {
            if top == 0 || dump[top - 1].0 != entry.name {
                return false;
            }
            top -= 1;
        }
    }
    top == 0
}

/// Commutative measure used for local linearity: code size, plus the size of
/// the pending closure on top of the stack for value machines.
pub fn card(s: &MachineState) -> usize {
    let base = term_size(&s.code);
    match &s.parts {
        Components::Cek { stack, .. } => match stack.last() {
            Some(Tagged::Arg(c)) => base + term_size(&c.code),
            _ => base,
        },
        Components::Lam { stack, .. } => match stack.last() {
            Some(Tagged::Fun(c)) => base + term_size(&c.code),
            _ => base,
        },
        Components::SplitCek { stack, .. } => match stack.last() {
            Some(c) => base + term_size(&c.code),
            None => base,
        },
        _ => base,
    }
}

/// Substitutions held anywhere in the state, and the number of suspended
/// variables, as used by the call-by-need counting identities.
pub fn env_and_dump_len(s: &MachineState) -> (usize, usize) {
    match &s.parts {
        Components::Mam { env, .. } => (env.len(), 0),
        Components::Wam { env, dump, .. } => (env.len() + dump.iter().map(|f| f.env.len()).sum::<usize>(), dump.len()),
        Components::MergedWam { env, stack } => stack.iter().fold((env.len(), 0), |(e, d), item| match item {
            MergedItem::Head(inner, _) => (e + inner.len(), d + 1),
            MergedItem::Arg(_) => (e, d),
        }),
        Components::PointingWam { env, dump, .. } => (env.iter().filter(|e| e.payload.is_some()).count(), dump.len()),
        _ => (0, 0),
    }
}

// ---------------------------------------------------------------------------
// Executions and traces

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Final,
    FuelExhausted,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub c1: usize,
    pub c2: usize,
    pub m: usize,
    pub e: usize,
}

impl Counts {
    pub fn record(&mut self, l: TransitionLabel) {
        match l {
            TransitionLabel::C1 => self.c1 += 1,
            TransitionLabel::C2 => self.c2 += 1,
            TransitionLabel::E => self.e += 1,
            _ => self.m += 1,
        }
    }

    pub fn commutative(&self) -> usize {
        self.c1 + self.c2
    }

    pub fn principal(&self) -> usize {
        self.m + self.e
    }

    pub fn total(&self) -> usize {
        self.commutative() + self.principal()
    }
}

/// Raw states and labels of a run, without decodings.
#[derive(Clone, Debug)]
pub struct Execution {
    pub machine: MachineId,
    pub states: Vec<MachineState>,
    pub labels: Vec<TransitionLabel>,
    pub outcome: Outcome,
}

impl Execution {
    pub fn counts(&self) -> Counts {
        let mut c = Counts::default();
        for l in &self.labels {
            c.record(*l);
        }
        c
    }

    pub fn last(&self) -> &MachineState {
        self.states.last().expect("executions start from a state")
    }
}

/// Runs `t` for at most `fuel` transitions.
pub fn execute(m: MachineId, t: &PureTerm, fuel: usize) -> Result<Execution, MachineError> {
    let mut states = vec![inject(m, t)?];
    let mut labels = Vec::new();
    let mut outcome = Outcome::FuelExhausted;
    for _ in 0..=fuel {
        let cur = states.last().expect("nonempty");
        match step_machine(cur)? {
            None => {
                outcome = Outcome::Final;
                break;
            }
            Some(_) if labels.len() == fuel => break,
            Some((l, next)) => {
                labels.push(l);
                states.push(next);
            }
        }
    }
    Ok(Execution {
        machine: m,
        states,
        labels,
        outcome,
    })
}

#[derive(Clone, Debug)]
pub struct StepRecord {
    pub index: usize,
    pub label: TransitionLabel,
    pub pre: MachineState,
    pub post: MachineState,
    pub decoded_pre: Term,
    pub decoded_post: Term,
    /// Counters after this step.
    pub counts: Counts,
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub machine: MachineId,
    pub initial: PureTerm,
    pub fuel: usize,
    pub initial_state: MachineState,
    pub initial_decoded: Term,
    pub steps: Vec<StepRecord>,
    pub outcome: Outcome,
    pub counts: Counts,
}

impl Trace {
    pub fn final_state(&self) -> &MachineState {
        self.steps.last().map(|r| &r.post).unwrap_or(&self.initial_state)
    }

    pub fn final_decoded(&self) -> &Term {
        self.steps
            .last()
            .map(|r| &r.decoded_post)
            .unwrap_or(&self.initial_decoded)
    }

    pub fn labels(&self) -> Vec<TransitionLabel> {
        self.steps.iter().map(|r| r.label).collect()
    }

    /// One JSON object per line: a header, then one record per step.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let header = serde_json::json!({
            "machine": self.machine.as_str(),
            "initial": render(&self.initial),
            "fuel": self.fuel,
        });
        out.push_str(&header.to_string());
        out.push('\n');
        for r in &self.steps {
            let rec = serde_json::json!({
                "i": r.index,
                "label": r.label.as_str(),
                "state": render_state(&r.post),
                "decoded": render(&r.decoded_post),
                "counters": {"c": r.counts.commutative(), "m": r.counts.m, "e": r.counts.e},
            });
            out.push_str(&rec.to_string());
            out.push('\n');
        }
        out
    }

    /// Human-readable listing, one step per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.machine, render(&self.initial));
        out.push_str(&format!("   0     {}\n", render_state(&self.initial_state)));
        for r in &self.steps {
            out.push_str(&format!(
                "{:>4} {:<3} {}\n",
                r.index,
                r.label.as_str(),
                render_state(&r.post)
            ));
        }
        out.push_str(&format!(
            "{:?}: c1={} c2={} m={} e={}\n",
            self.outcome, self.counts.c1, self.counts.c2, self.counts.m, self.counts.e
        ));
        out
    }
}

/// Runs `t` (freshened) for at most `fuel` steps and decodes every state.
pub fn run_machine(m: MachineId, t: &PureTerm, fuel: usize) -> Result<Trace, MachineError> {
    let fv = free_vars(t);
    if !fv.is_empty() {
        return Err(MachineError::OpenTerm(fv.iter().map(|n| n.to_string()).collect()));
    }
    let fresh = PureTerm::new(fresh_rename(t, &BTreeSet::new())).expect("renaming keeps terms pure");
    let exec = execute(m, &fresh, fuel)?;
    trace_of(exec, t.clone(), fuel)
}

/// Decodes an execution into a trace.
pub fn trace_of(exec: Execution, initial: PureTerm, fuel: usize) -> Result<Trace, MachineError> {
    let decoded: Vec<Term> = exec.states.iter().map(decode_state).collect::<Result<_, _>>()?;
    let mut counts = Counts::default();
    let mut steps = Vec::with_capacity(exec.labels.len());
    for (i, l) in exec.labels.iter().enumerate() {
        counts.record(*l);
        steps.push(StepRecord {
            index: i + 1,
            label: *l,
            pre: exec.states[i].clone(),
            post: exec.states[i + 1].clone(),
            decoded_pre: decoded[i].clone(),
            decoded_post: decoded[i + 1].clone(),
            counts,
        });
    }
    Ok(Trace {
        machine: exec.machine,
        initial,
        fuel,
        initial_state: exec.states[0].clone(),
        initial_decoded: decoded[0].clone(),
        steps,
        outcome: exec.outcome,
        counts,
    })
}

// ---------------------------------------------------------------------------
// Invariants

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClauseResult {
    pub clause: &'static str,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InvariantReport {
    pub machine: MachineId,
    pub clauses: Vec<ClauseResult>,
}

impl InvariantReport {
    pub fn all_hold(&self) -> bool {
        self.clauses.iter().all(|c| c.holds)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.clauses.iter().filter(|c| !c.holds).map(|c| c.clause).collect()
    }

    pub fn holds(&self, clause: &str) -> Option<bool> {
        self.clauses.iter().find(|c| c.clause == clause).map(|c| c.holds)
    }

    fn add(&mut self, clause: &'static str, holds: bool) {
        self.clauses.push(ClauseResult { clause, holds });
    }
}

/// Evaluates every invariant clause of the machine on `s`.
/// `mul_count` is the number of multiplicative steps that led to `s`, used
/// by the environment bound of global-environment machines.
pub fn check_machine_invariants(s: &MachineState, mul_count: Option<usize>) -> InvariantReport {
    let mut r = InvariantReport {
        machine: s.machine,
        clauses: Vec::new(),
    };
    if s.machine.has_global_env() {
        global::check(s, mul_count, &mut r);
    } else {
        local::check(s, &mut r);
    }
    let ctx = matches!(decoded_context(s), Ok(Some(c)) if c.is_admissible());
    r.add("contextual-decoding", ctx);
    r
}

/// Subterms of the initial code, literally or up to a consistent renaming
/// of all variables (bound and free), as copies made by renaming machines are.
struct SubtermIndex {
    keys: HashSet<String>,
    up_to_alpha: bool,
}

impl SubtermIndex {
    fn new(initial: &Term, up_to_alpha: bool) -> SubtermIndex {
        let keys = subterms(initial)
            .into_iter()
            .map(|t| if up_to_alpha { shape_key(t) } else { render(t) })
            .collect();
        SubtermIndex { keys, up_to_alpha }
    }

    fn contains(&self, t: &Term) -> bool {
        let k = if self.up_to_alpha { shape_key(t) } else { render(t) };
        self.keys.contains(&k)
    }
}

/// α-key of `t` after naming its free variables by first occurrence.
fn shape_key(t: &Term) -> String {
    let mut order: Vec<Name> = Vec::new();
    for x in free_occurrence_list(t) {
        if !order.contains(&x) {
            order.push(x);
        }
    }
    let renamed = order.iter().enumerate().fold(t.clone(), |acc, (i, x)| {
        rename_free(&acc, x, &Name::from(format!("free${}", u64::MAX - i as u64).as_str()))
    });
    alpha_key(&renamed)
}

/// Whether `names` has no repetitions.
fn is_set(names: impl IntoIterator<Item = Name>) -> bool {
    let mut seen = HashSet::new();
    names.into_iter().all(|n| seen.insert(n))
}

fn support_names(t: &Term) -> Vec<Name> {
    support(t).names().to_vec()
}

// ---------------------------------------------------------------------------
// Rendering

fn render_list<T>(items: impl DoubleEndedIterator<Item = T>, f: impl Fn(T) -> String) -> String {
    let parts: Vec<String> = items.rev().map(f).collect();
    if parts.is_empty() {
        "ε".to_string()
    } else {
        parts.join("::")
    }
}

/// A state as `<code | component | ...>`, lists written head first.
pub fn render_state(s: &MachineState) -> String {
    let code = render(&s.code);
    let genv = |env: &Vec<GlobalEntry>| {
        render_list(env.iter(), |e| match &e.payload {
            Some(t) => format!("[{}<-{}]", e.name, render(t)),
            None => format!("[{}<-□]", e.name),
        })
    };
    let codes = |st: &Vec<Term>| render_list(st.iter(), render);
    match &s.parts {
        Components::Kam { env, stack } => format!(
            "<{} | {} | {}>",
            code,
            env.render(),
            render_list(stack.iter(), |c| c.render())
        ),
        Components::Cek { env, stack } | Components::Lam { env, stack } => format!(
            "<{} | {} | {}>",
            code,
            env.render(),
            render_list(stack.iter(), |t| t.render())
        ),
        Components::SplitCek { env, stack, dump } => format!(
            "<{} | {} | {} | {}>",
            code,
            env.render(),
            render_list(stack.iter(), |c| c.render()),
            render_list(dump.iter(), |(c, st)| format!(
                "({}, {})",
                c.render(),
                render_list(st.iter(), |c| c.render())
            ))
        ),
        Components::Mam { stack, env } => format!("<{} | {} | {}>", code, codes(stack), genv(env)),
        Components::Wam { stack, dump, env } => format!(
            "<{} | {} | {} | {}>",
            code,
            codes(stack),
            render_list(dump.iter(), |d| format!(
                "({}, {}, {})",
                genv(&d.env),
                d.var,
                codes(&d.stack)
            )),
            genv(env)
        ),
        Components::MergedWam { stack, env } => format!(
            "<{} | {} | {}>",
            code,
            render_list(stack.iter(), |i| match i {
                MergedItem::Arg(t) => format!("a({})", render(t)),
                MergedItem::Head(e, x) => format!("h({}, {})", genv(e), x),
            }),
            genv(env)
        ),
        Components::PointingWam { stack, dump, env } => format!(
            "<{} | {} | {} | {}>",
            code,
            codes(stack),
            render_list(dump.iter(), |(x, st)| format!("({}, {})", x, codes(st))),
            genv(env)
        ),
    }
}

fn wrap(wrappers: Vec<(Name, Term)>, core: Term) -> Term {
    wrappers
        .into_iter()
        .rev()
        .fold(core, |acc, (x, u)| Term::esub(acc, x, u))
}

fn shared<T>(v: T) -> Arc<T> {
    Arc::new(v)
}

#[cfg(test)]
mod tests;
