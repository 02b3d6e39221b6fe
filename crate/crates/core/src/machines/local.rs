//! Machines with local environments: KAM, CEK, LAM and the split CEK.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use super::{
    is_set, shared, support_names, Components, InvariantReport, MachineId, MachineState, SubtermIndex, TransitionLabel,
};
use crate::syntax::{free_vars, render, term_size, Name, Term};

#[derive(Clone, Debug)]
pub struct Closure {
    pub code: Term,
    pub env: LocalEnv,
}

impl Closure {
    pub fn new(code: Term, env: LocalEnv) -> Closure {
        Closure { code, env }
    }

    pub fn render(&self) -> String {
        format!("({}, {})", render(&self.code), self.env.render())
    }
}

#[derive(Debug)]
struct EnvCell {
    name: Name,
    value: Closure,
    rest: LocalEnv,
}

/// A persistent list of bindings; the head is the innermost one.
#[derive(Clone, Debug, Default)]
pub struct LocalEnv(Option<Arc<EnvCell>>);

impl LocalEnv {
    pub fn empty() -> LocalEnv {
        LocalEnv(None)
    }

    pub fn cons(&self, name: Name, value: Closure) -> LocalEnv {
        LocalEnv(Some(shared(EnvCell {
            name,
            value,
            rest: self.clone(),
        })))
    }

    pub fn lookup(&self, x: &Name) -> Option<&Closure> {
        self.iter().find(|(n, _)| *n == x).map(|(_, c)| c)
    }

    /// Bindings from the head outwards.
    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Closure)> {
        let mut cur = self.0.as_deref();
        std::iter::from_fn(move || {
            let cell = cur?;
            cur = cell.rest.0.as_deref();
            Some((&cell.name, &cell.value))
        })
    }

    pub fn len(&self) -> usize {
        self.iter().count()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    pub fn names(&self) -> Vec<Name> {
        self.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn render(&self) -> String {
        if self.is_empty() {
            return "ε".to_string();
        }
        self.iter()
            .map(|(n, c)| format!("[{}<-{}]", n, c.render()))
            .collect::<Vec<_>>()
            .join("::")
    }

    fn cells(&self) -> impl Iterator<Item = &Arc<EnvCell>> {
        let mut cur = self.0.as_ref();
        std::iter::from_fn(move || {
            let cell = cur?;
            cur = cell.rest.0.as_ref();
            Some(cell)
        })
    }
}

/// A CEK or LAM stack entry: a pending function or a pending argument.
#[derive(Clone, Debug)]
pub enum Tagged {
    Fun(Closure),
    Arg(Closure),
}

impl Tagged {
    pub fn closure(&self) -> &Closure {
        match self {
            Tagged::Fun(c) | Tagged::Arg(c) => c,
        }
    }

    pub fn render(&self) -> String {
        match self {
            Tagged::Fun(c) => format!("f{}", c.render()),
            Tagged::Arg(c) => format!("a{}", c.render()),
        }
    }
}

fn env_of(s: &MachineState) -> &LocalEnv {
    match &s.parts {
        Components::Kam { env, .. }
        | Components::Cek { env, .. }
        | Components::Lam { env, .. }
        | Components::SplitCek { env, .. } => env,
        _ => unreachable!("local machine"),
    }
}

pub(super) fn enabled(s: &MachineState) -> Vec<TransitionLabel> {
    use TransitionLabel::*;
    let mut out = Vec::new();
    let is_abs = matches!(s.code, Term::Abs(..));
    if matches!(s.code, Term::App(..)) {
        out.push(C1);
    }
    if let Term::Var(x) = &s.code {
        if env_of(s).lookup(x).is_some() {
            out.push(E);
        }
    }
    match &s.parts {
        Components::Kam { stack, .. } => {
            if is_abs && !stack.is_empty() {
                out.push(M);
            }
        }
        Components::Cek { stack, .. } => match stack.last() {
            Some(Tagged::Arg(_)) if is_abs => out.push(C2),
            Some(Tagged::Fun(f)) if is_abs && matches!(f.code, Term::Abs(..)) => out.push(M),
            _ => {}
        },
        Components::Lam { stack, .. } => match stack.last() {
            Some(Tagged::Fun(_)) if is_abs => out.push(C2),
            Some(Tagged::Arg(_)) if is_abs => out.push(M),
            _ => {}
        },
        Components::SplitCek { stack, dump, .. } => {
            if is_abs && !stack.is_empty() {
                out.push(C2);
            }
            if is_abs && stack.is_empty() {
                if let Some((f, _)) = dump.last() {
                    if matches!(f.code, Term::Abs(..)) {
                        out.push(M);
                    }
                }
            }
        }
        _ => unreachable!("local machine"),
    }
    out
}

/// Fires `label`, whose guard the caller has established.
pub(super) fn fire(s: &MachineState, label: TransitionLabel) -> MachineState {
    use TransitionLabel::*;
    let mut next = s.clone();
    let env = env_of(s).clone();
    if label == E {
        let Term::Var(x) = &s.code else { unreachable!() };
        let c = env.lookup(x).expect("guarded").clone();
        next.code = c.code;
        set_env(&mut next, c.env);
        return next;
    }
    match (&mut next.parts, label) {
        (Components::Kam { stack, .. }, C1) => {
            let Term::App(t, u) = &s.code else { unreachable!() };
            stack.push(Closure::new((**u).clone(), env));
            next.code = (**t).clone();
        }
        (Components::Kam { env: e, stack }, M) => {
            let Term::Abs(x, t) = &s.code else { unreachable!() };
            let c = stack.pop().expect("guarded");
            *e = env.cons(x.clone(), c);
            next.code = (**t).clone();
        }
        (Components::Cek { stack, .. }, C1) => {
            let Term::App(t, u) = &s.code else { unreachable!() };
            stack.push(Tagged::Arg(Closure::new((**u).clone(), env)));
            next.code = (**t).clone();
        }
        (Components::Cek { env: e, stack }, C2) => {
            let Some(Tagged::Arg(a)) = stack.pop() else {
                unreachable!()
            };
            stack.push(Tagged::Fun(Closure::new(s.code.clone(), env)));
            next.code = a.code;
            *e = a.env;
        }
        (Components::Cek { env: e, stack }, M) => {
            let Some(Tagged::Fun(f)) = stack.pop() else {
                unreachable!()
            };
            let Term::Abs(x, body) = f.code else { unreachable!() };
            *e = f.env.cons(x, Closure::new(s.code.clone(), env));
            next.code = *body;
        }
        (Components::Lam { stack, .. }, C1) => {
            let Term::App(t, u) = &s.code else { unreachable!() };
            stack.push(Tagged::Fun(Closure::new((**t).clone(), env)));
            next.code = (**u).clone();
        }
        (Components::Lam { env: e, stack }, C2) => {
            let Some(Tagged::Fun(f)) = stack.pop() else {
                unreachable!()
            };
            stack.push(Tagged::Arg(Closure::new(s.code.clone(), env)));
            next.code = f.code;
            *e = f.env;
        }
        (Components::Lam { env: e, stack }, M) => {
            let Term::Abs(x, body) = &s.code else { unreachable!() };
            let Some(Tagged::Arg(c)) = stack.pop() else {
                unreachable!()
            };
            *e = env.cons(x.clone(), c);
            next.code = (**body).clone();
        }
        (Components::SplitCek { stack, .. }, C1) => {
            let Term::App(t, u) = &s.code else { unreachable!() };
            stack.push(Closure::new((**u).clone(), env));
            next.code = (**t).clone();
        }
        (Components::SplitCek { env: e, stack, dump }, C2) => {
            let arg = stack.pop().expect("guarded");
            let rest = std::mem::take(stack);
            dump.push((Closure::new(s.code.clone(), env), rest));
            next.code = arg.code;
            *e = arg.env;
        }
        (Components::SplitCek { env: e, stack, dump }, M) => {
            let (f, saved) = dump.pop().expect("guarded");
            let Term::Abs(x, body) = f.code else { unreachable!() };
            *e = f.env.cons(x, Closure::new(s.code.clone(), env));
            *stack = saved;
            next.code = *body;
        }
        _ => unreachable!("label not admissible for this machine"),
    }
    next
}

fn set_env(s: &mut MachineState, new: LocalEnv) {
    match &mut s.parts {
        Components::Kam { env, .. }
        | Components::Cek { env, .. }
        | Components::Lam { env, .. }
        | Components::SplitCek { env, .. } => *env = new,
        _ => unreachable!("local machine"),
    }
}

// ---------------------------------------------------------------------------
// Decoding

/// Decodes closures, sharing the work for environment cells reached twice.
#[derive(Default)]
struct Decoder {
    memo: HashMap<*const EnvCell, Term>,
}

impl Decoder {
    fn closure(&mut self, c: &Closure) -> Term {
        self.under(&c.env, c.code.clone())
    }

    fn under(&mut self, env: &LocalEnv, mut t: Term) -> Term {
        for cell in env.cells() {
            let key = Arc::as_ptr(cell);
            let payload = match self.memo.get(&key) {
                Some(p) => p.clone(),
                None => {
                    let p = self.closure(&cell.value);
                    self.memo.insert(key, p.clone());
                    p
                }
            };
            t = Term::esub(t, cell.name.clone(), payload);
        }
        t
    }
}

pub(super) fn decode(s: &MachineState, filler: Term) -> Term {
    let mut d = Decoder::default();
    match &s.parts {
        Components::Kam { env, stack } => {
            let mut acc = d.under(env, filler);
            for c in stack.iter().rev() {
                acc = Term::app(acc, d.closure(c));
            }
            acc
        }
        Components::Cek { env, stack } | Components::Lam { env, stack } => {
            let mut acc = d.under(env, filler);
            for entry in stack.iter().rev() {
                acc = match entry {
                    Tagged::Fun(c) => Term::app(d.closure(c), acc),
                    Tagged::Arg(c) => Term::app(acc, d.closure(c)),
                };
            }
            acc
        }
        Components::SplitCek { env, stack, dump } => {
            let mut acc = d.under(env, filler);
            for c in stack.iter().rev() {
                acc = Term::app(acc, d.closure(c));
            }
            for (f, saved) in dump.iter().rev() {
                acc = Term::app(d.closure(f), acc);
                for c in saved.iter().rev() {
                    acc = Term::app(acc, d.closure(c));
                }
            }
            acc
        }
        _ => unreachable!("local machine"),
    }
}

// ---------------------------------------------------------------------------
// Invariants

/// Every closure reachable from a state, each environment cell visited once.
struct Reach<'a> {
    seen: HashSet<*const EnvCell>,
    closures: Vec<&'a Closure>,
    env_values: Vec<&'a Closure>,
}

impl<'a> Reach<'a> {
    fn visit(&mut self, c: &'a Closure) {
        self.closures.push(c);
        self.visit_env(&c.env);
    }

    fn visit_env(&mut self, env: &'a LocalEnv) {
        for cell in env.cells() {
            if !self.seen.insert(Arc::as_ptr(cell)) {
                return;
            }
            self.env_values.push(&cell.value);
            self.visit(&cell.value);
        }
    }
}

pub(super) fn check(s: &MachineState, r: &mut InvariantReport) {
    let top = Closure::new(s.code.clone(), env_of(s).clone());
    let mut reach = Reach {
        seen: HashSet::new(),
        closures: Vec::new(),
        env_values: Vec::new(),
    };
    reach.visit(&top);
    let mut value_required: Vec<&Closure> = Vec::new();
    match &s.parts {
        Components::Kam { stack, .. } => stack.iter().for_each(|c| reach.visit(c)),
        Components::Cek { stack, .. } | Components::Lam { stack, .. } => {
            let pending_values = |t: &Tagged| {
                matches!(
                    (s.machine, t),
                    (MachineId::Cek, Tagged::Fun(_)) | (MachineId::Lam, Tagged::Arg(_))
                )
            };
            for t in stack {
                reach.visit(t.closure());
                if pending_values(t) {
                    value_required.push(t.closure());
                }
            }
        }
        Components::SplitCek { stack, dump, .. } => {
            stack.iter().for_each(|c| reach.visit(c));
            for (f, saved) in dump {
                reach.visit(f);
                value_required.push(f);
                saved.iter().for_each(|c| reach.visit(c));
            }
        }
        _ => unreachable!("local machine"),
    }

    let initial = s.initial.as_term();
    let index = SubtermIndex::new(initial, false);
    let bound = term_size(initial);
    let closed = reach.closures.iter().all(|c| {
        let names = c.env.names();
        free_vars(&c.code).iter().all(|x| names.contains(x))
    });
    let subterm = reach.closures.iter().all(|c| index.contains(&c.code));
    let named = reach
        .closures
        .iter()
        .all(|c| is_set(support_names(&c.code).into_iter().chain(c.env.names())));
    let sized = reach.closures.iter().all(|c| c.env.len() <= bound);
    r.add("closure", closed);
    r.add("subterm", subterm);
    r.add("name", named);
    r.add("env-size", sized);
    if s.machine != MachineId::Kam {
        let values = reach
            .env_values
            .iter()
            .chain(value_required.iter())
            .all(|c| c.code.is_value());
        r.add("value", values);
    }
}
