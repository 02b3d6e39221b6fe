//! Machines with one global environment: the MAM and the three WAMs.

use std::collections::BTreeSet;

use super::{
    is_set, support_names, wrap, Components, InvariantReport, MachineError, MachineState, SubtermIndex, TransitionLabel,
};
use crate::syntax::{free_vars, fresh_rename_with, Name, Term};

/// A suspended head: the environment segment it owns and its variable.
type Head = (Vec<GlobalEntry>, Name);

/// `[x<-t]`, or `[x<-□]` when the payload is under evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalEntry {
    pub name: Name,
    pub payload: Option<Term>,
}

impl GlobalEntry {
    pub fn new(name: Name, payload: Term) -> GlobalEntry {
        GlobalEntry {
            name,
            payload: Some(payload),
        }
    }

    pub fn boxed(name: Name) -> GlobalEntry {
        GlobalEntry { name, payload: None }
    }
}

/// A WAM dump entry: the environment inner to the variable, the variable,
/// and the stack it was met with.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WamFrame {
    pub env: Vec<GlobalEntry>,
    pub var: Name,
    pub stack: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MergedItem {
    Arg(Term),
    Head(Vec<GlobalEntry>, Name),
}

fn position(env: &[GlobalEntry], x: &Name) -> Option<usize> {
    env.iter().rposition(|e| e.name == *x)
}

fn bound_payload<'a>(env: &'a [GlobalEntry], x: &Name) -> Option<(usize, &'a Term)> {
    let i = position(env, x)?;
    env[i].payload.as_ref().map(|t| (i, t))
}

pub(super) fn enabled(s: &MachineState) -> Vec<TransitionLabel> {
    use TransitionLabel::*;
    let mut out = Vec::new();
    let is_abs = matches!(s.code, Term::Abs(..));
    if matches!(s.code, Term::App(..)) {
        out.push(C1);
    }
    let var_bound = |env: &[GlobalEntry]| match &s.code {
        Term::Var(x) => bound_payload(env, x).is_some(),
        _ => false,
    };
    match &s.parts {
        Components::Mam { stack, env } => {
            if is_abs && !stack.is_empty() {
                out.push(M);
            }
            if var_bound(env) {
                out.push(E);
            }
        }
        Components::Wam { stack, dump, env } => {
            if is_abs && !stack.is_empty() {
                out.push(M);
            }
            if var_bound(env) {
                out.push(C2);
            }
            if is_abs && stack.is_empty() && !dump.is_empty() {
                out.push(E);
            }
        }
        Components::MergedWam { stack, env } => {
            match stack.last() {
                Some(MergedItem::Arg(_)) if is_abs => out.push(M),
                Some(MergedItem::Head(..)) if is_abs => out.push(E),
                _ => {}
            }
            if var_bound(env) {
                out.push(C2);
            }
        }
        Components::PointingWam { stack, dump, env } => {
            if is_abs && !stack.is_empty() {
                match dump.last() {
                    None => out.push(M1),
                    Some((y, _)) if box_index(env, y).is_some() => out.push(M2),
                    Some(_) => {}
                }
            }
            if var_bound(env) {
                out.push(C2);
            }
            if is_abs && stack.is_empty() && dump.last().is_some_and(|(x, _)| box_index(env, x).is_some()) {
                out.push(E);
            }
        }
        _ => unreachable!("global machine"),
    }
    out
}

fn box_index(env: &[GlobalEntry], y: &Name) -> Option<usize> {
    position(env, y).filter(|&j| env[j].payload.is_none())
}

/// Fires `label`, whose guard the caller has established.
pub(super) fn fire(s: &MachineState, label: TransitionLabel) -> MachineState {
    use TransitionLabel::*;
    let mut next = s.clone();
    let code = &s.code;
    match (&mut next.parts, label) {
        (Components::Mam { stack, .. } | Components::Wam { stack, .. } | Components::PointingWam { stack, .. }, C1) => {
            let Term::App(t, u) = code else { unreachable!() };
            stack.push((**u).clone());
            next.code = (**t).clone();
        }
        (Components::Mam { stack, env } | Components::Wam { stack, env, .. }, M)
        | (Components::PointingWam { stack, env, .. }, M1) => {
            let Term::Abs(x, t) = code else { unreachable!() };
            let u = stack.pop().expect("guarded");
            env.push(GlobalEntry::new(x.clone(), u));
            next.code = (**t).clone();
        }
        (Components::Mam { env, .. }, E) => {
            let Term::Var(x) = code else { unreachable!() };
            let (_, t) = bound_payload(env, x).expect("guarded");
            next.code = fresh_rename_with(t, &mut next.supply);
        }
        (Components::Wam { stack, dump, env }, C2) => {
            let Term::Var(x) = code else { unreachable!() };
            let (i, t) = bound_payload(env, x).expect("guarded");
            next.code = t.clone();
            let inner = env.split_off(i + 1);
            env.pop();
            dump.push(WamFrame {
                env: inner,
                var: x.clone(),
                stack: std::mem::take(stack),
            });
        }
        (Components::Wam { stack, dump, env }, E) => {
            let frame = dump.pop().expect("guarded");
            next.code = fresh_rename_with(code, &mut next.supply);
            env.push(GlobalEntry::new(frame.var, code.clone()));
            env.extend(frame.env);
            *stack = frame.stack;
        }
        (Components::MergedWam { stack, .. }, C1) => {
            let Term::App(t, u) = code else { unreachable!() };
            stack.push(MergedItem::Arg((**u).clone()));
            next.code = (**t).clone();
        }
        (Components::MergedWam { stack, env }, M) => {
            let Term::Abs(x, t) = code else { unreachable!() };
            let Some(MergedItem::Arg(u)) = stack.pop() else {
                unreachable!()
            };
            env.push(GlobalEntry::new(x.clone(), u));
            next.code = (**t).clone();
        }
        (Components::MergedWam { stack, env }, C2) => {
            let Term::Var(x) = code else { unreachable!() };
            let (i, t) = bound_payload(env, x).expect("guarded");
            next.code = t.clone();
            let inner = env.split_off(i + 1);
            env.pop();
            stack.push(MergedItem::Head(inner, x.clone()));
        }
        (Components::MergedWam { stack, env }, E) => {
            let Some(MergedItem::Head(inner, x)) = stack.pop() else {
                unreachable!()
            };
            next.code = fresh_rename_with(code, &mut next.supply);
            env.push(GlobalEntry::new(x, code.clone()));
            env.extend(inner);
        }
        (Components::PointingWam { stack, dump, env }, M2) => {
            let Term::Abs(x, t) = code else { unreachable!() };
            let u = stack.pop().expect("guarded");
            let (y, _) = dump.last().expect("guarded");
            let j = box_index(env, y).expect("guarded");
            env.insert(j, GlobalEntry::new(x.clone(), u));
            next.code = (**t).clone();
        }
        (Components::PointingWam { stack, dump, env }, C2) => {
            let Term::Var(x) = code else { unreachable!() };
            let (i, t) = bound_payload(env, x).expect("guarded");
            next.code = t.clone();
            env[i].payload = None;
            dump.push((x.clone(), std::mem::take(stack)));
        }
        (Components::PointingWam { stack, dump, env }, E) => {
            let (x, saved) = dump.pop().expect("guarded");
            let j = box_index(env, &x).expect("guarded");
            next.code = fresh_rename_with(code, &mut next.supply);
            env[j].payload = Some(code.clone());
            *stack = saved;
        }
        _ => unreachable!("label not admissible for this machine"),
    }
    next
}

// ---------------------------------------------------------------------------
// Decoding

/// `E<t>` for an environment stored outermost first.
fn plug_env(env: &[GlobalEntry], t: Term) -> Result<Term, MachineError> {
    let mut wrappers = Vec::with_capacity(env.len());
    for e in env {
        let payload = e.payload.clone().ok_or(MachineError::DualityViolation)?;
        wrappers.push((e.name.clone(), payload));
    }
    Ok(wrap(wrappers, t))
}

/// `π<t>` for a stack of arguments, top last.
fn plug_stack(stack: &[Term], t: Term) -> Term {
    stack.iter().rev().fold(t, |acc, u| Term::app(acc, u.clone()))
}

fn plug_wam_dump(dump: &[WamFrame], filler: Term) -> Result<Term, MachineError> {
    match dump.split_last() {
        None => Ok(filler),
        Some((top, rest)) => {
            let inner = plug_wam_dump(rest, plug_stack(&top.stack, Term::Var(top.var.clone())))?;
            Ok(Term::esub(plug_env(&top.env, inner)?, top.var.clone(), filler))
        }
    }
}

fn plug_merged(stack: &[MergedItem], filler: Term) -> Result<Term, MachineError> {
    match stack.split_last() {
        None => Ok(filler),
        Some((MergedItem::Arg(u), rest)) => plug_merged(rest, Term::app(filler, u.clone())),
        Some((MergedItem::Head(env, x), rest)) => {
            let inner = plug_merged(rest, Term::Var(x.clone()))?;
            Ok(Term::esub(plug_env(env, inner)?, x.clone(), filler))
        }
    }
}

/// The dual pair of a pointing environment and dump, plugged with `filler`.
/// The environment is consumed from its outer end, the dump from its top.
fn plug_pointing(env: &[GlobalEntry], dump: &[(Name, Vec<Term>)], filler: Term) -> Result<Term, MachineError> {
    match (env.split_first(), dump.split_last()) {
        (None, None) => Ok(filler),
        (None, Some(_)) => Err(MachineError::DualityViolation),
        (Some((e, inner)), _) => match &e.payload {
            Some(t) => Ok(Term::esub(
                plug_pointing(inner, dump, filler)?,
                e.name.clone(),
                t.clone(),
            )),
            None => {
                let Some(((y, pi), rest)) = dump.split_last() else {
                    return Err(MachineError::DualityViolation);
                };
                if *y != e.name {
                    return Err(MachineError::DualityViolation);
                }
                let body = plug_pointing(inner, rest, plug_stack(pi, Term::Var(y.clone())))?;
                Ok(Term::esub(body, y.clone(), filler))
            }
        },
    }
}

pub(super) fn decode(s: &MachineState, filler: Term) -> Result<Term, MachineError> {
    match &s.parts {
        Components::Mam { stack, env } => plug_env(env, plug_stack(stack, filler)),
        Components::Wam { stack, dump, env } => plug_env(env, plug_wam_dump(dump, plug_stack(stack, filler))?),
        Components::MergedWam { stack, env } => plug_env(env, plug_merged(stack, filler)?),
        Components::PointingWam { stack, dump, env } => plug_pointing(env, dump, plug_stack(stack, filler)),
        _ => unreachable!("global machine"),
    }
}

// ---------------------------------------------------------------------------
// Invariants

/// `(code, env)` is globally closed: each payload is closed by the entries
/// outer to it and the code by the whole environment.
fn globally_closed(code: &Term, env: &[GlobalEntry]) -> bool {
    let mut scope: BTreeSet<Name> = BTreeSet::new();
    for e in env {
        if let Some(t) = &e.payload {
            if !free_vars(t).is_subset(&scope) {
                return false;
            }
        }
        scope.insert(e.name.clone());
    }
    free_vars(code).is_subset(&scope)
}

fn closure_support(code: &Term, env: &[GlobalEntry]) -> Vec<Name> {
    let mut names = support_names(code);
    for e in env {
        names.push(e.name.clone());
        if let Some(t) = &e.payload {
            names.extend(support_names(t));
        }
    }
    names
}

/// The closures a WAM-like state stands for: the active one and one per
/// suspended variable, each with the environment rebuilt around it.
fn rebuilt_closures(
    code: Term,
    env: &[GlobalEntry],
    frames: &[(Vec<GlobalEntry>, Name, Term)],
) -> Vec<(Term, Vec<GlobalEntry>)> {
    let mut out = Vec::with_capacity(frames.len() + 1);
    let mut cur_env = env.to_vec();
    let mut cur_code = code;
    for (inner, x, next_code) in frames {
        out.push((cur_code.clone(), cur_env.clone()));
        cur_env.push(GlobalEntry::new(x.clone(), cur_code));
        cur_env.extend(inner.iter().cloned());
        cur_code = next_code.clone();
    }
    out.push((cur_code, cur_env));
    out
}

pub(super) fn check(s: &MachineState, mul_count: Option<usize>, r: &mut InvariantReport) {
    let index = SubtermIndex::new(s.initial.as_term(), true);
    let (env_len, dump_len) = super::env_and_dump_len(s);
    let mut codes: Vec<&Term> = vec![&s.code];
    match &s.parts {
        Components::Mam { stack, env } => {
            codes.extend(stack.iter());
            codes.extend(env.iter().filter_map(|e| e.payload.as_ref()));
            let active = plug_stack(stack, s.code.clone());
            r.add("closure", globally_closed(&active, env));
            r.add("subterm", codes.iter().all(|t| index.contains(t)));
            r.add("name", is_set(closure_support(&active, env)));
        }
        Components::Wam { stack, dump, env } => {
            codes.extend(stack.iter());
            codes.extend(env.iter().filter_map(|e| e.payload.as_ref()));
            for f in dump {
                codes.extend(f.stack.iter());
                codes.extend(f.env.iter().filter_map(|e| e.payload.as_ref()));
            }
            let frames: Vec<_> = dump
                .iter()
                .rev()
                .map(|f| {
                    (
                        f.env.clone(),
                        f.var.clone(),
                        plug_stack(&f.stack, Term::Var(f.var.clone())),
                    )
                })
                .collect();
            let closures = rebuilt_closures(plug_stack(stack, s.code.clone()), env, &frames);
            add_closure_clauses(r, &closures, codes.iter().all(|t| index.contains(t)));
        }
        Components::MergedWam { stack, env } => {
            let mut segments: Vec<(Option<Head>, Vec<Term>)> = vec![(None, Vec::new())];
            for item in stack.iter().rev() {
                match item {
                    MergedItem::Arg(u) => {
                        codes.push(u);
                        segments.last_mut().expect("nonempty").1.push(u.clone());
                    }
                    MergedItem::Head(e, x) => {
                        codes.extend(e.iter().filter_map(|e| e.payload.as_ref()));
                        segments.push((Some((e.clone(), x.clone())), Vec::new()));
                    }
                }
            }
            codes.extend(env.iter().filter_map(|e| e.payload.as_ref()));
            let plug = |args: &[Term], t: Term| args.iter().fold(t, |acc, u| Term::app(acc, u.clone()));
            let active = plug(&segments[0].1, s.code.clone());
            let frames: Vec<_> = segments[1..]
                .iter()
                .map(|(h, args)| {
                    let (e, x) = h.clone().expect("head segment");
                    let c = plug(args, Term::Var(x.clone()));
                    (e, x, c)
                })
                .collect();
            let closures = rebuilt_closures(active, env, &frames);
            add_closure_clauses(r, &closures, codes.iter().all(|t| index.contains(t)));
        }
        Components::PointingWam { stack, dump, env } => {
            codes.extend(stack.iter());
            codes.extend(env.iter().filter_map(|e| e.payload.as_ref()));
            for (_, st) in dump {
                codes.extend(st.iter());
            }
            r.add("subterm", codes.iter().all(|t| index.contains(t)));
            let active = plug_stack(stack, s.code.clone());
            let mut names = closure_support(&active, env);
            for (_, st) in dump {
                names.extend(st.iter().flat_map(support_names));
            }
            r.add("name", is_set(names));
            let boxes: Vec<usize> = (0..env.len()).filter(|&i| env[i].payload.is_none()).collect();
            let first_box = boxes.first().copied().unwrap_or(env.len());
            let mut closed = globally_closed(&active, &env[..first_box]);
            if super::duality_check(env, dump) {
                for (k, (x, st)) in dump.iter().rev().enumerate() {
                    let until = boxes.get(k + 1).copied().unwrap_or(env.len());
                    closed &= globally_closed(&plug_stack(st, Term::Var(x.clone())), &env[..until]);
                }
                r.add("duality", true);
            } else {
                r.add("duality", false);
            }
            r.add("closure", closed);
            return;
        }
        _ => unreachable!("global machine"),
    }
    if let Some(m) = mul_count {
        r.add("env-size", env_len + dump_len <= m);
    }
}

fn add_closure_clauses(r: &mut InvariantReport, closures: &[(Term, Vec<GlobalEntry>)], subterm: bool) {
    r.add("closure", closures.iter().all(|(c, e)| globally_closed(c, e)));
    r.add("subterm", subterm);
    r.add("name", closures.iter().all(|(c, e)| is_set(closure_support(c, e))));
}
