//! The four deterministic strategies: call-by-name, left-to-right and
//! right-to-left call-by-value, and call-by-need.
//!
//! Evaluation contexts are frame paths. [`decompose_all`] enumerates every
//! admissible context position and every root redex found there, so that
//! determinism is something tests can check rather than assume.
//! [`step_calculus`] uses a linear-time head search instead and is
//! cross-checked against the exhaustive one.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{
    binders_along, free_vars, occurs_free, rename_free, subterm_at, subterm_at_mut, Dir, Name, NameSupply, Term,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Name,
    ValueLR,
    ValueRL,
    Need,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Name, Strategy::ValueLR, Strategy::ValueRL, Strategy::Need];

    /// Whether the multiplicative rule asks for an answer as argument.
    pub fn value_argument(self) -> bool {
        matches!(self, Strategy::ValueLR | Strategy::ValueRL)
    }

    /// Whether the exponential rule asks for an answer as payload.
    pub fn value_payload(self) -> bool {
        !matches!(self, Strategy::Name)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Name => "name",
            Strategy::ValueLR => "value-lr",
            Strategy::ValueRL => "value-rl",
            Strategy::Need => "need",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "name" | "cbn" => Ok(Strategy::Name),
            "value-lr" | "valuelr" | "lr" | "cbv" => Ok(Strategy::ValueLR),
            "value-rl" | "valuerl" | "rl" => Ok(Strategy::ValueRL),
            "need" | "cbneed" => Ok(Strategy::Need),
            _ => Err(format!("unknown strategy `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepLabel {
    Mul,
    Exp,
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepLabel::Mul => "m",
            StepLabel::Exp => "e",
        })
    }
}

/// One layer of a context, seen from the outside in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Frame {
    /// `<.> t`
    AppLeft(Term),
    /// `t <.>`
    AppRight(Term),
    /// `<.>[x<-u]`
    SubBody(Name, Term),
    /// `t[x<-<.>]`, where `t` holds `x` in needed position.
    SubInside(Name, Term),
}

impl Frame {
    fn dir(&self) -> Dir {
        match self {
            Frame::AppLeft(_) => Dir::AppFun,
            Frame::AppRight(_) => Dir::AppArg,
            Frame::SubBody(..) => Dir::SubBody,
            Frame::SubInside(..) => Dir::SubPayload,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalContext {
    pub strategy: Strategy,
    /// Outermost frame first.
    pub frames: Vec<Frame>,
}

impl EvalContext {
    pub fn hole(strategy: Strategy) -> EvalContext {
        EvalContext {
            strategy,
            frames: Vec::new(),
        }
    }

    /// Reads off the frames around position `path` of `t`.
    pub fn from_path(t: &Term, path: &[Dir], strategy: Strategy) -> Option<EvalContext> {
        let mut frames = Vec::new();
        let mut cur = t;
        for d in path {
            let (frame, next) = match (cur, d) {
                (Term::App(f, a), Dir::AppFun) => (Frame::AppLeft((**a).clone()), &**f),
                (Term::App(f, a), Dir::AppArg) => (Frame::AppRight((**f).clone()), &**a),
                (Term::ESub(b, x, u), Dir::SubBody) => (Frame::SubBody(x.clone(), (**u).clone()), &**b),
                (Term::ESub(b, x, u), Dir::SubPayload) => (Frame::SubInside(x.clone(), (**b).clone()), &**u),
                _ => return None,
            };
            frames.push(frame);
            cur = next;
        }
        Some(EvalContext { strategy, frames })
    }

    pub fn path(&self) -> Vec<Dir> {
        self.frames.iter().map(Frame::dir).collect()
    }

    pub fn plug(&self, t: Term) -> Term {
        self.frames.iter().rev().fold(t, |acc, f| match f {
            Frame::AppLeft(a) => Term::app(acc, a.clone()),
            Frame::AppRight(g) => Term::app(g.clone(), acc),
            Frame::SubBody(x, u) => Term::esub(acc, x.clone(), u.clone()),
            Frame::SubInside(x, b) => Term::esub(b.clone(), x.clone(), acc),
        })
    }

    /// Names bound by the context around its hole.
    pub fn captured(&self) -> BTreeSet<Name> {
        self.frames
            .iter()
            .filter_map(|f| match f {
                Frame::SubBody(x, _) => Some(x.clone()),
                _ => None,
            })
            .collect()
    }

    /// Free variables of the context, ignoring the hole.
    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        let mut bound: Vec<Name> = Vec::new();
        for f in &self.frames {
            let fv = match f {
                Frame::AppLeft(t) | Frame::AppRight(t) | Frame::SubBody(_, t) => free_vars(t),
                Frame::SubInside(x, b) => {
                    let mut s = free_vars(b);
                    s.remove(x);
                    s
                }
            };
            out.extend(fv.into_iter().filter(|n| !bound.contains(n)));
            if let Frame::SubBody(x, _) = f {
                bound.push(x.clone());
            }
        }
        out
    }

    /// Whether the frame sequence belongs to the strategy's grammar.
    pub fn is_admissible(&self) -> bool {
        self.frames.iter().all(|f| match (self.strategy, f) {
            (_, Frame::SubBody(..)) => true,
            (Strategy::Name | Strategy::Need, Frame::AppLeft(_)) => true,
            (Strategy::Name | Strategy::Need, Frame::AppRight(_)) => false,
            (Strategy::ValueLR, Frame::AppLeft(_)) => true,
            (Strategy::ValueLR, Frame::AppRight(g)) => split_answer(g).is_some(),
            (Strategy::ValueRL, Frame::AppLeft(a)) => split_answer(a).is_some(),
            (Strategy::ValueRL, Frame::AppRight(_)) => true,
            (Strategy::Need, Frame::SubInside(x, b)) => needed_var(b, Strategy::Need).as_ref() == Some(x),
            (_, Frame::SubInside(..)) => false,
        })
    }
}

/// `L ::= <.> | L[x<-t]`, innermost entry first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SubstContext(pub Vec<(Name, Term)>);

impl SubstContext {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn plug(&self, t: Term) -> Term {
        self.0
            .iter()
            .fold(t, |acc, (x, u)| Term::esub(acc, x.clone(), u.clone()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Redex {
    /// `L<\x.body> argument`
    Db {
        subst: SubstContext,
        binder: Name,
        body: Term,
        argument: Term,
    },
    /// `C<x>[x<-payload]`, with `inner` locating `x` inside the body.
    Ls {
        inner: EvalContext,
        variable: Name,
        payload: Term,
    },
}

impl Redex {
    pub fn label(&self) -> StepLabel {
        match self {
            Redex::Db { .. } => StepLabel::Mul,
            Redex::Ls { .. } => StepLabel::Exp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalcError {
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Splits `t` as `L<v>` with `v` an abstraction.
pub fn split_answer(t: &Term) -> Option<(SubstContext, Term)> {
    let mut entries = Vec::new();
    let mut cur = t;
    while let Term::ESub(b, x, u) = cur {
        entries.push((x.clone(), (**u).clone()));
        cur = b;
    }
    if !cur.is_value() {
        return None;
    }
    entries.reverse();
    Some((SubstContext(entries), cur.clone()))
}

pub fn is_answer(t: &Term) -> bool {
    match t {
        Term::Abs(..) => true,
        Term::ESub(b, _, _) => is_answer(b),
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// Context positions

/// Every admissible hole position of the strategy's evaluation contexts in `t`.
pub fn hole_positions(t: &Term, s: Strategy) -> Vec<Vec<Dir>> {
    fn go(t: &Term, s: Strategy, path: &mut Vec<Dir>, out: &mut Vec<Vec<Dir>>) -> Option<Name> {
        out.push(path.clone());
        match t {
            Term::Var(x) => Some(x.clone()),
            Term::Abs(..) => None,
            Term::App(f, a) => {
                let (enter_f, enter_a) = match s {
                    Strategy::Name | Strategy::Need => (true, false),
                    Strategy::ValueLR => (true, is_answer(f)),
                    Strategy::ValueRL => (is_answer(a), true),
                };
                let mut head = None;
                if enter_f {
                    path.push(Dir::AppFun);
                    head = go(f, s, path, out);
                    path.pop();
                }
                if enter_a {
                    path.push(Dir::AppArg);
                    go(a, s, path, out);
                    path.pop();
                }
                head
            }
            Term::ESub(b, x, u) => {
                path.push(Dir::SubBody);
                let head = if s == Strategy::Need {
                    go(b, s, path, out)
                } else {
                    go(b, s, path, out);
                    None
                };
                path.pop();
                if s == Strategy::Need {
                    if head.as_ref() == Some(x) {
                        path.push(Dir::SubPayload);
                        let h = go(u, s, path, out);
                        path.pop();
                        return h;
                    }
                    return head;
                }
                None
            }
        }
    }
    let mut out = Vec::new();
    go(t, s, &mut Vec::new(), &mut out);
    out
}

/// The free variable sitting at the hole of the strategy's evaluation
/// context, if `t` has that shape, together with its position.
pub fn needed_var_at(t: &Term, s: Strategy) -> Option<(Name, Vec<Dir>)> {
    let mut path = Vec::new();
    let x = head_in(t, s, &mut path)?;
    Some((x, path))
}

pub fn needed_var(t: &Term, s: Strategy) -> Option<Name> {
    needed_var_at(t, s).map(|(x, _)| x)
}

fn head_in(t: &Term, s: Strategy, path: &mut Vec<Dir>) -> Option<Name> {
    match t {
        Term::Var(x) => Some(x.clone()),
        Term::Abs(..) => None,
        Term::App(f, a) => {
            let into_arg = match s {
                Strategy::Name | Strategy::Need => false,
                Strategy::ValueLR => is_answer(f),
                Strategy::ValueRL => !is_answer(a),
            };
            if into_arg {
                path.push(Dir::AppArg);
                head_in(a, s, path)
            } else {
                path.push(Dir::AppFun);
                head_in(f, s, path)
            }
        }
        Term::ESub(b, x, u) => {
            let mark = path.len();
            path.push(Dir::SubBody);
            let h = head_in(b, s, path);
            if h.as_ref() == Some(x) {
                if s == Strategy::Need {
                    path.truncate(mark);
                    path.push(Dir::SubPayload);
                    return head_in(u, s, path);
                }
                return None;
            }
            h
        }
    }
}

// ---------------------------------------------------------------------------
// Decomposition

/// Every pair `(E, r)` with `t = E<r>` and `r` a root redex of the strategy.
pub fn decompose_all(t: &Term, s: Strategy) -> Vec<(EvalContext, Redex)> {
    let mut out = Vec::new();
    for pos in hole_positions(t, s) {
        let sub = subterm_at(t, &pos).expect("hole position");
        for r in root_redexes(sub, s) {
            let ctx = EvalContext::from_path(t, &pos, s).expect("hole position");
            out.push((ctx, r));
        }
    }
    out
}

fn root_redexes(t: &Term, s: Strategy) -> Vec<Redex> {
    match t {
        Term::App(f, a) => {
            let Some((subst, v)) = split_answer(f) else {
                return Vec::new();
            };
            if s.value_argument() && !is_answer(a) {
                return Vec::new();
            }
            let Term::Abs(x, body) = v else { unreachable!() };
            vec![Redex::Db {
                subst,
                binder: x,
                body: *body,
                argument: (**a).clone(),
            }]
        }
        Term::ESub(b, x, u) => {
            if s.value_payload() && !is_answer(u) {
                return Vec::new();
            }
            let mut out = Vec::new();
            for pos in hole_positions(b, s) {
                if subterm_at(b, &pos) != Some(&Term::Var(x.clone())) {
                    continue;
                }
                if binders_captured(b, &pos).contains(x) {
                    continue;
                }
                out.push(Redex::Ls {
                    inner: EvalContext::from_path(b, &pos, s).expect("hole position"),
                    variable: x.clone(),
                    payload: (**u).clone(),
                });
            }
            out
        }
        _ => Vec::new(),
    }
}

/// Binders around the position that scope over it (abstractions and
/// substitution bodies).
fn binders_captured(t: &Term, path: &[Dir]) -> Vec<Name> {
    binders_along(t, path)
}

/// A redex found by the linear-time search: its position and, for
/// exponential redexes, the variable position inside the substitution body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Focus {
    pub label: StepLabel,
    pub pos: Vec<Dir>,
    pub var_pos: Vec<Dir>,
}

/// Linear-time redex search along the strategy's evaluation positions.
pub fn find_redex(t: &Term, s: Strategy) -> Option<Focus> {
    let mut path = Vec::new();
    find_in(t, s, &mut path)
}

fn find_in(t: &Term, s: Strategy, path: &mut Vec<Dir>) -> Option<Focus> {
    match t {
        Term::Var(_) | Term::Abs(..) => None,
        Term::App(f, a) => {
            if is_answer(f) && (!s.value_argument() || is_answer(a)) {
                return Some(Focus {
                    label: StepLabel::Mul,
                    pos: path.clone(),
                    var_pos: Vec::new(),
                });
            }
            let into_arg = match s {
                Strategy::Name | Strategy::Need => false,
                Strategy::ValueLR => is_answer(f),
                Strategy::ValueRL => !is_answer(a),
            };
            path.push(if into_arg { Dir::AppArg } else { Dir::AppFun });
            let r = find_in(if into_arg { a } else { f }, s, path);
            path.pop();
            r
        }
        Term::ESub(b, x, u) => {
            path.push(Dir::SubBody);
            let r = find_in(b, s, path);
            path.pop();
            if r.is_some() {
                return r;
            }
            let (h, var_pos) = needed_var_at(b, s)?;
            if &h != x {
                return None;
            }
            if !s.value_payload() || is_answer(u) {
                return Some(Focus {
                    label: StepLabel::Exp,
                    pos: path.clone(),
                    var_pos,
                });
            }
            if s == Strategy::Need {
                path.push(Dir::SubPayload);
                let r = find_in(u, s, path);
                path.pop();
                return r;
            }
            None
        }
    }
}

// ---------------------------------------------------------------------------
// Reduction

/// One step of the strategy, or `None` on a normal form.
pub fn step_calculus(t: &Term, s: Strategy) -> Option<(StepLabel, Term)> {
    let focus = find_redex(t, s)?;
    Some((focus.label, fire(t, s, &focus)))
}

/// Rewrites the redex at `focus`. Binders that would capture are renamed
/// with names fresh for the whole term.
pub fn fire(t: &Term, s: Strategy, focus: &Focus) -> Term {
    let mut supply = NameSupply::after(t);
    let mut out = t.clone();
    let slot = subterm_at_mut(&mut out, &focus.pos).expect("redex position");
    let redex = std::mem::replace(slot, Term::Var(Name::from("hole")));
    *slot = match focus.label {
        StepLabel::Mul => fire_db(redex, &mut supply),
        StepLabel::Exp => fire_ls(redex, s, &focus.var_pos, &mut supply),
    };
    out
}

fn fire_db(redex: Term, supply: &mut NameSupply) -> Term {
    let Term::App(f, arg) = redex else {
        panic!("multiplicative redex is not an application")
    };
    let f = rename_chain(*f, &free_vars(&arg), supply);
    let (l, v) = split_answer(&f).expect("answer in function position");
    let Term::Abs(x, body) = v else { unreachable!() };
    l.plug(Term::ESub(body, x, arg))
}

/// Renames the binders of the substitution chain at the top of `t` that
/// belong to `avoid`.
fn rename_chain(t: Term, avoid: &BTreeSet<Name>, supply: &mut NameSupply) -> Term {
    match t {
        Term::ESub(b, y, u) => {
            let (y, b) = if avoid.contains(&y) {
                let z = supply.fresh(&y);
                let b = rename_free(&b, &y, &z);
                (z, b)
            } else {
                (y, *b)
            };
            Term::ESub(Box::new(rename_chain(b, avoid, supply)), y, u)
        }
        v => v,
    }
}

/// Replaces the variable at `path` with `u`, renaming binders on the way
/// that would capture free variables of `u`.
fn plug_at(t: Term, path: &[Dir], u: &Term, fv_u: &BTreeSet<Name>, supply: &mut NameSupply) -> Term {
    let Some((d, rest)) = path.split_first() else {
        return u.clone();
    };
    match (t, d) {
        (Term::App(f, a), Dir::AppFun) => Term::App(Box::new(plug_at(*f, rest, u, fv_u, supply)), a),
        (Term::App(f, a), Dir::AppArg) => Term::App(f, Box::new(plug_at(*a, rest, u, fv_u, supply))),
        (Term::ESub(b, y, p), Dir::SubBody) => {
            if fv_u.contains(&y) {
                let z = supply.fresh(&y);
                let b = rename_free(&b, &y, &z);
                Term::ESub(Box::new(plug_at(b, rest, u, fv_u, supply)), z, p)
            } else {
                Term::ESub(Box::new(plug_at(*b, rest, u, fv_u, supply)), y, p)
            }
        }
        (Term::ESub(b, y, p), Dir::SubPayload) => Term::ESub(b, y, Box::new(plug_at(*p, rest, u, fv_u, supply))),
        (t, d) => panic!("bad context path {d:?} at {t}"),
    }
}

fn fire_ls(redex: Term, s: Strategy, var_pos: &[Dir], supply: &mut NameSupply) -> Term {
    let Term::ESub(body, x, payload) = redex else {
        panic!("exponential redex is not a substitution")
    };
    // A free `x` in the payload refers outside; the copy must not be
    // captured by the substitution's own binder.
    let (x, body) = if occurs_free(&x, &payload) {
        let z = supply.fresh(&x);
        (z.clone(), rename_free(&body, &x, &z))
    } else {
        (x, *body)
    };
    if !s.value_payload() {
        let fv = free_vars(&payload);
        let body = plug_at(body, var_pos, &payload, &fv, supply);
        return Term::ESub(Box::new(body), x, payload);
    }
    let mut avoid = free_vars(&body);
    avoid.insert(x.clone());
    let payload = rename_chain(*payload, &avoid, supply);
    let (l, v) = split_answer(&payload).expect("value payload");
    let fv_v = free_vars(&v);
    let new_body = plug_at(body, var_pos, &v, &fv_v, supply);
    l.plug(Term::ESub(Box::new(new_body), x, Box::new(v)))
}

pub fn is_normal_form(t: &Term, s: Strategy) -> bool {
    find_redex(t, s).is_none()
}

/// Runs at most `steps` steps, returning each label and reduct.
pub fn run_calculus(t: &Term, s: Strategy, steps: usize) -> Vec<(StepLabel, Term)> {
    let mut out = Vec::new();
    let mut cur = t.clone();
    for _ in 0..steps {
        match step_calculus(&cur, s) {
            Some((l, next)) => {
                out.push((l, next.clone()));
                cur = next;
            }
            None => break,
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Executable checks of the context and determinism properties

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NeedContextReport {
    pub not_answer: bool,
    pub unique_var_decomp: bool,
    pub is_need_normal: bool,
}

impl NeedContextReport {
    pub fn all(&self) -> bool {
        self.not_answer && self.unique_var_decomp && self.is_need_normal
    }
}

/// Checks, on `t = H<x>`, that `t` is not an answer, that `H` and `x` are
/// the only decomposition of `t` into a context around a free variable, and
/// that `t` is normal.
pub fn need_context_properties(h: &EvalContext, x: &Name) -> Result<NeedContextReport, CalcError> {
    if h.strategy != Strategy::Need || !h.is_admissible() {
        return Err(CalcError::Precondition("not a call-by-need context".into()));
    }
    if h.captured().contains(x) {
        return Err(CalcError::Precondition(format!("context captures {x}")));
    }
    let t = h.plug(Term::Var(x.clone()));
    let hole = h.path();
    let mut unique = true;
    for pos in hole_positions(&t, Strategy::Need) {
        if let Some(Term::Var(y)) = subterm_at(&t, &pos) {
            if binders_captured(&t, &pos).contains(y) {
                continue;
            }
            if pos != hole || y != x {
                unique = false;
            }
        }
    }
    Ok(NeedContextReport {
        not_answer: split_answer(&t).is_none(),
        unique_var_decomp: unique,
        is_need_normal: decompose_all(&t, Strategy::Need).is_empty(),
    })
}

/// Counts subterm occurrences under a call-by-value evaluation context that
/// are variables or applications of two answers.
pub fn cbv_candidate_count(t: &Term, s: Strategy) -> Result<usize, CalcError> {
    if !s.value_argument() {
        return Err(CalcError::Precondition(format!("{s} is not call-by-value")));
    }
    Ok(hole_positions(t, s)
        .iter()
        .filter(|p| match subterm_at(t, p) {
            Some(Term::Var(_)) => true,
            Some(Term::App(f, a)) => is_answer(f) && is_answer(a),
            _ => false,
        })
        .count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{alpha_eq, parse};

    fn p(s: &str) -> Term {
        parse(s).unwrap()
    }

    const DELTA: &str = "(\\x.x x)";

    fn omega() -> Term {
        p(&format!("{DELTA} {DELTA}"))
    }

    #[test]
    fn decompositions() {
        let d = decompose_all(&omega(), Strategy::Name);
        assert_eq!(d.len(), 1);
        assert!(d[0].0.frames.is_empty());
        assert!(matches!(d[0].1, Redex::Db { .. }));
        for s in Strategy::ALL {
            assert!(decompose_all(&p("\\x.x"), s).is_empty());
        }
        let d = decompose_all(&p("y[y<-\\z.z]"), Strategy::Need);
        assert_eq!(d.len(), 1);
        match &d[0].1 {
            Redex::Ls { inner, .. } => assert!(inner.frames.is_empty()),
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn first_steps() {
        let (l, t) = step_calculus(&omega(), Strategy::Name).unwrap();
        assert_eq!(l, StepLabel::Mul);
        assert!(alpha_eq(&t, &p(&format!("(x x)[x<-{DELTA}]"))));
        let (l, t2) = step_calculus(&t, Strategy::Name).unwrap();
        assert_eq!(l, StepLabel::Exp);
        assert!(alpha_eq(&t2, &p(&format!("({DELTA} x)[x<-{DELTA}]"))));
        let tau = format!("((\\z.{DELTA}) (\\y.y))");
        let (l, t) = step_calculus(&p(&format!("{tau} {tau}")), Strategy::Name).unwrap();
        assert_eq!(l, StepLabel::Mul);
        assert!(alpha_eq(&t, &p(&format!("{DELTA}[z<-\\y.y] {tau}"))));
    }

    #[test]
    fn answers() {
        let (l, v) = split_answer(&p("(\\x.x)[y<-z]")).unwrap();
        assert_eq!(l.0, vec![(Name::from("y"), p("z"))]);
        assert_eq!(v, p("\\x.x"));
        let (l, _) = split_answer(&p("\\x.x")).unwrap();
        assert!(l.is_empty());
        assert!(split_answer(&p("x[y<-z]")).is_none());
    }

    #[test]
    fn normal_forms() {
        let om = format!("({DELTA} {DELTA})");
        assert!(is_normal_form(&p(&format!("\\x.{om}")), Strategy::Name));
        assert!(is_normal_form(&p(&format!("x {om}")), Strategy::Name));
        for s in Strategy::ALL {
            assert!(!is_normal_form(&omega(), s));
        }
    }

    #[test]
    fn need_contexts() {
        let x = Name::from("x");
        let h = EvalContext {
            strategy: Strategy::Need,
            frames: vec![Frame::AppLeft(p("u"))],
        };
        assert!(need_context_properties(&h, &x).unwrap().all());
        assert!(need_context_properties(&EvalContext::hole(Strategy::Need), &x)
            .unwrap()
            .all());
        let h = EvalContext {
            strategy: Strategy::Need,
            frames: vec![Frame::SubInside(Name::from("y"), p("y w"))],
        };
        assert!(need_context_properties(&h, &x).unwrap().all());
        let bad = EvalContext {
            strategy: Strategy::Need,
            frames: vec![Frame::SubBody(x.clone(), p("w"))],
        };
        assert!(need_context_properties(&bad, &x).is_err());
    }

    #[test]
    fn cbv_candidates() {
        assert_eq!(cbv_candidate_count(&omega(), Strategy::ValueLR), Ok(1));
        assert_eq!(cbv_candidate_count(&p("\\x.x x"), Strategy::ValueLR), Ok(0));
        assert_eq!(cbv_candidate_count(&p("(x y) z"), Strategy::ValueLR), Ok(1));
        assert!(cbv_candidate_count(&omega(), Strategy::Name).is_err());
    }

    #[test]
    fn lsv_lifts_and_renames() {
        // the payload's substitution context moves outside
        let t = p("(x y)[x<-(\\z.w)[w<-\\q.q]]");
        let (l, r) = step_calculus(&t, Strategy::Need).unwrap();
        assert_eq!(l, StepLabel::Exp);
        assert!(alpha_eq(&r, &p("((\\z.w) y)[x<-\\z.w][w<-\\q.q]")));
        // a binder of the lifted context clashing with a free variable is renamed
        let t = p("(x y)[x<-(\\z.y)[y<-\\q.q]]");
        let (_, r) = step_calculus(&t, Strategy::Need).unwrap();
        assert!(alpha_eq(&r, &p("((\\z.y1) y)[x<-\\z.y1][y1<-\\q.q]")));
    }

    #[test]
    fn ls_renames_capturing_binders() {
        // Name: the copied payload mentions y, bound inside the context
        let t = p("(x[y<-a])[x<-y]");
        let (l, r) = step_calculus(&t, Strategy::Name).unwrap();
        assert_eq!(l, StepLabel::Exp);
        assert!(alpha_eq(&r, &p("(y[y1<-a])[x<-y]")));
    }

    #[test]
    fn ls_renames_its_own_binder_when_the_payload_mentions_it() {
        let t = p("x[x<-x][x<-\\y.y]");
        let (l, r) = step_calculus(&t, Strategy::Name).unwrap();
        assert_eq!(l, StepLabel::Exp);
        assert!(alpha_eq(&r, &p("x[z<-x][x<-\\y.y]")), "{r}");
    }
}
