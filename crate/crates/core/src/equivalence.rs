//! Structural equivalences on terms with explicit substitutions.
//!
//! Each theory is a set of axioms closed under a family of contexts. Every
//! rewrite goes through [`apply_step`], which checks side conditions and
//! returns the exact inverse, so any recorded path can be replayed and
//! reversed. [`struct_equiv`] first tries theory-specific normal forms and
//! falls back to a bounded bidirectional search.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::EvalContext;
use crate::syntax::{
    alpha_eq, alpha_key, binders_along, free_occurrence_list, free_occurrence_paths, free_vars, fresh_rename_with,
    occurs_free, rename_free, subterm_at, subterm_at_mut, subterms, term_size, unfold, unfold_capped, Dir, Name,
    NameSupply, Term,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxiomId {
    Alpha,
    Gc,
    Dup,
    At,
    Com,
    Box,
    Atl,
}

impl AxiomId {
    pub fn as_str(self) -> &'static str {
        match self {
            AxiomId::Alpha => "alpha",
            AxiomId::Gc => "gc",
            AxiomId::Dup => "dup",
            AxiomId::At => "at",
            AxiomId::Com => "com",
            AxiomId::Box => "box",
            AxiomId::Atl => "atl",
        }
    }
}

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EqTheory {
    Full,
    NeedEq,
    MamEq,
}

impl EqTheory {
    pub const ALL: [EqTheory; 3] = [EqTheory::Full, EqTheory::NeedEq, EqTheory::MamEq];

    pub fn axioms(self) -> BTreeSet<AxiomId> {
        use AxiomId::*;
        let list: &[AxiomId] = match self {
            EqTheory::Full => &[Alpha, Gc, Dup, At, Com, Box],
            EqTheory::NeedEq => &[Alpha, Atl, Com, Box],
            EqTheory::MamEq => &[Alpha, Atl],
        };
        list.iter().copied().collect()
    }

    pub fn has(self, a: AxiomId) -> bool {
        self.axioms().contains(&a)
    }

    /// Whether the theory is closed under the context leading to `path`.
    /// Full and NeedEq use weak contexts; MamEq only head contexts.
    pub fn admits(self, path: &[Dir]) -> bool {
        match self {
            EqTheory::Full | EqTheory::NeedEq => !path.contains(&Dir::AbsBody),
            EqTheory::MamEq => path.iter().all(|d| matches!(d, Dir::AppFun | Dir::SubBody)),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EqTheory::Full => "full",
            EqTheory::NeedEq => "need",
            EqTheory::MamEq => "mam",
        }
    }
}

impl fmt::Display for EqTheory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EqTheory {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => Ok(EqTheory::Full),
            "need" | "need-eq" | "needeq" => Ok(EqTheory::NeedEq),
            "mam" | "mam-eq" | "mameq" => Ok(EqTheory::MamEq),
            _ => Err(format!("unknown theory `{s}` (expected full, need, mam)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// Extra data an axiom instance needs to be applied deterministically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepDetail {
    None,
    /// dup forward: indices (in preorder) of the free occurrences renamed to
    /// `fresh`.
    Split {
        occurrences: Vec<usize>,
        fresh: Name,
    },
    /// gc backward: the substitution introduced around the node.
    Introduce {
        name: Name,
        payload: Term,
    },
    /// alpha: the α-variant replacing the node.
    Rename {
        target: Term,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomStep {
    pub axiom: AxiomId,
    pub direction: Direction,
    pub position: Vec<Dir>,
    pub detail: StepDetail,
}

impl AxiomStep {
    pub fn new(axiom: AxiomId, direction: Direction, position: Vec<Dir>) -> AxiomStep {
        AxiomStep {
            axiom,
            direction,
            position,
            detail: StepDetail::None,
        }
    }

    pub fn with(mut self, detail: StepDetail) -> AxiomStep {
        self.detail = detail;
        self
    }

    fn shifted(mut self, prefix: &[Dir]) -> AxiomStep {
        let mut p = prefix.to_vec();
        p.extend(self.position);
        self.position = p;
        self
    }
}

impl fmt::Display for AxiomStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = match self.direction {
            Direction::Forward => "",
            Direction::Backward => "<-",
        };
        write!(f, "{}{}@", arrow, self.axiom)?;
        if self.position.is_empty() {
            f.write_str("root")?;
        }
        for (i, d) in self.position.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            f.write_str(match d {
                Dir::AbsBody => "b",
                Dir::AppFun => "l",
                Dir::AppArg => "r",
                Dir::SubBody => "s",
                Dir::SubPayload => "p",
            })?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "path")]
pub enum EquivVerdict {
    Equivalent(Vec<AxiomStep>),
    RefutedByUnfolding,
    InconclusiveBudgetExhausted,
}

impl EquivVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, EquivVerdict::Equivalent(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("axiom {0} is not part of theory {1}")]
    NotInTheory(AxiomId, EqTheory),
    #[error("position is outside the contexts of theory {0}")]
    Position(EqTheory),
    #[error("no subterm at the given position")]
    NoSubterm,
    #[error("{0}: term has the wrong shape")]
    Shape(AxiomId),
    #[error("{0}: side condition fails")]
    SideCondition(AxiomId),
    #[error("{0}: missing or malformed detail")]
    Detail(AxiomId),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error("precondition violated: {0}")]
    Precondition(String),
}

// ---------------------------------------------------------------------------
// Single steps

/// Applies `step` to `t` in place and returns the steps that undo it exactly.
pub fn apply_step(t: &mut Term, step: &AxiomStep, th: EqTheory) -> Result<Vec<AxiomStep>, StepError> {
    if !th.has(step.axiom) {
        return Err(StepError::NotInTheory(step.axiom, th));
    }
    if step.axiom != AxiomId::Alpha && !th.admits(&step.position) {
        return Err(StepError::Position(th));
    }
    let node = subterm_at_mut(t, &step.position).ok_or(StepError::NoSubterm)?;
    let old = std::mem::replace(node, Term::Var(Name::from("hole")));
    match rewrite(old, step) {
        Ok((new, inv)) => {
            *node = new;
            Ok(inv.into_iter().map(|s| s.shifted(&step.position)).collect())
        }
        Err((old, e)) => {
            *node = old;
            Err(e)
        }
    }
}

type Rewritten = Result<(Term, Vec<AxiomStep>), (Term, StepError)>;

fn rewrite(old: Term, step: &AxiomStep) -> Rewritten {
    use AxiomId as A;
    use Direction::*;
    let ax = step.axiom;
    let shape = |old: Term| -> Rewritten { Err((old, StepError::Shape(ax))) };
    let side = |old: Term| -> Rewritten { Err((old, StepError::SideCondition(ax))) };
    let root = |a: AxiomId, d: Direction| AxiomStep::new(a, d, Vec::new());
    match (ax, step.direction) {
        (A::Alpha, _) => {
            let StepDetail::Rename { target } = &step.detail else {
                return Err((old, StepError::Detail(ax)));
            };
            if !alpha_eq(&old, target) {
                return side(old);
            }
            let inv = root(A::Alpha, Forward).with(StepDetail::Rename { target: old });
            Ok((target.clone(), vec![inv]))
        }
        (A::Gc, Forward) => match old {
            Term::ESub(b, x, u) if !occurs_free(&x, &b) => {
                let inv = root(A::Gc, Backward).with(StepDetail::Introduce { name: x, payload: *u });
                Ok((*b, vec![inv]))
            }
            Term::ESub(..) => side(old),
            _ => shape(old),
        },
        (A::Gc, Backward) => {
            let StepDetail::Introduce { name, payload } = &step.detail else {
                return Err((old, StepError::Detail(ax)));
            };
            if occurs_free(name, &old) {
                return side(old);
            }
            let new = Term::esub(old, name.clone(), payload.clone());
            Ok((new, vec![root(A::Gc, Forward)]))
        }
        (A::Dup, Forward) => {
            let StepDetail::Split { occurrences, fresh } = &step.detail else {
                return Err((old, StepError::Detail(ax)));
            };
            let Term::ESub(b, x, u) = &old else { return shape(old) };
            if fresh == x || occurs_free(fresh, b) || occurs_free(fresh, u) {
                return side(old);
            }
            let paths = free_occurrence_paths(b, x);
            let mut chosen = Vec::new();
            for &i in occurrences {
                match paths.get(i) {
                    Some(p) if !binders_along(b, p).contains(fresh) => chosen.push(p.clone()),
                    Some(_) => return side(old),
                    None => return Err((old, StepError::Detail(ax))),
                }
            }
            let Term::ESub(mut b, x, u) = old else { unreachable!() };
            for p in &chosen {
                *subterm_at_mut(&mut b, p).expect("occurrence path") = Term::Var(fresh.clone());
            }
            let new = Term::esub(Term::ESub(b, x, u.clone()), fresh.clone(), *u);
            Ok((new, vec![root(A::Dup, Backward)]))
        }
        (A::Dup, Backward) => {
            let Term::ESub(inner, y, u2) = &old else {
                return shape(old);
            };
            let Term::ESub(b, x, u1) = &**inner else {
                return shape(old);
            };
            if x == y || occurs_free(y, u1) || !alpha_eq(u1, u2) {
                return side(old);
            }
            let ypaths = free_occurrence_paths(b, y);
            if ypaths.iter().any(|p| binders_along(b, p).contains(x)) {
                return side(old);
            }
            let nb = rename_free(b, y, x);
            let xpaths = free_occurrence_paths(&nb, x);
            let occurrences: Vec<usize> = xpaths
                .iter()
                .enumerate()
                .filter(|(_, p)| ypaths.contains(p))
                .map(|(i, _)| i)
                .collect();
            let mut inv = vec![root(A::Dup, Forward).with(StepDetail::Split {
                occurrences,
                fresh: y.clone(),
            })];
            if u1 != u2 {
                inv.push(
                    AxiomStep::new(A::Alpha, Forward, vec![Dir::SubPayload])
                        .with(StepDetail::Rename { target: (**u2).clone() }),
                );
            }
            let new = Term::esub(nb, x.clone(), (**u1).clone());
            Ok((new, inv))
        }
        (A::Com, _) => {
            let Term::ESub(inner, y, w) = &old else {
                return shape(old);
            };
            let Term::ESub(_, x, u) = &**inner else {
                return shape(old);
            };
            if x == y || occurs_free(y, u) || occurs_free(x, w) {
                return side(old);
            }
            let Term::ESub(inner, y, w) = old else { unreachable!() };
            let Term::ESub(t, x, u) = *inner else { unreachable!() };
            let new = Term::ESub(Box::new(Term::ESub(t, y, w)), x, u);
            Ok((new, vec![root(A::Com, step.direction)]))
        }
        (A::At, Forward) => match old {
            Term::ESub(body, x, u) => match *body {
                Term::App(t, w) => {
                    let new = Term::app(Term::ESub(t, x.clone(), u.clone()), Term::ESub(w, x, u));
                    Ok((new, vec![root(A::At, Backward)]))
                }
                body => shape(Term::ESub(Box::new(body), x, u)),
            },
            _ => shape(old),
        },
        (A::At, Backward) => {
            let Term::App(l, r) = &old else { return shape(old) };
            let (Term::ESub(_, x1, u1), Term::ESub(_, x2, u2)) = (&**l, &**r) else {
                return shape(old);
            };
            if x1 != x2 || !alpha_eq(u1, u2) {
                return side(old);
            }
            let mut inv = vec![root(A::At, Forward)];
            if u1 != u2 {
                inv.push(
                    AxiomStep::new(A::Alpha, Forward, vec![Dir::AppArg, Dir::SubPayload])
                        .with(StepDetail::Rename { target: (**u2).clone() }),
                );
            }
            let Term::App(l, r) = old else { unreachable!() };
            let (Term::ESub(t, x, u), Term::ESub(w, _, _)) = (*l, *r) else {
                unreachable!()
            };
            Ok((Term::ESub(Box::new(Term::App(t, w)), x, u), inv))
        }
        (A::Box, Forward) => {
            let Term::ESub(inner, y, _) = &old else {
                return shape(old);
            };
            let Term::ESub(t, x, _) = &**inner else {
                return shape(old);
            };
            if x != y && occurs_free(y, t) {
                return side(old);
            }
            let Term::ESub(inner, y, w) = old else { unreachable!() };
            let Term::ESub(t, x, u) = *inner else { unreachable!() };
            let new = Term::ESub(t, x, Box::new(Term::ESub(u, y, w)));
            Ok((new, vec![root(A::Box, Backward)]))
        }
        (A::Box, Backward) => {
            let Term::ESub(t, x, p) = &old else { return shape(old) };
            let Term::ESub(_, y, _) = &**p else { return shape(old) };
            if x != y && occurs_free(y, t) {
                return side(old);
            }
            let Term::ESub(t, x, p) = old else { unreachable!() };
            let Term::ESub(u, y, w) = *p else { unreachable!() };
            let new = Term::ESub(Box::new(Term::ESub(t, x, u)), y, w);
            Ok((new, vec![root(A::Box, Forward)]))
        }
        (A::Atl, Forward) => {
            let Term::ESub(body, x, _) = &old else {
                return shape(old);
            };
            let Term::App(_, w) = &**body else { return shape(old) };
            if occurs_free(x, w) {
                return side(old);
            }
            let Term::ESub(body, x, u) = old else { unreachable!() };
            let Term::App(t, w) = *body else { unreachable!() };
            Ok((
                Term::App(Box::new(Term::ESub(t, x, u)), w),
                vec![root(A::Atl, Backward)],
            ))
        }
        (A::Atl, Backward) => {
            let Term::App(l, w) = &old else { return shape(old) };
            let Term::ESub(_, x, _) = &**l else { return shape(old) };
            if occurs_free(x, w) {
                return side(old);
            }
            let Term::App(l, w) = old else { unreachable!() };
            let Term::ESub(t, x, u) = *l else { unreachable!() };
            Ok((Term::ESub(Box::new(Term::App(t, w)), x, u), vec![root(A::Atl, Forward)]))
        }
    }
}

/// The exact inverse of `step` as applied to `t` (which is left unchanged).
pub fn inverse(t: &Term, step: &AxiomStep, th: EqTheory) -> Result<Vec<AxiomStep>, StepError> {
    let mut copy = t.clone();
    apply_step(&mut copy, step, th)
}

/// Applies `path` to `t` in order.
pub fn replay(t: &Term, path: &[AxiomStep], th: EqTheory) -> Result<Term, StepError> {
    let mut cur = t.clone();
    for s in path {
        apply_step(&mut cur, s, th)?;
    }
    Ok(cur)
}

// ---------------------------------------------------------------------------
// Neighbours

fn admissible_positions(t: &Term, th: EqTheory) -> Vec<Vec<Dir>> {
    fn go(t: &Term, th: EqTheory, path: &mut Vec<Dir>, out: &mut Vec<Vec<Dir>>) {
        out.push(path.clone());
        let kids: &[Dir] = match t {
            Term::Var(_) => &[],
            Term::Abs(..) => &[Dir::AbsBody],
            Term::App(..) => &[Dir::AppFun, Dir::AppArg],
            Term::ESub(..) => &[Dir::SubBody, Dir::SubPayload],
        };
        for d in kids {
            path.push(*d);
            if th.admits(path) {
                go(subterm_at(t, &[*d]).expect("child"), th, path, out);
            }
            path.pop();
        }
    }
    let mut out = Vec::new();
    go(t, th, &mut Vec::new(), &mut out);
    out
}

fn dup_subsets(n: usize) -> Vec<Vec<usize>> {
    if n <= 4 {
        (0..1usize << n)
            .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
            .collect()
    } else {
        let mut out = vec![Vec::new()];
        out.extend((0..n).map(|i| vec![i]));
        out.push((0..n).collect());
        out
    }
}

/// Every one-step rewrite of `t` under `th`, in both directions, whose result
/// has at most `size_cap` nodes.
pub fn axiom_neighbors(t: &Term, th: EqTheory, size_cap: usize) -> Vec<(AxiomStep, Term)> {
    let mut supply = NameSupply::after(t);
    neighbors_with(t, th, size_cap, &mut supply)
}

fn neighbors_with(t: &Term, th: EqTheory, size_cap: usize, supply: &mut NameSupply) -> Vec<(AxiomStep, Term)> {
    use AxiomId as A;
    use Direction::*;
    let size = term_size(t);
    let mut candidates: Vec<AxiomStep> = Vec::new();
    let mut payloads: Vec<&Term> = Vec::new();
    if th.has(A::Gc) {
        let mut seen = BTreeSet::new();
        for s in subterms(t) {
            if seen.insert(alpha_key(s)) {
                payloads.push(s);
            }
        }
    }
    for pos in admissible_positions(t, th) {
        let node = subterm_at(t, &pos).expect("position");
        for ax in th.axioms() {
            match ax {
                A::Alpha => {}
                A::Gc => {
                    if let Term::ESub(b, x, _) = node {
                        if !occurs_free(x, b) {
                            candidates.push(AxiomStep::new(ax, Forward, pos.clone()));
                        }
                    }
                    let name = supply.fresh(&Name::from("g"));
                    for p in &payloads {
                        if size + 1 + term_size(p) <= size_cap {
                            candidates.push(AxiomStep::new(ax, Backward, pos.clone()).with(StepDetail::Introduce {
                                name: name.clone(),
                                payload: (*p).clone(),
                            }));
                        }
                    }
                }
                A::Dup => {
                    if let Term::ESub(b, x, u) = node {
                        if size + 1 + term_size(u) <= size_cap {
                            let n = free_occurrence_paths(b, x).len();
                            let fresh = supply.fresh(x);
                            for occ in dup_subsets(n) {
                                candidates.push(AxiomStep::new(ax, Forward, pos.clone()).with(StepDetail::Split {
                                    occurrences: occ,
                                    fresh: fresh.clone(),
                                }));
                            }
                        }
                    }
                    candidates.push(AxiomStep::new(ax, Backward, pos.clone()));
                }
                _ => {
                    candidates.push(AxiomStep::new(ax, Forward, pos.clone()));
                    candidates.push(AxiomStep::new(ax, Backward, pos.clone()));
                }
            }
        }
    }
    let mut out = Vec::new();
    for step in candidates {
        if step.axiom == A::Com && step.direction == Backward {
            continue;
        }
        let mut next = t.clone();
        if apply_step(&mut next, &step, th).is_ok() && term_size(&next) <= size_cap {
            out.push((step, next));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Normal forms

struct Stop;

enum Push {
    Collect,
    Stay,
    Distribute,
    Split(Name, usize),
    IntoPayload,
    Share(Name, Vec<usize>),
    IntoChain,
}

/// A term rewritten by recorded steps.
struct Rewriter {
    term: Term,
    th: EqTheory,
    steps: Vec<AxiomStep>,
    undo: Vec<Vec<AxiomStep>>,
    supply: NameSupply,
    fuel: usize,
}

type Res = Result<(), Stop>;

impl Rewriter {
    fn new(term: Term, th: EqTheory, supply: NameSupply, fuel: usize) -> Rewriter {
        Rewriter {
            term,
            th,
            steps: Vec::new(),
            undo: Vec::new(),
            supply,
            fuel,
        }
    }

    fn at(&self, p: &[Dir]) -> &Term {
        subterm_at(&self.term, p).expect("rewriter position")
    }

    fn apply(&mut self, step: AxiomStep) -> Res {
        if self.fuel == 0 {
            return Err(Stop);
        }
        self.fuel -= 1;
        let inv = apply_step(&mut self.term, &step, self.th).map_err(|_| Stop)?;
        self.steps.push(step);
        self.undo.push(inv);
        Ok(())
    }

    fn step(&mut self, ax: AxiomId, dir: Direction, p: &[Dir]) -> Res {
        self.apply(AxiomStep::new(ax, dir, p.to_vec()))
    }

    /// Steps leading back from the current term to the starting one.
    fn undo_path(&self) -> Vec<AxiomStep> {
        self.undo.iter().rev().flatten().cloned().collect()
    }

    fn canonicalize(&mut self) -> Res {
        let target = fresh_rename_with(&self.term, &mut self.supply);
        if target != self.term {
            self.apply(
                AxiomStep::new(AxiomId::Alpha, Direction::Forward, Vec::new()).with(StepDetail::Rename { target }),
            )?;
        }
        Ok(())
    }

    fn normalize(&mut self, full: bool) -> Res {
        let mut p = Vec::new();
        match self.th {
            EqTheory::Full => self.push_norm(&mut p, full),
            EqTheory::NeedEq => self.lift(&mut p, true, full),
            EqTheory::MamEq => self.head_lift(&mut p),
        }
    }

    // Full: substitutions are pushed towards the variables they bind.

    fn push_norm(&mut self, p: &mut Vec<Dir>, full: bool) -> Res {
        match self.at(p) {
            Term::Var(_) | Term::Abs(..) => Ok(()),
            Term::App(..) => {
                p.push(Dir::AppFun);
                self.push_norm(p, full)?;
                p.pop();
                p.push(Dir::AppArg);
                self.push_norm(p, full)?;
                p.pop();
                Ok(())
            }
            Term::ESub(b, x, _) => {
                if !occurs_free(x, b) {
                    self.step(AxiomId::Gc, Direction::Forward, p)?;
                    return self.push_norm(p, full);
                }
                p.push(Dir::SubBody);
                self.push_norm(p, full)?;
                p.pop();
                if full {
                    p.push(Dir::SubPayload);
                    self.push_norm(p, full)?;
                    p.pop();
                }
                self.push(p, full)
            }
        }
    }

    /// The node at `p` is `s[x<-q]` with `s` and `q` normal.
    fn push(&mut self, p: &mut Vec<Dir>, full: bool) -> Res {
        let plan = {
            let Term::ESub(s, x, _) = self.at(p) else { return Ok(()) };
            if !occurs_free(x, s) {
                Push::Collect
            } else {
                match &**s {
                    Term::App(..) => Push::Distribute,
                    Term::Var(_) => Push::Stay,
                    _ if !full => Push::Stay,
                    Term::Abs(_, body) => Push::Split(x.clone(), free_occurrence_paths(body, x).len()),
                    Term::ESub(inner, y, q) => {
                        if matches!(&**inner, Term::Var(z) if z == y) {
                            Push::IntoPayload
                        } else {
                            match (occurs_free(x, inner), occurs_free(x, q)) {
                                (true, true) => Push::Share(
                                    x.clone(),
                                    free_occurrence_paths(s, x)
                                        .iter()
                                        .enumerate()
                                        .filter(|(_, path)| path[0] == Dir::SubPayload)
                                        .map(|(i, _)| i)
                                        .collect(),
                                ),
                                (false, true) => Push::IntoPayload,
                                _ => Push::IntoChain,
                            }
                        }
                    }
                }
            }
        };
        match plan {
            Push::Collect => self.step(AxiomId::Gc, Direction::Forward, p),
            Push::Stay => Ok(()),
            Push::Distribute => {
                self.step(AxiomId::At, Direction::Forward, p)?;
                for d in [Dir::AppFun, Dir::AppArg] {
                    p.push(d);
                    self.push(p, full)?;
                    p.pop();
                }
                Ok(())
            }
            Push::Split(x, n) => {
                let depth = p.len();
                for k in (1..n).rev() {
                    let fresh = self.supply.fresh(&x);
                    self.apply(
                        AxiomStep::new(AxiomId::Dup, Direction::Forward, p.clone()).with(StepDetail::Split {
                            occurrences: vec![k],
                            fresh,
                        }),
                    )?;
                    p.push(Dir::SubBody);
                }
                p.truncate(depth);
                self.sort_lambda_chain(p)
            }
            Push::IntoPayload => {
                self.step(AxiomId::Box, Direction::Forward, p)?;
                p.push(Dir::SubPayload);
                self.push(p, full)?;
                p.pop();
                Ok(())
            }
            Push::Share(x, occurrences) => {
                let fresh = self.supply.fresh(&x);
                self.apply(
                    AxiomStep::new(AxiomId::Dup, Direction::Forward, p.clone())
                        .with(StepDetail::Split { occurrences, fresh }),
                )?;
                self.step(AxiomId::Com, Direction::Forward, p)?;
                p.push(Dir::SubBody);
                self.step(AxiomId::Box, Direction::Forward, p)?;
                p.push(Dir::SubPayload);
                self.push(p, full)?;
                p.pop();
                p.pop();
                self.push_into_chain(p, full)
            }
            Push::IntoChain => self.push_into_chain(p, full),
        }
    }

    /// The node at `p` is `s[y<-q][x<-r]` where `x` occurs only in `s`.
    fn push_into_chain(&mut self, p: &mut Vec<Dir>, full: bool) -> Res {
        self.step(AxiomId::Com, Direction::Forward, p)?;
        p.push(Dir::SubBody);
        self.push(p, full)?;
        p.pop();
        self.sort_lambda_chain(p)
    }

    /// Orders the substitutions piled on an abstraction by the position of
    /// the occurrence each one binds, innermost first.
    fn sort_lambda_chain(&mut self, p: &[Dir]) -> Res {
        let mut names = Vec::new();
        let mut cur = self.at(p);
        while let Term::ESub(b, x, _) = cur {
            names.push(x.clone());
            cur = b;
        }
        if names.len() < 2 {
            return Ok(());
        }
        let occ = free_occurrence_list(cur);
        let mut keys: Vec<usize> = names
            .iter()
            .map(|n| occ.iter().position(|o| o == n).unwrap_or(usize::MAX))
            .collect();
        self.bubble(p, &mut keys)
    }

    /// Sorts a chain whose entries (outermost first) carry `keys`, so that
    /// keys increase from the innermost entry outwards.
    fn bubble(&mut self, p: &[Dir], keys: &mut [usize]) -> Res {
        let m = keys.len();
        loop {
            let mut swapped = false;
            for d in 0..m - 1 {
                if keys[d + 1] > keys[d] {
                    let mut q = p.to_vec();
                    q.extend(std::iter::repeat_n(Dir::SubBody, d));
                    self.step(AxiomId::Com, Direction::Forward, &q)?;
                    keys.swap(d, d + 1);
                    swapped = true;
                }
            }
            if !swapped {
                return Ok(());
            }
        }
    }

    // NeedEq: substitutions are lifted to the nearest argument or the root.

    fn lift(&mut self, p: &mut Vec<Dir>, owner: bool, full: bool) -> Res {
        match self.at(p) {
            Term::Var(_) | Term::Abs(..) => {}
            Term::App(..) => {
                p.push(Dir::AppFun);
                self.lift(p, false, full)?;
                p.pop();
                p.push(Dir::AppArg);
                self.lift(p, true, full)?;
                p.pop();
                let mut q = p.clone();
                while let Term::App(f, _) = self.at(&q) {
                    if !matches!(&**f, Term::ESub(..)) {
                        break;
                    }
                    self.step(AxiomId::Atl, Direction::Backward, &q)?;
                    q.push(Dir::SubBody);
                }
            }
            Term::ESub(..) => {
                p.push(Dir::SubBody);
                self.lift(p, false, full)?;
                p.pop();
                p.push(Dir::SubPayload);
                self.lift(p, false, full)?;
                p.pop();
                let mut q = p.clone();
                while let Term::ESub(_, _, u) = self.at(&q) {
                    if !matches!(&**u, Term::ESub(..)) {
                        break;
                    }
                    self.step(AxiomId::Box, Direction::Backward, &q)?;
                    q.push(Dir::SubBody);
                }
            }
        }
        if owner && full {
            self.sort_need_chain(p)?;
        }
        Ok(())
    }

    /// Puts a lifted chain into a canonical dependency-respecting order.
    fn sort_need_chain(&mut self, p: &[Dir]) -> Res {
        let mut entries: Vec<(Name, &Term)> = Vec::new();
        let mut cur = self.at(p);
        while let Term::ESub(b, x, u) = cur {
            entries.push((x.clone(), &**u));
            cur = b;
        }
        if entries.len() < 2 {
            return Ok(());
        }
        let index: HashMap<Name, usize> = entries.iter().enumerate().map(|(i, (n, _))| (n.clone(), i)).collect();
        let refs: Vec<Vec<usize>> = entries
            .iter()
            .map(|(_, u)| {
                free_occurrence_list(u)
                    .iter()
                    .filter_map(|n| index.get(n).copied())
                    .collect()
            })
            .collect();

        // discovery order: the core first, then payloads breadth-first
        let mut rank: Vec<Option<usize>> = vec![None; entries.len()];
        let mut order: Vec<usize> = Vec::new();
        let mut queue = VecDeque::new();
        let mut discover = |i: usize, rank: &mut Vec<Option<usize>>, queue: &mut VecDeque<usize>| {
            if rank[i].is_none() {
                rank[i] = Some(order.len());
                order.push(i);
                queue.push_back(i);
            }
        };
        for n in free_occurrence_list(cur) {
            if let Some(&i) = index.get(&n) {
                discover(i, &mut rank, &mut queue);
            }
        }
        loop {
            while let Some(i) = queue.pop_front() {
                for &j in &refs[i] {
                    discover(j, &mut rank, &mut queue);
                }
            }
            let unreached: Vec<usize> = (0..entries.len()).filter(|&i| rank[i].is_none()).collect();
            if unreached.is_empty() {
                break;
            }
            let key = |i: usize| {
                let mut u = entries[i].1.clone();
                for (n, &j) in &index {
                    let to = match rank[j] {
                        Some(r) => Name::from(format!("d${}", r + 1).as_str()),
                        None => Name::from("u$0"),
                    };
                    u = rename_free(&u, n, &to);
                }
                alpha_key(&u)
            };
            let best = unreached.into_iter().min_by_key(|&i| key(i)).expect("nonempty");
            discover(best, &mut rank, &mut queue);
        }

        // innermost first: repeatedly take the entry no remaining payload needs
        let mut remaining: BTreeSet<usize> = (0..entries.len()).collect();
        let mut target = vec![0usize; entries.len()];
        let mut next = 0;
        while !remaining.is_empty() {
            let pick = remaining
                .iter()
                .copied()
                .filter(|&i| !remaining.iter().any(|&j| j != i && refs[j].contains(&i)))
                .min_by_key(|&i| rank[i])
                .ok_or(Stop)?;
            target[pick] = next;
            next += 1;
            remaining.remove(&pick);
        }
        // bubble expects keys increasing outwards, with entries listed outer first
        let mut keys = target;
        self.bubble(p, &mut keys)
    }

    // MamEq: substitutions are lifted along the head spine only.

    fn head_lift(&mut self, p: &mut Vec<Dir>) -> Res {
        match self.at(p) {
            Term::Var(_) | Term::Abs(..) => Ok(()),
            Term::App(..) => {
                p.push(Dir::AppFun);
                self.head_lift(p)?;
                p.pop();
                let mut q = p.clone();
                while let Term::App(f, _) = self.at(&q) {
                    if !matches!(&**f, Term::ESub(..)) {
                        break;
                    }
                    self.step(AxiomId::Atl, Direction::Backward, &q)?;
                    q.push(Dir::SubBody);
                }
                Ok(())
            }
            Term::ESub(..) => {
                p.push(Dir::SubBody);
                self.head_lift(p)?;
                p.pop();
                Ok(())
            }
        }
    }
}

/// Normal-form path between `t` and `u` (both subterms at a common position).
fn normal_form_path(t: &Term, u: &Term, th: EqTheory, supply: &NameSupply, fuel: usize) -> Option<Vec<AxiomStep>> {
    let mut supply = supply.clone();
    for full in [false, true] {
        let mut lt = Rewriter::new(t.clone(), th, supply.clone(), fuel);
        let ok = lt.canonicalize().and_then(|_| lt.normalize(full)).is_ok();
        supply = lt.supply.clone();
        if !ok {
            continue;
        }
        let mut lu = Rewriter::new(u.clone(), th, supply.clone(), fuel);
        let ok = lu.canonicalize().and_then(|_| lu.normalize(full)).is_ok();
        supply = lu.supply.clone();
        if ok && alpha_eq(&lt.term, &lu.term) {
            let mut path = lt.steps;
            if lt.term != lu.term {
                path.push(
                    AxiomStep::new(AxiomId::Alpha, Direction::Forward, Vec::new()).with(StepDetail::Rename {
                        target: lu.term.clone(),
                    }),
                );
            }
            path.extend(lu.undo_path());
            return Some(path);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Deciding equivalence

const UNFOLD_CAP: usize = 20_000;

/// True iff the unfoldings of `t` and `u` differ up to α.
pub fn unfolding_refutes(t: &Term, u: &Term) -> bool {
    !alpha_eq(&unfold(t), &unfold(u))
}

fn unfolding_differs(t: &Term, u: &Term, cap: usize) -> Option<bool> {
    let a = unfold_capped(t, cap)?;
    let b = unfold_capped(u, cap)?;
    Some(!alpha_eq(&a, &b))
}

/// Descends through the weak (or head) context shared by `t` and `u`.
fn common_context(t: &Term, u: &Term, th: EqTheory) -> Vec<Dir> {
    let mut path = Vec::new();
    let (mut a, mut b) = (t, u);
    loop {
        let next = match (a, b) {
            (Term::App(f1, a1), Term::App(f2, a2)) => {
                if alpha_eq(a1, a2) {
                    Some((Dir::AppFun, &**f1, &**f2))
                } else if alpha_eq(f1, f2) {
                    Some((Dir::AppArg, &**a1, &**a2))
                } else {
                    None
                }
            }
            (Term::ESub(b1, x1, u1), Term::ESub(b2, x2, u2)) if x1 == x2 => {
                if alpha_eq(u1, u2) {
                    Some((Dir::SubBody, &**b1, &**b2))
                } else if b1 == b2 {
                    Some((Dir::SubPayload, &**u1, &**u2))
                } else {
                    None
                }
            }
            _ => None,
        };
        match next {
            Some((d, x, y)) => {
                path.push(d);
                if !th.admits(&path) {
                    path.pop();
                    return path;
                }
                a = x;
                b = y;
            }
            None => return path,
        }
    }
}

/// Decides `t ≡ u` in theory `th`, searching at most `budget` nodes when the
/// normal-form procedure does not settle the question.
pub fn struct_equiv(t: &Term, u: &Term, th: EqTheory, budget: usize) -> EquivVerdict {
    if alpha_eq(t, u) {
        return EquivVerdict::Equivalent(Vec::new());
    }
    if unfolding_differs(t, u, UNFOLD_CAP) == Some(true) {
        return EquivVerdict::RefutedByUnfolding;
    }
    let mut supply = NameSupply::after(t);
    supply.bump_past(u);
    let fuel = 200 + 50 * (term_size(t) + term_size(u)).pow(2).min(10_000_000);

    let q = common_context(t, u, th);
    let mut attempts = vec![q.clone()];
    if !q.is_empty() {
        attempts.push(Vec::new());
    }
    for pos in attempts {
        let ts = subterm_at(t, &pos).expect("common position");
        let us = subterm_at(u, &pos).expect("common position");
        if let Some(step) = single_step(ts, us, th) {
            let mut path = vec![step.shifted(&pos)];
            finish_alpha(t, u, &mut path, th);
            return EquivVerdict::Equivalent(path);
        }
        if let Some(steps) = normal_form_path(ts, us, th, &supply, fuel) {
            let mut path: Vec<AxiomStep> = steps.into_iter().map(|s| s.shifted(&pos)).collect();
            finish_alpha(t, u, &mut path, th);
            return EquivVerdict::Equivalent(path);
        }
    }
    search(t, u, th, budget, supply)
}

const SINGLE_STEP_SIZE: usize = 40;

fn single_step(t: &Term, u: &Term, th: EqTheory) -> Option<AxiomStep> {
    let size = term_size(t).max(term_size(u));
    if size > SINGLE_STEP_SIZE {
        return None;
    }
    axiom_neighbors(t, th, size)
        .into_iter()
        .find(|(_, n)| alpha_eq(n, u))
        .map(|(s, _)| s)
}

/// Appends an α step at the root if replaying `path` lands on a different
/// α-variant of `u`.
fn finish_alpha(t: &Term, u: &Term, path: &mut Vec<AxiomStep>, th: EqTheory) {
    if let Ok(end) = replay(t, path, th) {
        if end != *u && alpha_eq(&end, u) {
            path.push(
                AxiomStep::new(AxiomId::Alpha, Direction::Forward, Vec::new())
                    .with(StepDetail::Rename { target: u.clone() }),
            );
        }
    }
}

struct Visit {
    term: Term,
    parent: Option<(usize, AxiomStep)>,
}

fn trail(nodes: &[Visit], mut i: usize) -> Vec<AxiomStep> {
    let mut out = Vec::new();
    while let Some((p, s)) = &nodes[i].parent {
        out.push(s.clone());
        i = *p;
    }
    out.reverse();
    out
}

/// Visited terms, their index by α-key, and the queue of unexpanded visits.
type Frontier = (Vec<Visit>, HashMap<String, usize>, VecDeque<usize>);

fn search(t: &Term, u: &Term, th: EqTheory, budget: usize, mut supply: NameSupply) -> EquivVerdict {
    let slack = 2 + budget.max(1).ilog10() as usize;
    let cap = term_size(t).max(term_size(u)) + slack;
    let mut sides: [Frontier; 2] = [
        (Vec::new(), HashMap::new(), VecDeque::new()),
        (Vec::new(), HashMap::new(), VecDeque::new()),
    ];
    for (k, start) in [t, u].into_iter().enumerate() {
        sides[k].0.push(Visit {
            term: start.clone(),
            parent: None,
        });
        sides[k].1.insert(alpha_key(start), 0);
        sides[k].2.push_back(0);
    }
    let mut expanded = 0;
    while expanded < budget {
        let k = if sides[0].2.len() <= sides[1].2.len() && !sides[0].2.is_empty() {
            0
        } else {
            1
        };
        let Some(i) = sides[k].2.pop_front() else { break };
        expanded += 1;
        let current = sides[k].0[i].term.clone();
        for (step, next) in neighbors_with(&current, th, cap, &mut supply) {
            let key = alpha_key(&next);
            if sides[k].1.contains_key(&key) {
                continue;
            }
            let j = sides[k].0.len();
            sides[k].0.push(Visit {
                term: next,
                parent: Some((i, step)),
            });
            sides[k].1.insert(key.clone(), j);
            if let Some(&o) = sides[1 - k].1.get(&key) {
                let (ti, ui) = if k == 0 { (j, o) } else { (o, j) };
                return EquivVerdict::Equivalent(join(t, u, &sides[0].0, ti, &sides[1].0, ui, th));
            }
            sides[k].2.push_back(j);
        }
    }
    EquivVerdict::InconclusiveBudgetExhausted
}

fn join(t: &Term, u: &Term, left: &[Visit], li: usize, right: &[Visit], ri: usize, th: EqTheory) -> Vec<AxiomStep> {
    let mut path = trail(left, li);
    let meet = &right[ri].term;
    if left[li].term != *meet {
        path.push(
            AxiomStep::new(AxiomId::Alpha, Direction::Forward, Vec::new())
                .with(StepDetail::Rename { target: meet.clone() }),
        );
    }
    let mut cur = u.clone();
    let mut undo = Vec::new();
    for s in trail(right, ri) {
        undo.push(apply_step(&mut cur, &s, th).expect("recorded step"));
    }
    path.extend(undo.into_iter().rev().flatten());
    finish_alpha(t, u, &mut path, th);
    path
}

/// Compares `C<t>[x<-u]` with `C<t[x<-u]>`.
pub fn es_commute_witness(
    c: &EvalContext,
    t: &Term,
    x: &Name,
    u: &Term,
    th: EqTheory,
    budget: usize,
) -> Result<EquivVerdict, EquivError> {
    if c.free_vars().contains(x) || c.captured().contains(x) {
        return Err(EquivError::Precondition(format!("the context mentions {x}")));
    }
    let fu = free_vars(u);
    if let Some(y) = c.captured().iter().find(|y| fu.contains(*y)) {
        return Err(EquivError::Precondition(format!(
            "the context captures {y}, free in the payload"
        )));
    }
    let outer = Term::esub(c.plug(t.clone()), x.clone(), u.clone());
    let inner = c.plug(Term::esub(t.clone(), x.clone(), u.clone()));
    Ok(struct_equiv(&outer, &inner, th, budget))
}

/// Summary of which axioms a path uses, for reporting.
pub fn axiom_census(path: &[AxiomStep]) -> BTreeMap<AxiomId, usize> {
    let mut m = BTreeMap::new();
    for s in path {
        *m.entry(s.axiom).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{EvalContext, Frame, Strategy};
    use crate::syntax::parse;

    fn p(s: &str) -> Term {
        parse(s).unwrap()
    }

    fn check(t: &str, u: &str, th: EqTheory) -> EquivVerdict {
        let (t, u) = (p(t), p(u));
        let v = struct_equiv(&t, &u, th, 2000);
        if let EquivVerdict::Equivalent(path) = &v {
            let end = replay(&t, path, th).expect("path replays");
            assert!(alpha_eq(&end, &u), "{end} vs {u}");
        }
        v
    }

    #[test]
    fn gc_example() {
        let v = check("(\\y.y)[x<-\\z.z]", "\\y.y", EqTheory::Full);
        let EquivVerdict::Equivalent(path) = v else {
            panic!("{v:?}")
        };
        assert_eq!(axiom_census(&path).get(&AxiomId::Gc), Some(&1));
    }

    #[test]
    fn reflexive_and_refuted() {
        assert_eq!(
            check("\\x.x", "\\x.x", EqTheory::MamEq),
            EquivVerdict::Equivalent(vec![])
        );
        // same unfolding, yet no axiom erases a used substitution
        assert_eq!(
            check("(x x)[x<-\\y.y]", "(\\y.y)(\\z.z)", EqTheory::Full),
            EquivVerdict::InconclusiveBudgetExhausted
        );
        assert_eq!(
            check("(x x)[x<-\\y.y]", "(\\y.y) y", EqTheory::Full),
            EquivVerdict::RefutedByUnfolding
        );
    }

    #[test]
    fn neighbor_examples() {
        let t = p("(t u)[x<-w]");
        let ns = axiom_neighbors(&t, EqTheory::Full, 20);
        assert!(ns
            .iter()
            .any(|(s, r)| s.axiom == AxiomId::At && *r == p("t[x<-w] u[x<-w]")));
        let t = p("t[x<-u][y<-w]");
        let ns = axiom_neighbors(&t, EqTheory::Full, 20);
        assert!(ns
            .iter()
            .any(|(s, r)| s.axiom == AxiomId::Com && *r == p("t[y<-w][x<-u]")));
        let t = p("(t w)[x<-u]");
        let ns = axiom_neighbors(&t, EqTheory::NeedEq, 20);
        assert!(ns.iter().any(|(s, r)| s.axiom == AxiomId::Atl && *r == p("t[x<-u] w")));
    }

    #[test]
    fn unfolding_examples() {
        assert!(!unfolding_refutes(&p("x[x<-y]"), &p("y")));
        assert!(unfolding_refutes(&p("x[x<-y]"), &p("z")));
    }

    #[test]
    fn full_theory_duplication_and_boxes() {
        for (a, b) in [
            ("(x x)[x<-\\y.y]", "x[x<-\\y.y] x[x<-\\y.y]"),
            ("(\\z.x x)[x<-w]", "(\\z.x y)[x<-w][y<-w]"),
            ("x[x<-y[y<-w]]", "x[x<-y][y<-w]"),
            ("(x (\\a.y))[y<-w][x<-v]", "(x[x<-v] (\\a.y)[y<-w])"),
            ("(\\a.x y)[x<-u][y<-v]", "(\\a.x y)[y<-v][x<-u]"),
        ] {
            assert!(check(a, b, EqTheory::Full).is_equivalent(), "{a} vs {b}");
            assert!(check(b, a, EqTheory::Full).is_equivalent(), "{b} vs {a}");
        }
    }

    #[test]
    fn need_theory() {
        for (a, b) in [
            ("(x w)[x<-u]", "x[x<-u] w"),
            ("x[x<-y[y<-w]]", "x[x<-y][y<-w]"),
            ("(x y)[x<-u][y<-v]", "(x y)[y<-v][x<-u]"),
            ("((x z)[x<-u] w)[z<-v]", "(x z w)[z<-v][x<-u]"),
        ] {
            assert!(check(a, b, EqTheory::NeedEq).is_equivalent(), "{a} vs {b}");
            assert!(check(b, a, EqTheory::NeedEq).is_equivalent(), "{b} vs {a}");
        }
        assert!(!check("(x x)[x<-u]", "x[x<-u] x[x<-u]", EqTheory::NeedEq).is_equivalent());
    }

    #[test]
    fn mam_theory() {
        assert!(check("(x w v)[x<-u]", "x[x<-u] w v", EqTheory::MamEq).is_equivalent());
        assert!(!check("x[x<-y[y<-w]]", "x[x<-y][y<-w]", EqTheory::MamEq).is_equivalent());
    }

    #[test]
    fn commute_witness_examples() {
        let t = p("x");
        let x = Name::from("x");
        let u = p("\\z.z");
        let app = EvalContext {
            strategy: Strategy::Need,
            frames: vec![Frame::AppLeft(p("w"))],
        };
        let v = es_commute_witness(&app, &t, &x, &u, EqTheory::NeedEq, 100).unwrap();
        assert!(v.is_equivalent());
        let hole = EvalContext::hole(Strategy::Name);
        for th in EqTheory::ALL {
            assert_eq!(
                es_commute_witness(&hole, &t, &x, &u, th, 10).unwrap(),
                EquivVerdict::Equivalent(vec![])
            );
        }
        let sub = EvalContext {
            strategy: Strategy::Name,
            frames: vec![Frame::SubBody(Name::from("y"), p("w"))],
        };
        let v = es_commute_witness(&sub, &p("x y"), &x, &u, EqTheory::Full, 100).unwrap();
        let EquivVerdict::Equivalent(path) = v else { panic!() };
        assert_eq!(axiom_census(&path).get(&AxiomId::Com), Some(&1));
    }

    #[test]
    fn inverses_are_exact() {
        let t = p("((\\a.x a) x)[x<-w][y<-v]");
        for (step, next) in axiom_neighbors(&t, EqTheory::Full, 30) {
            let inv = inverse(&t, &step, EqTheory::Full).unwrap();
            let back = replay(&next, &inv, EqTheory::Full).unwrap();
            assert_eq!(back, t, "{step}");
        }
    }
}
