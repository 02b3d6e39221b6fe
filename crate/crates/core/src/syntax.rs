//! Named syntax of the linear substitution calculus.
//!
//! Terms keep their binder names; alpha-equivalence is decided on demand by
//! comparing binder depths. Fresh names have the shape `base$N`, where `N`
//! comes from a [`NameSupply`] threaded by the caller.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("syntax error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("invalid name `{0}`")]
    BadName(String),
    #[error("term contains an explicit substitution")]
    NotPure,
}

/// A variable name. Accepts `[a-zA-Z][a-zA-Z0-9_'$]*`; the `$` suffix is
/// reserved for names produced by a [`NameSupply`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(Arc<str>);

fn name_start(c: char) -> bool {
    c.is_ascii_alphabetic()
}

fn name_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '$'
}

impl Name {
    pub fn new(text: &str) -> Result<Name, SyntaxError> {
        let mut chars = text.chars();
        match chars.next() {
            Some(c) if name_start(c) && chars.all(name_continue) => Ok(Name(Arc::from(text))),
            _ => Err(SyntaxError::BadName(text.to_string())),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The part before the first `$`.
    pub fn base(&self) -> &str {
        self.0.split('$').next().unwrap_or(&self.0)
    }

    /// The numeric suffix after the last `$`, if any.
    pub fn counter(&self) -> Option<u64> {
        let (_, tail) = self.0.rsplit_once('$')?;
        tail.parse().ok()
    }
}

impl From<&str> for Name {
    /// Panics on an invalid name; meant for literals.
    fn from(text: &str) -> Name {
        Name::new(text).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Name {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Name {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Name::new(&s).map_err(serde::de::Error::custom)
    }
}

/// Terms with explicit substitutions. `ESub(t, x, u)` is `t[x<-u]`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Name),
    Abs(Name, Box<Term>),
    App(Box<Term>, Box<Term>),
    ESub(Box<Term>, Name, Box<Term>),
}

impl Term {
    pub fn var(x: impl Into<Name>) -> Term {
        Term::Var(x.into())
    }

    pub fn abs(x: impl Into<Name>, body: Term) -> Term {
        Term::Abs(x.into(), Box::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn esub(body: Term, x: impl Into<Name>, payload: Term) -> Term {
        Term::ESub(Box::new(body), x.into(), Box::new(payload))
    }

    pub fn is_value(&self) -> bool {
        matches!(self, Term::Abs(..))
    }

    pub fn is_pure(&self) -> bool {
        match self {
            Term::Var(_) => true,
            Term::Abs(_, b) => b.is_pure(),
            Term::App(f, a) => f.is_pure() && a.is_pure(),
            Term::ESub(..) => false,
        }
    }

    pub fn size(&self) -> usize {
        term_size(self)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&render(self))
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

/// A term without explicit substitutions.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Term", into = "Term")]
pub struct PureTerm(Term);

impl PureTerm {
    pub fn new(t: Term) -> Result<PureTerm, SyntaxError> {
        if t.is_pure() {
            Ok(PureTerm(t))
        } else {
            Err(SyntaxError::NotPure)
        }
    }

    pub fn parse(text: &str) -> Result<PureTerm, SyntaxError> {
        PureTerm::new(parse(text)?)
    }

    pub fn as_term(&self) -> &Term {
        &self.0
    }

    pub fn into_term(self) -> Term {
        self.0
    }
}

impl TryFrom<Term> for PureTerm {
    type Error = SyntaxError;
    fn try_from(t: Term) -> Result<Self, Self::Error> {
        PureTerm::new(t)
    }
}

impl From<PureTerm> for Term {
    fn from(p: PureTerm) -> Term {
        p.0
    }
}

impl std::ops::Deref for PureTerm {
    type Target = Term;
    fn deref(&self) -> &Term {
        &self.0
    }
}

impl fmt::Display for PureTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::Debug for PureTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.0, f)
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Lam,
    Dot,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Arrow,
    Ident(String),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, SyntaxError> {
    let mut out = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some(&(pos, c)) = it.peek() {
        let tok = match c {
            c if c.is_whitespace() => {
                it.next();
                continue;
            }
            '\\' | 'λ' => Tok::Lam,
            '.' => Tok::Dot,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBrack,
            ']' => Tok::RBrack,
            '<' => {
                it.next();
                match it.peek() {
                    Some(&(_, '-')) => {}
                    _ => {
                        return Err(SyntaxError::Parse {
                            pos,
                            msg: "expected `<-`".into(),
                        })
                    }
                }
                Tok::Arrow
            }
            c if name_start(c) => {
                let mut s = String::new();
                while let Some(&(_, d)) = it.peek() {
                    if s.is_empty() || name_continue(d) {
                        s.push(d);
                        it.next();
                    } else {
                        break;
                    }
                }
                out.push((pos, Tok::Ident(s)));
                continue;
            }
            other => {
                return Err(SyntaxError::Parse {
                    pos,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        };
        it.next();
        out.push((pos, tok));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, msg: &str) -> Result<T, SyntaxError> {
        Err(SyntaxError::Parse {
            pos: self.pos(),
            msg: msg.to_string(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), SyntaxError> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            self.err(&format!("expected {what}"))
        }
    }

    fn name(&mut self) -> Result<Name, SyntaxError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let n = Name::new(s).map_err(|e| SyntaxError::Parse {
                    pos: self.pos(),
                    msg: e.to_string(),
                })?;
                self.at += 1;
                Ok(n)
            }
            _ => self.err("expected a name"),
        }
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        if self.peek() == Some(&Tok::Lam) {
            return self.abs();
        }
        let mut head = self.atom()?;
        loop {
            match self.peek() {
                Some(Tok::Ident(_)) | Some(Tok::LParen) => {
                    let arg = self.atom()?;
                    head = Term::app(head, arg);
                }
                Some(Tok::Lam) => {
                    let arg = self.abs()?;
                    return Ok(Term::app(head, arg));
                }
                _ => return Ok(head),
            }
        }
    }

    fn abs(&mut self) -> Result<Term, SyntaxError> {
        self.expect(Tok::Lam, "`\\`")?;
        let x = self.name()?;
        self.expect(Tok::Dot, "`.`")?;
        let body = self.term()?;
        Ok(Term::Abs(x, Box::new(body)))
    }

    fn atom(&mut self) -> Result<Term, SyntaxError> {
        let mut t = match self.peek() {
            Some(Tok::Ident(_)) => Term::Var(self.name()?),
            Some(Tok::LParen) => {
                self.at += 1;
                let t = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                t
            }
            _ => return self.err("expected a name or `(`"),
        };
        while self.peek() == Some(&Tok::LBrack) {
            self.at += 1;
            let x = self.name()?;
            self.expect(Tok::Arrow, "`<-`")?;
            let u = self.term()?;
            self.expect(Tok::RBrack, "`]`")?;
            t = Term::ESub(Box::new(t), x, Box::new(u));
        }
        Ok(t)
    }
}

/// Parses the concrete syntax: `\x.t` (or `λx.t`), left-associative
/// application, parentheses, and postfix substitutions `t[x<-u]`.
pub fn parse(text: &str) -> Result<Term, SyntaxError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
    };
    if p.peek().is_none() {
        return p.err("empty input");
    }
    let t = p.term()?;
    if p.peek().is_some() {
        return p.err("unexpected trailing input");
    }
    Ok(t)
}

// ---------------------------------------------------------------------------
// Rendering

/// Renders with the fewest parentheses that `parse` needs to rebuild the
/// same tree.
pub fn render(t: &Term) -> String {
    let mut out = String::new();
    render_term(t, &mut out);
    out
}

fn render_term(t: &Term, out: &mut String) {
    match t {
        Term::Abs(x, b) => {
            out.push('\\');
            out.push_str(x.as_str());
            out.push('.');
            render_term(b, out);
        }
        Term::App(..) => render_app(t, out),
        _ => render_atom(t, out),
    }
}

fn render_app(t: &Term, out: &mut String) {
    if let Term::App(f, a) = t {
        match &**f {
            Term::App(..) => render_app(f, out),
            Term::Abs(..) => paren(f, out),
            _ => render_atom(f, out),
        }
        out.push(' ');
        match &**a {
            Term::App(..) | Term::Abs(..) => paren(a, out),
            _ => render_atom(a, out),
        }
    }
}

fn render_atom(t: &Term, out: &mut String) {
    match t {
        Term::Var(x) => out.push_str(x.as_str()),
        Term::ESub(b, x, u) => {
            match &**b {
                Term::App(..) | Term::Abs(..) => paren(b, out),
                _ => render_atom(b, out),
            }
            out.push('[');
            out.push_str(x.as_str());
            out.push_str("<-");
            render_term(u, out);
            out.push(']');
        }
        _ => paren(t, out),
    }
}

fn paren(t: &Term, out: &mut String) {
    out.push('(');
    render_term(t, out);
    out.push(')');
}

// ---------------------------------------------------------------------------
// Alpha-equivalence

/// Decides alpha-equivalence by comparing binder depths of bound occurrences.
pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    fn go<'a>(a: &'a Term, b: &'a Term, sa: &mut Vec<&'a Name>, sb: &mut Vec<&'a Name>) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => {
                let ix = sa.iter().rposition(|n| *n == x);
                let iy = sb.iter().rposition(|n| *n == y);
                match (ix, iy) {
                    (None, None) => x == y,
                    (Some(i), Some(j)) => sa.len() - i == sb.len() - j,
                    _ => false,
                }
            }
            (Term::Abs(x, t), Term::Abs(y, u)) => {
                sa.push(x);
                sb.push(y);
                let r = go(t, u, sa, sb);
                sa.pop();
                sb.pop();
                r
            }
            (Term::App(t1, t2), Term::App(u1, u2)) => go(t1, u1, sa, sb) && go(t2, u2, sa, sb),
            (Term::ESub(t, x, t2), Term::ESub(u, y, u2)) => {
                if !go(t2, u2, sa, sb) {
                    return false;
                }
                sa.push(x);
                sb.push(y);
                let r = go(t, u, sa, sb);
                sa.pop();
                sb.pop();
                r
            }
            _ => false,
        }
    }
    go(a, b, &mut Vec::new(), &mut Vec::new())
}

/// A nameless rendering: equal keys iff alpha-equivalent terms.
pub fn alpha_key(t: &Term) -> String {
    fn go<'a>(t: &'a Term, stack: &mut Vec<&'a Name>, out: &mut String) {
        match t {
            Term::Var(x) => match stack.iter().rposition(|n| *n == x) {
                Some(i) => {
                    out.push('#');
                    out.push_str(&(stack.len() - i).to_string());
                }
                None => {
                    out.push('!');
                    out.push_str(x.as_str());
                }
            },
            Term::Abs(x, b) => {
                out.push_str("\\(");
                stack.push(x);
                go(b, stack, out);
                stack.pop();
                out.push(')');
            }
            Term::App(f, a) => {
                out.push('@');
                out.push('(');
                go(f, stack, out);
                out.push(',');
                go(a, stack, out);
                out.push(')');
            }
            Term::ESub(b, x, u) => {
                out.push_str("s(");
                go(u, stack, out);
                out.push(',');
                stack.push(x);
                go(b, stack, out);
                stack.pop();
                out.push(')');
            }
        }
    }
    let mut out = String::new();
    go(t, &mut Vec::new(), &mut out);
    out
}

// ---------------------------------------------------------------------------
// Free variables, support, size

pub fn free_vars(t: &Term) -> BTreeSet<Name> {
    fn go<'a>(t: &'a Term, bound: &mut Vec<&'a Name>, out: &mut BTreeSet<Name>) {
        match t {
            Term::Var(x) => {
                if !bound.contains(&x) {
                    out.insert(x.clone());
                }
            }
            Term::Abs(x, b) => {
                bound.push(x);
                go(b, bound, out);
                bound.pop();
            }
            Term::App(f, a) => {
                go(f, bound, out);
                go(a, bound, out);
            }
            Term::ESub(b, x, u) => {
                go(u, bound, out);
                bound.push(x);
                go(b, bound, out);
                bound.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    go(t, &mut Vec::new(), &mut out);
    out
}

/// Whether `x` occurs free in `t`.
pub fn occurs_free(x: &Name, t: &Term) -> bool {
    free_occurrences(x, t) > 0
}

/// Number of free occurrences of `x` in `t`.
pub fn free_occurrences(x: &Name, t: &Term) -> usize {
    match t {
        Term::Var(y) => usize::from(x == y),
        Term::Abs(y, b) => {
            if x == y {
                0
            } else {
                free_occurrences(x, b)
            }
        }
        Term::App(f, a) => free_occurrences(x, f) + free_occurrences(x, a),
        Term::ESub(b, y, u) => {
            let inner = if x == y { 0 } else { free_occurrences(x, b) };
            inner + free_occurrences(x, u)
        }
    }
}

/// Every name occurring in `t`, bound or free.
pub fn all_names(t: &Term) -> BTreeSet<Name> {
    fn go(t: &Term, out: &mut BTreeSet<Name>) {
        match t {
            Term::Var(x) => {
                out.insert(x.clone());
            }
            Term::Abs(x, b) => {
                out.insert(x.clone());
                go(b, out);
            }
            Term::App(f, a) => {
                go(f, out);
                go(a, out);
            }
            Term::ESub(b, x, u) => {
                out.insert(x.clone());
                go(b, out);
                go(u, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    go(t, &mut out);
    out
}

/// A multiset of bound names, kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Support(Vec<Name>);

impl Support {
    pub fn from_names<I: IntoIterator<Item = Name>>(names: I) -> Support {
        let mut v: Vec<Name> = names.into_iter().collect();
        v.sort();
        Support(v)
    }

    pub fn names(&self) -> &[Name] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when no name repeats.
    pub fn is_set(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1])
    }

    pub fn to_set(&self) -> BTreeSet<Name> {
        self.0.iter().cloned().collect()
    }

    pub fn contains(&self, x: &Name) -> bool {
        self.0.binary_search(x).is_ok()
    }

    pub fn sum(&self, other: &Support) -> Support {
        Support::from_names(self.0.iter().chain(other.0.iter()).cloned())
    }
}

/// The multiset of names bound in `t`, by abstractions and substitutions.
pub fn support(t: &Term) -> Support {
    fn go(t: &Term, out: &mut Vec<Name>) {
        match t {
            Term::Var(_) => {}
            Term::Abs(x, b) => {
                out.push(x.clone());
                go(b, out);
            }
            Term::App(f, a) => {
                go(f, out);
                go(a, out);
            }
            Term::ESub(b, x, u) => {
                out.push(x.clone());
                go(b, out);
                go(u, out);
            }
        }
    }
    let mut out = Vec::new();
    go(t, &mut out);
    Support::from_names(out)
}

pub fn is_well_named(t: &Term) -> bool {
    support(t).is_set()
}

/// Node count: every constructor counts one.
pub fn term_size(t: &Term) -> usize {
    match t {
        Term::Var(_) => 1,
        Term::Abs(_, b) => 1 + term_size(b),
        Term::App(f, a) => 1 + term_size(f) + term_size(a),
        Term::ESub(b, _, u) => 1 + term_size(b) + term_size(u),
    }
}

// ---------------------------------------------------------------------------
// Fresh names

/// Produces names `base$N` with a strictly increasing `N`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameSupply {
    next: u64,
}

impl NameSupply {
    pub fn new() -> NameSupply {
        NameSupply { next: 1 }
    }

    /// A supply whose names cannot clash with any name in `t`.
    pub fn after(t: &Term) -> NameSupply {
        let mut s = NameSupply::new();
        s.bump_past(t);
        s
    }

    pub fn bump_past(&mut self, t: &Term) {
        for n in all_names(t) {
            self.bump_past_name(&n);
        }
    }

    pub fn bump_past_name(&mut self, n: &Name) {
        if let Some(c) = n.counter() {
            self.next = self.next.max(c + 1);
        }
    }

    pub fn peek(&self) -> u64 {
        self.next
    }

    pub fn fresh(&mut self, like: &Name) -> Name {
        let n = self.next;
        self.next += 1;
        Name(Arc::from(format!("{}${}", like.base(), n).as_str()))
    }
}

/// Renames every binder of `t` to a fresh name, outside `avoid` and `fv(t)`.
pub fn fresh_rename(t: &Term, avoid: &BTreeSet<Name>) -> Term {
    let mut supply = NameSupply::after(t);
    for n in avoid {
        supply.bump_past_name(n);
    }
    fresh_rename_with(t, &mut supply)
}

/// As [`fresh_rename`], drawing names from a caller-owned supply. The supply
/// must already be past every name the result has to avoid.
pub fn fresh_rename_with(t: &Term, supply: &mut NameSupply) -> Term {
    fn go(t: &Term, env: &mut Vec<(Name, Name)>, supply: &mut NameSupply) -> Term {
        match t {
            Term::Var(x) => match env.iter().rev().find(|(o, _)| o == x) {
                Some((_, n)) => Term::Var(n.clone()),
                None => t.clone(),
            },
            Term::Abs(x, b) => {
                let n = supply.fresh(x);
                env.push((x.clone(), n.clone()));
                let b = go(b, env, supply);
                env.pop();
                Term::Abs(n, Box::new(b))
            }
            Term::App(f, a) => Term::app(go(f, env, supply), go(a, env, supply)),
            Term::ESub(b, x, u) => {
                let u = go(u, env, supply);
                let n = supply.fresh(x);
                env.push((x.clone(), n.clone()));
                let b = go(b, env, supply);
                env.pop();
                Term::ESub(Box::new(b), n, Box::new(u))
            }
        }
    }
    go(t, &mut Vec::new(), supply)
}

/// Replaces free occurrences of `from` in `t` by the variable `to`, without
/// entering scopes that rebind `from`. The caller guarantees `to` is not
/// captured.
pub fn rename_free(t: &Term, from: &Name, to: &Name) -> Term {
    match t {
        Term::Var(x) if x == from => Term::Var(to.clone()),
        Term::Var(_) => t.clone(),
        Term::Abs(x, b) if x == from => t.clone(),
        Term::Abs(x, b) => Term::Abs(x.clone(), Box::new(rename_free(b, from, to))),
        Term::App(f, a) => Term::app(rename_free(f, from, to), rename_free(a, from, to)),
        Term::ESub(b, x, u) => {
            let u = rename_free(u, from, to);
            let b = if x == from {
                (**b).clone()
            } else {
                rename_free(b, from, to)
            };
            Term::ESub(Box::new(b), x.clone(), Box::new(u))
        }
    }
}

// ---------------------------------------------------------------------------
// Meta-substitution and unfolding

/// Capture-avoiding meta-substitution `t{x<-u}`. Binders of `t` that would
/// capture a free variable of `u` are renamed with `supply`.
pub fn subst(t: &Term, x: &Name, u: &Term, supply: &mut NameSupply) -> Term {
    let fu = free_vars(u);
    subst_in(t, x, u, &fu, supply)
}

fn subst_in(t: &Term, x: &Name, u: &Term, fu: &BTreeSet<Name>, supply: &mut NameSupply) -> Term {
    match t {
        Term::Var(y) => {
            if y == x {
                u.clone()
            } else {
                t.clone()
            }
        }
        Term::App(f, a) => Term::app(subst_in(f, x, u, fu, supply), subst_in(a, x, u, fu, supply)),
        Term::Abs(y, b) => {
            if y == x || !occurs_free(x, b) {
                return t.clone();
            }
            if fu.contains(y) {
                let z = supply.fresh(y);
                let b = rename_free(b, y, &z);
                Term::Abs(z, Box::new(subst_in(&b, x, u, fu, supply)))
            } else {
                Term::Abs(y.clone(), Box::new(subst_in(b, x, u, fu, supply)))
            }
        }
        Term::ESub(b, y, p) => {
            let p = subst_in(p, x, u, fu, supply);
            if y == x || !occurs_free(x, b) {
                return Term::ESub(b.clone(), y.clone(), Box::new(p));
            }
            if fu.contains(y) {
                let z = supply.fresh(y);
                let b = rename_free(b, y, &z);
                Term::ESub(Box::new(subst_in(&b, x, u, fu, supply)), z, Box::new(p))
            } else {
                Term::ESub(Box::new(subst_in(b, x, u, fu, supply)), y.clone(), Box::new(p))
            }
        }
    }
}

/// Executes every explicit substitution as a meta-substitution.
pub fn unfold(t: &Term) -> PureTerm {
    unfold_capped(t, usize::MAX).expect("uncapped unfolding")
}

/// As [`unfold`], giving up when an intermediate result exceeds `cap` nodes.
pub fn unfold_capped(t: &Term, cap: usize) -> Option<PureTerm> {
    let mut supply = NameSupply::after(t);
    unfold_in(t, cap, &mut supply).map(PureTerm)
}

fn unfold_in(t: &Term, cap: usize, supply: &mut NameSupply) -> Option<Term> {
    match t {
        Term::Var(_) => Some(t.clone()),
        Term::Abs(x, b) => Some(Term::Abs(x.clone(), Box::new(unfold_in(b, cap, supply)?))),
        Term::App(f, a) => {
            let f = unfold_in(f, cap, supply)?;
            let a = unfold_in(a, cap, supply)?;
            (term_size(&f) + term_size(&a) < cap).then(|| Term::app(f, a))
        }
        Term::ESub(b, x, u) => {
            let b = unfold_in(b, cap, supply)?;
            let k = free_occurrences(x, &b);
            if k == 0 {
                return Some(b);
            }
            let u = unfold_in(u, cap, supply)?;
            let size = term_size(&b) + k * term_size(&u);
            if size > cap {
                return None;
            }
            Some(subst(&b, x, &u, supply))
        }
    }
}

// ---------------------------------------------------------------------------
// Positions

/// One step from a node to a child.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dir {
    AbsBody,
    AppFun,
    AppArg,
    SubBody,
    SubPayload,
}

pub fn subterm_at<'a>(t: &'a Term, path: &[Dir]) -> Option<&'a Term> {
    let mut cur = t;
    for d in path {
        cur = match (cur, d) {
            (Term::Abs(_, b), Dir::AbsBody) => b,
            (Term::App(f, _), Dir::AppFun) => f,
            (Term::App(_, a), Dir::AppArg) => a,
            (Term::ESub(b, _, _), Dir::SubBody) => b,
            (Term::ESub(_, _, u), Dir::SubPayload) => u,
            _ => return None,
        };
    }
    Some(cur)
}

pub fn subterm_at_mut<'a>(t: &'a mut Term, path: &[Dir]) -> Option<&'a mut Term> {
    let mut cur = t;
    for d in path {
        cur = match (cur, d) {
            (Term::Abs(_, b), Dir::AbsBody) => b,
            (Term::App(f, _), Dir::AppFun) => f,
            (Term::App(_, a), Dir::AppArg) => a,
            (Term::ESub(b, _, _), Dir::SubBody) => b,
            (Term::ESub(_, _, u), Dir::SubPayload) => u,
            _ => return None,
        };
    }
    Some(cur)
}

/// Names bound around the node at `path`, outermost first.
pub fn binders_along(t: &Term, path: &[Dir]) -> Vec<Name> {
    let mut out = Vec::new();
    let mut cur = t;
    for d in path {
        match (cur, d) {
            (Term::Abs(x, b), Dir::AbsBody) => {
                out.push(x.clone());
                cur = b;
            }
            (Term::App(f, _), Dir::AppFun) => cur = f,
            (Term::App(_, a), Dir::AppArg) => cur = a,
            (Term::ESub(b, x, _), Dir::SubBody) => {
                out.push(x.clone());
                cur = b;
            }
            (Term::ESub(_, _, u), Dir::SubPayload) => cur = u,
            _ => break,
        }
    }
    out
}

/// Positions of the free occurrences of `x` in `t`, in preorder (function
/// before argument, body before payload).
pub fn free_occurrence_paths(t: &Term, x: &Name) -> Vec<Vec<Dir>> {
    fn go(t: &Term, x: &Name, path: &mut Vec<Dir>, out: &mut Vec<Vec<Dir>>) {
        match t {
            Term::Var(y) => {
                if y == x {
                    out.push(path.clone());
                }
            }
            Term::Abs(y, b) => {
                if y != x {
                    path.push(Dir::AbsBody);
                    go(b, x, path, out);
                    path.pop();
                }
            }
            Term::App(f, a) => {
                path.push(Dir::AppFun);
                go(f, x, path, out);
                path.pop();
                path.push(Dir::AppArg);
                go(a, x, path, out);
                path.pop();
            }
            Term::ESub(b, y, u) => {
                if y != x {
                    path.push(Dir::SubBody);
                    go(b, x, path, out);
                    path.pop();
                }
                path.push(Dir::SubPayload);
                go(u, x, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(t, x, &mut Vec::new(), &mut out);
    out
}

/// Free variable occurrences of `t` in preorder, with repetitions.
pub fn free_occurrence_list(t: &Term) -> Vec<Name> {
    fn go<'a>(t: &'a Term, bound: &mut Vec<&'a Name>, out: &mut Vec<Name>) {
        match t {
            Term::Var(x) => {
                if !bound.contains(&x) {
                    out.push(x.clone());
                }
            }
            Term::Abs(x, b) => {
                bound.push(x);
                go(b, bound, out);
                bound.pop();
            }
            Term::App(f, a) => {
                go(f, bound, out);
                go(a, bound, out);
            }
            Term::ESub(b, x, u) => {
                bound.push(x);
                go(b, bound, out);
                bound.pop();
                go(u, bound, out);
            }
        }
    }
    let mut out = Vec::new();
    go(t, &mut Vec::new(), &mut out);
    out
}

/// All subterm occurrences in preorder.
pub fn subterms(t: &Term) -> Vec<&Term> {
    fn go<'a>(t: &'a Term, out: &mut Vec<&'a Term>) {
        out.push(t);
        match t {
            Term::Var(_) => {}
            Term::Abs(_, b) => go(b, out),
            Term::App(f, a) => {
                go(f, out);
                go(a, out);
            }
            Term::ESub(b, _, u) => {
                go(b, out);
                go(u, out);
            }
        }
    }
    let mut out = Vec::new();
    go(t, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Term {
        parse(s).unwrap()
    }

    #[test]
    fn parses_examples() {
        let d = Term::abs("x", Term::app(Term::var("x"), Term::var("x")));
        assert_eq!(p("(\\x.x x)(\\x.x x)"), Term::app(d.clone(), d));
        assert_eq!(
            p("x[x<-\\y.y]"),
            Term::esub(Term::var("x"), "x", Term::abs("y", Term::var("y")))
        );
        assert_eq!(
            p("\\x.x y z"),
            Term::abs(
                "x",
                Term::app(Term::app(Term::var("x"), Term::var("y")), Term::var("z"))
            )
        );
        assert_eq!(p("λx.x"), p("\\x.x"));
    }

    #[test]
    fn renders_examples() {
        assert_eq!(render(&Term::abs("x", Term::var("x"))), "\\x.x");
        assert_eq!(
            render(&Term::esub(Term::var("x"), "x", Term::abs("y", Term::var("y")))),
            "x[x<-\\y.y]"
        );
        assert_eq!(
            render(&Term::app(Term::var("x"), Term::app(Term::var("y"), Term::var("z")))),
            "x (y z)"
        );
    }

    #[test]
    fn parse_errors_carry_positions() {
        assert!(matches!(parse("(x"), Err(SyntaxError::Parse { pos: 2, .. })));
        assert!(matches!(parse("x[x y]"), Err(SyntaxError::Parse { .. })));
        assert!(parse("").is_err());
        assert!(parse("\\.x").is_err());
        assert!(parse("x)").is_err());
    }

    #[test]
    fn alpha_examples() {
        assert!(alpha_eq(&p("\\x.x"), &p("\\y.y")));
        assert!(alpha_eq(&p("x[x<-y]"), &p("z[z<-y]")));
        assert!(!alpha_eq(&p("\\x.\\y.x"), &p("\\x.\\y.y")));
        assert!(!alpha_eq(&p("x[x<-x]"), &p("y[y<-y]")));
        assert_eq!(alpha_key(&p("\\x.x z")), alpha_key(&p("\\w.w z")));
    }

    #[test]
    fn free_var_examples() {
        let fv = |s: &str| free_vars(&p(s)).into_iter().map(|n| n.to_string()).collect::<Vec<_>>();
        assert_eq!(fv("\\x.x y"), vec!["y"]);
        assert_eq!(fv("x[x<-y]"), vec!["y"]);
        assert!(fv("(\\x.x)(\\y.y)").is_empty());
    }

    #[test]
    fn support_examples() {
        let s = support(&p("\\x.\\y.\\x.(z x)"));
        assert_eq!(s.names(), &[Name::from("x"), Name::from("x"), Name::from("y")]);
        assert!(!s.is_set());
        assert!(support(&p("z")).is_empty());
        assert!(is_well_named(&p("\\x.\\y.x")));
        assert!(!is_well_named(&p("\\x.\\x.x")));
    }

    #[test]
    fn unfold_examples() {
        assert!(alpha_eq(&unfold(&p("(x x)[x<-\\y.y]")), &p("(\\y.y)(\\y.y)")));
        assert_eq!(unfold(&p("\\x.x")).as_term(), &p("\\x.x"));
        assert!(alpha_eq(&unfold(&p("x[x<-y][y<-\\z.z]")), &p("\\z.z")));
        // capture avoidance under an abstraction
        assert!(alpha_eq(&unfold(&p("(\\y.x)[x<-y]")), &p("\\w.y")));
        assert!(unfold_capped(&p("(x x x x)[x<-\\y.y y y]"), 10).is_none());
    }

    #[test]
    fn fresh_rename_examples() {
        let avoid: BTreeSet<Name> = [Name::from("x")].into_iter().collect();
        let r = fresh_rename(&p("\\x.x"), &avoid);
        assert!(alpha_eq(&r, &p("\\x.x")));
        assert!(!support(&r).contains(&Name::from("x")));
        let r = fresh_rename(&p("\\x.\\x.x"), &BTreeSet::new());
        assert!(is_well_named(&r));
        assert!(alpha_eq(&r, &p("\\x.\\x.x")));
    }

    #[test]
    fn size_examples() {
        assert_eq!(term_size(&p("\\x.x x")), 4);
        assert_eq!(term_size(&p("(\\x.x x)(\\x.x x)")), 9);
        assert_eq!(term_size(&p("x")), 1);
    }

    #[test]
    fn dollar_names_round_trip() {
        let t = p("\\x$3.x$3 y");
        assert_eq!(parse(&render(&t)).unwrap(), t);
        assert_eq!(Name::from("x$3").counter(), Some(3));
        assert_eq!(Name::from("x$3").base(), "x");
    }

    #[test]
    fn positions() {
        let t = p("(\\x.x) y[y<-z]");
        assert_eq!(subterm_at(&t, &[Dir::AppArg, Dir::SubPayload]), Some(&p("z")));
        assert_eq!(binders_along(&t, &[Dir::AppFun, Dir::AbsBody]), vec![Name::from("x")]);
    }
}
