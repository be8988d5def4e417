//! First-order terms, substitutions, one-way matching and unification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// Interned-ish name shared between terms.
pub type Symbol = Arc<str>;

/// Functors evaluated by the arithmetic theory when their arguments are ground.
pub const ARITH_FUNCTORS: [&str; 3] = ["+", "-", "mod"];

/// Prefix of names issued by [`FreshSupply`]. The lexer never produces `#`,
/// so these names cannot clash with anything parsed from source text.
pub const FRESH_PREFIX: &str = "_#";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Symbol),
    Const(Symbol),
    Int(i64),
    /// Always has at least one argument; see [`Term::compound`].
    Compound(Symbol, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.into())
    }

    pub fn constant(name: &str) -> Term {
        Term::Const(name.into())
    }

    pub fn int(value: i64) -> Term {
        Term::Int(value)
    }

    /// Builds `functor(args...)`, collapsing to a constant when `args` is empty.
    pub fn compound(functor: &str, args: Vec<Term>) -> Term {
        if args.is_empty() {
            Term::Const(functor.into())
        } else {
            Term::Compound(functor.into(), args)
        }
    }

    /// `succ^k(0)`.
    pub fn peano(k: u64) -> Term {
        (0..k).fold(Term::Int(0), |t, _| Term::Compound("succ".into(), vec![t]))
    }

    /// Inverse of [`Term::peano`].
    pub fn as_peano(&self) -> Option<u64> {
        let mut t = self;
        let mut k = 0;
        loop {
            match t {
                Term::Int(0) => return Some(k),
                Term::Compound(f, args) if &**f == "succ" && args.len() == 1 => {
                    k += 1;
                    t = &args[0];
                }
                _ => return None,
            }
        }
    }

    pub fn as_var(&self) -> Option<&Symbol> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Const(_) | Term::Int(_) => true,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// True when this is a binary arithmetic expression node.
    pub fn is_arith(&self) -> bool {
        matches!(self, Term::Compound(f, args) if args.len() == 2 && ARITH_FUNCTORS.contains(&&**f))
    }

    /// True when an arithmetic expression node occurs anywhere in the term.
    pub fn contains_arith(&self) -> bool {
        match self {
            Term::Compound(_, args) => self.is_arith() || args.iter().any(Term::contains_arith),
            _ => false,
        }
    }

    pub fn occurs(&self, var: &str) -> bool {
        match self {
            Term::Var(v) => &**v == var,
            Term::Const(_) | Term::Int(_) => false,
            Term::Compound(_, args) => args.iter().any(|a| a.occurs(var)),
        }
    }

    /// Pushes the variables of the term in left-to-right first-occurrence order.
    pub fn collect_vars(&self, out: &mut Vec<Symbol>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Const(_) | Term::Int(_) => {}
            Term::Compound(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.visit_vars(&mut |v| {
            out.insert(v.clone());
        });
        out
    }

    pub fn visit_vars(&self, f: &mut impl FnMut(&Symbol)) {
        match self {
            Term::Var(v) => f(v),
            Term::Const(_) | Term::Int(_) => {}
            Term::Compound(_, args) => args.iter().for_each(|a| a.visit_vars(f)),
        }
    }

    /// Rebuilds the term replacing each variable by `f(var)`.
    pub fn map_vars(&self, f: &mut impl FnMut(&Symbol) -> Term) -> Term {
        match self {
            Term::Var(v) => f(v),
            Term::Const(_) | Term::Int(_) => self.clone(),
            Term::Compound(g, args) => {
                Term::Compound(g.clone(), args.iter().map(|a| a.map_vars(f)).collect())
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => write!(f, "{v}"),
            Term::Int(i) => write!(f, "{i}"),
            Term::Compound(op, args) if self.is_arith() => {
                // Operands that are themselves operators are always bracketed,
                // and so is a negative literal on the right.
                let wrap = |t: &Term, right: bool| t.is_arith() || (right && matches!(t, Term::Int(i) if *i < 0));
                let (l, r) = (&args[0], &args[1]);
                if wrap(l, false) {
                    write!(f, "({l})")?;
                } else {
                    write!(f, "{l}")?;
                }
                if &**op == "mod" {
                    write!(f, " mod ")?;
                } else {
                    write!(f, "{op}")?;
                }
                if wrap(r, true) {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
            Term::Compound(g, args) => {
                write!(f, "{g}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A finite map from variables to terms.
///
/// Substitutions produced by [`unify`] and [`match_term`] are idempotent and
/// never bind a variable to itself. `BTreeMap` keeps iteration deterministic.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Substitution {
    bindings: BTreeMap<Symbol, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Symbol, Term)>>(pairs: I) -> Self {
        Substitution {
            bindings: pairs.into_iter().filter(|(v, t)| t.as_var() != Some(v)).collect(),
        }
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn contains(&self, var: &str) -> bool {
        self.bindings.contains_key(var)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Term)> {
        self.bindings.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Symbol> {
        self.bindings.keys()
    }

    /// Inserts a binding without restoring idempotence. Callers that need
    /// a solved form go through [`Substitution::extend_solved`].
    pub fn insert(&mut self, var: Symbol, term: Term) {
        if term.as_var() != Some(&var) {
            self.bindings.insert(var, term);
        }
    }

    /// Simultaneous replacement of every domain variable in `t`.
    pub fn apply(&self, t: &Term) -> Term {
        if self.bindings.is_empty() {
            return t.clone();
        }
        t.map_vars(&mut |v| self.bindings.get(v).cloned().unwrap_or_else(|| Term::Var(v.clone())))
    }

    /// Adds the idempotent substitution `other` (whose domain is disjoint from
    /// ours and whose range mentions none of our domain) and re-solves.
    pub fn extend_solved(&mut self, other: &Substitution) {
        if other.is_empty() {
            return;
        }
        for t in self.bindings.values_mut() {
            *t = other.apply(t);
        }
        for (v, t) in other.iter() {
            self.bindings.insert(v.clone(), t.clone());
        }
    }

    /// Restriction to the given variables.
    pub fn restrict(&self, keep: impl Fn(&str) -> bool) -> Substitution {
        Substitution {
            bindings: self.bindings.iter().filter(|(v, _)| keep(v)).map(|(v, t)| (v.clone(), t.clone())).collect(),
        }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}↦{t}")?;
        }
        write!(f, "}}")
    }
}

/// Triangular bindings used while unifying; resolved to a solved form at the end.
struct Bindings {
    map: BTreeMap<Symbol, Term>,
}

impl Bindings {
    fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.map.get(v) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    fn occurs(&self, var: &str, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(v) => &**v == var,
            Term::Const(_) | Term::Int(_) => false,
            Term::Compound(_, args) => args.iter().any(|a| self.occurs(var, a)),
        }
    }

    fn resolve(&self, t: &Term) -> Term {
        match self.walk(t) {
            Term::Compound(f, args) => Term::Compound(f.clone(), args.iter().map(|a| self.resolve(a)).collect()),
            other => other.clone(),
        }
    }

    fn unify(&mut self, a: &Term, b: &Term, can_bind: &dyn Fn(&str) -> bool) -> bool {
        let mut work = vec![(a.clone(), b.clone())];
        while let Some((a, b)) = work.pop() {
            let a = self.walk(&a).clone();
            let b = self.walk(&b).clone();
            match (&a, &b) {
                (Term::Var(x), Term::Var(y)) if x == y => {}
                (Term::Var(x), _) if can_bind(x) => {
                    if self.occurs(x, &b) {
                        return false;
                    }
                    self.map.insert(x.clone(), b);
                }
                (_, Term::Var(y)) if can_bind(y) => {
                    if self.occurs(y, &a) {
                        return false;
                    }
                    self.map.insert(y.clone(), a);
                }
                (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                    if f != g || xs.len() != ys.len() {
                        return false;
                    }
                    work.extend(xs.iter().cloned().zip(ys.iter().cloned()));
                }
                _ => {
                    if a != b {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn into_substitution(self) -> Substitution {
        let pairs: Vec<_> = self.map.keys().map(|v| (v.clone(), self.resolve(&Term::Var(v.clone())))).collect();
        Substitution::from_pairs(pairs)
    }
}

/// Most general unifier of `t1` and `t2`, with occurs-check.
pub fn unify(t1: &Term, t2: &Term) -> Option<Substitution> {
    unify_restricted(t1, t2, &|_| true)
}

/// Unification in which only variables accepted by `can_bind` may be bound;
/// every other variable behaves as a rigid constant.
pub fn unify_restricted(t1: &Term, t2: &Term, can_bind: &dyn Fn(&str) -> bool) -> Option<Substitution> {
    let mut b = Bindings { map: BTreeMap::new() };
    if b.unify(t1, t2, can_bind) {
        Some(b.into_substitution())
    } else {
        None
    }
}

/// Simultaneous unification of several equations.
pub fn unify_all<'a, I>(pairs: I, can_bind: &dyn Fn(&str) -> bool) -> Option<Substitution>
where
    I: IntoIterator<Item = (&'a Term, &'a Term)>,
{
    let mut b = Bindings { map: BTreeMap::new() };
    for (l, r) in pairs {
        if !b.unify(l, r, can_bind) {
            return None;
        }
    }
    Some(b.into_substitution())
}

/// One-way matching: finds `s` with `s(pattern) == actual`, binding only
/// variables of `pattern`. Variables of `actual` are treated as constants.
pub fn match_term(pattern: &Term, actual: &Term) -> Option<Substitution> {
    let mut s = Substitution::new();
    match_into(pattern, actual, &mut s).then_some(s)
}

/// Extends `s` so that it maps `pattern` onto `actual`. On failure `s` may
/// hold partial bindings and should be discarded.
pub fn match_into(pattern: &Term, actual: &Term, s: &mut Substitution) -> bool {
    match (pattern, actual) {
        (Term::Var(v), _) => match s.bindings.get(v) {
            Some(bound) => bound == actual,
            None => {
                s.bindings.insert(v.clone(), actual.clone());
                true
            }
        },
        (Term::Compound(f, xs), Term::Compound(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_into(x, y, s))
        }
        (Term::Compound(..), _) => false,
        _ => pattern == actual,
    }
}

/// Source of globally fresh variable names. Safe to share between threads.
#[derive(Debug, Default)]
pub struct FreshSupply {
    next: AtomicU64,
}

impl FreshSupply {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh_name(&self) -> Symbol {
        let n = self.next.fetch_add(1, Ordering::Relaxed);
        format!("{FRESH_PREFIX}{n}").into()
    }

    pub fn fresh_var(&self) -> Term {
        Term::Var(self.fresh_name())
    }

    /// A substitution sending each variable in `vars` to a new fresh variable.
    pub fn renaming<'a>(&self, vars: impl IntoIterator<Item = &'a Symbol>) -> Substitution {
        let mut s = Substitution::new();
        for v in vars {
            if !s.contains(v) {
                s.bindings.insert(v.clone(), self.fresh_var());
            }
        }
        s
    }
}

pub fn is_fresh_name(name: &str) -> bool {
    name.starts_with(FRESH_PREFIX)
}

/// Renames all variables of `terms` consistently to fresh ones.
pub fn rename_apart(terms: &[Term], supply: &FreshSupply) -> Vec<Term> {
    let mut vars = Vec::new();
    for t in terms {
        t.collect_vars(&mut vars);
    }
    let renaming = supply.renaming(&vars);
    terms.iter().map(|t| renaming.apply(t)).collect()
}
