//! The built-in constraint theory: a solved-form equality store with
//! consistency, entailment and projection, optionally extended with ground
//! integer arithmetic for guards.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::terms::{unify, unify_all, Substitution, Symbol, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BuiltinPred {
    Eq,
    Lt,
    Gt,
    Le,
    Ge,
    Ne,
}

impl BuiltinPred {
    pub fn symbol(self) -> &'static str {
        match self {
            BuiltinPred::Eq => "=",
            BuiltinPred::Lt => "<",
            BuiltinPred::Gt => ">",
            BuiltinPred::Le => "=<",
            BuiltinPred::Ge => ">=",
            BuiltinPred::Ne => "\\=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BuiltinAtom {
    pub pred: BuiltinPred,
    pub lhs: Term,
    pub rhs: Term,
}

impl BuiltinAtom {
    pub fn new(pred: BuiltinPred, lhs: Term, rhs: Term) -> Self {
        BuiltinAtom { pred, lhs, rhs }
    }

    pub fn eq(lhs: Term, rhs: Term) -> Self {
        Self::new(BuiltinPred::Eq, lhs, rhs)
    }

    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> BuiltinAtom {
        BuiltinAtom { pred: self.pred, lhs: f(&self.lhs), rhs: f(&self.rhs) }
    }

    pub fn visit_vars(&self, f: &mut impl FnMut(&Symbol)) {
        self.lhs.visit_vars(f);
        self.rhs.visit_vars(f);
    }
}

impl fmt::Display for BuiltinAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.lhs, self.pred.symbol(), self.rhs)
    }
}

/// Which built-in theory a store decides.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum TheoryKind {
    /// Syntactic equality only; `+`, `-` and `mod` are ordinary functors.
    Equality,
    /// Equality plus ground evaluation of integer arithmetic and comparisons.
    #[default]
    Arithmetic,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TheoryError {
    #[error("non-ground built-in told: {0}")]
    NonGround(String),
    #[error("built-in `{0}` is not supported by the pure equality theory")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ArithError {
    NonGround,
    /// Ground but not evaluable: division by zero, overflow, non-integer operand.
    Undefined,
}

fn prolog_mod(a: i64, b: i64) -> Option<i64> {
    let r = a.checked_rem(b)?;
    Some(if r != 0 && ((r < 0) != (b < 0)) { r + b } else { r })
}

fn eval_int(t: &Term) -> Result<i64, ArithError> {
    match t {
        Term::Int(i) => Ok(*i),
        Term::Var(_) => Err(ArithError::NonGround),
        Term::Compound(op, args) if t.is_arith() => {
            let (a, b) = (eval_int(&args[0]), eval_int(&args[1]));
            let (a, b) = match (a, b) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(ArithError::NonGround), _) | (_, Err(ArithError::NonGround)) => {
                    return Err(ArithError::NonGround)
                }
                _ => return Err(ArithError::Undefined),
            };
            match &**op {
                "+" => a.checked_add(b),
                "-" => a.checked_sub(b),
                _ => prolog_mod(a, b),
            }
            .ok_or(ArithError::Undefined)
        }
        _ if t.is_ground() => Err(ArithError::Undefined),
        _ => Err(ArithError::NonGround),
    }
}

/// Replaces every arithmetic sub-expression by its value.
fn normalize_arith(t: &Term) -> Result<Term, ArithError> {
    match t {
        Term::Compound(..) if t.is_arith() => eval_int(t).map(Term::Int),
        Term::Compound(f, args) => {
            Ok(Term::Compound(f.clone(), args.iter().map(normalize_arith).collect::<Result<_, _>>()?))
        }
        _ => Ok(t.clone()),
    }
}

/// A conjunction of built-in constraints kept in solved form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuiltinStore {
    solved: Substitution,
    consistent: bool,
    theory: TheoryKind,
}

impl Default for BuiltinStore {
    fn default() -> Self {
        BuiltinStore::new(TheoryKind::default())
    }
}

impl BuiltinStore {
    /// The empty store `true`.
    pub fn new(theory: TheoryKind) -> Self {
        BuiltinStore { solved: Substitution::new(), consistent: true, theory }
    }

    pub fn theory(&self) -> TheoryKind {
        self.theory
    }

    pub fn is_consistent(&self) -> bool {
        self.consistent
    }

    pub fn solved(&self) -> &Substitution {
        &self.solved
    }

    pub fn apply(&self, t: &Term) -> Term {
        self.solved.apply(t)
    }

    fn inconsistent(&self) -> BuiltinStore {
        BuiltinStore { solved: Substitution::new(), consistent: false, theory: self.theory }
    }

    /// Applies the store and, in the arithmetic theory, evaluates every
    /// arithmetic sub-expression. Non-ground arithmetic is an error.
    pub fn evaluate(&self, t: &Term) -> Result<Term, TheoryError> {
        let t = self.apply(t);
        if self.theory == TheoryKind::Equality || !t.contains_arith() {
            return Ok(t);
        }
        match normalize_arith(&t) {
            Ok(t) => Ok(t),
            Err(ArithError::NonGround) => Err(TheoryError::NonGround(t.to_string())),
            // Left as a term; it cannot equal any value, so an equation on it fails.
            Err(ArithError::Undefined) => Ok(t),
        }
    }

    /// The solved form of `self ∧ c`.
    pub fn tell(&self, c: &BuiltinAtom) -> Result<BuiltinStore, TheoryError> {
        if !self.consistent {
            return Ok(self.clone());
        }
        if c.pred != BuiltinPred::Eq && self.theory == TheoryKind::Equality {
            return Err(TheoryError::Unsupported(c.to_string()));
        }
        let lhs = self.evaluate(&c.lhs)?;
        let rhs = self.evaluate(&c.rhs)?;
        if c.pred == BuiltinPred::Eq {
            if lhs.contains_arith() || rhs.contains_arith() {
                // undefined ground arithmetic denotes no value
                return Ok(self.inconsistent());
            }
            return Ok(match unify(&lhs, &rhs) {
                Some(mgu) => {
                    let mut solved = self.solved.clone();
                    solved.extend_solved(&mgu);
                    BuiltinStore { solved, consistent: true, theory: self.theory }
                }
                None => self.inconsistent(),
            });
        }
        if !lhs.is_ground() || !rhs.is_ground() {
            return Err(TheoryError::NonGround(c.to_string()));
        }
        Ok(if ground_holds(c.pred, &lhs, &rhs) { self.clone() } else { self.inconsistent() })
    }

    /// Tells every atom in order, stopping at the first error.
    pub fn tell_all<'a>(&self, atoms: impl IntoIterator<Item = &'a BuiltinAtom>) -> Result<BuiltinStore, TheoryError> {
        let mut store = self.clone();
        for a in atoms {
            store = store.tell(a)?;
        }
        Ok(store)
    }

    /// `CT ⊨ store → ∃ local_vars. c`.
    pub fn entails(&self, c: &BuiltinAtom, local_vars: &BTreeSet<Symbol>) -> bool {
        self.entails_all(std::slice::from_ref(c), local_vars).is_some()
    }

    /// Entailment of a conjunction. On success returns the bindings of the
    /// local variables that witness it (empty when the store is inconsistent).
    pub fn entails_all(&self, atoms: &[BuiltinAtom], local_vars: &BTreeSet<Symbol>) -> Option<Substitution> {
        if !self.consistent {
            return Some(Substitution::new());
        }
        let can_bind = |v: &str| local_vars.contains(v);
        let mut witness = Substitution::new();
        for atom in atoms {
            let side = |t: &Term| -> Option<Term> {
                let t = witness.apply(&self.apply(t));
                if self.theory == TheoryKind::Arithmetic && t.contains_arith() {
                    normalize_arith(&t).ok()
                } else {
                    Some(t)
                }
            };
            let (lhs, rhs) = (side(&atom.lhs)?, side(&atom.rhs)?);
            match atom.pred {
                BuiltinPred::Eq => {
                    let s = unify_all([(&lhs, &rhs)], &can_bind)?;
                    witness.extend_solved(&s);
                }
                _ if self.theory == TheoryKind::Equality => return None,
                pred => {
                    if !lhs.is_ground() || !rhs.is_ground() || !ground_holds(pred, &lhs, &rhs) {
                        return None;
                    }
                }
            }
        }
        Some(witness)
    }

    /// `∃_{-vars} store` in canonical form.
    pub fn project(&self, vars: &BTreeSet<Symbol>) -> ProjectedAnswer {
        Canonicalizer::new(self, vars).equations()
    }
}

fn ground_holds(pred: BuiltinPred, lhs: &Term, rhs: &Term) -> bool {
    match pred {
        BuiltinPred::Eq => lhs == rhs,
        BuiltinPred::Ne => lhs != rhs,
        _ => match (lhs, rhs) {
            (Term::Int(a), Term::Int(b)) => match pred {
                BuiltinPred::Lt => a < b,
                BuiltinPred::Gt => a > b,
                BuiltinPred::Le => a <= b,
                BuiltinPred::Ge => a >= b,
                _ => unreachable!(),
            },
            _ => false,
        },
    }
}

/// Prefix of canonical existential witnesses in projected answers.
pub const WITNESS_PREFIX: &str = "_W";

/// A canonical representation of `∃_{-V} d` for an equality store `d`.
///
/// Each equation is `v = t` with `v ∈ V`. Two projections of consistent
/// stores onto the same `V` are CT-equivalent iff they are equal.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProjectedAnswer {
    pub eqs: Vec<(Symbol, Term)>,
}

impl ProjectedAnswer {
    pub fn is_true(&self) -> bool {
        self.eqs.is_empty()
    }

    pub fn atoms(&self) -> Vec<BuiltinAtom> {
        self.eqs.iter().map(|(v, t)| BuiltinAtom::eq(Term::Var(v.clone()), t.clone())).collect()
    }
}

impl fmt::Display for ProjectedAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.eqs.is_empty() {
            return write!(f, "true");
        }
        for (i, (v, t)) in self.eqs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}={t}")?;
        }
        Ok(())
    }
}

/// `CT ⊨ a ↔ b` for projections over the same variables.
pub fn answers_equal(a: &ProjectedAnswer, b: &ProjectedAnswer) -> bool {
    a == b
}

/// Renders store-dependent terms canonically with respect to a set of
/// observed variables.
///
/// Observed variables that the store makes equal are replaced by the least
/// one of their class; every other variable becomes a witness `_W1, _W2, ...`
/// numbered by first occurrence, starting with the observed variables in
/// lexicographic order and continuing through whatever is rendered later.
pub struct Canonicalizer<'a> {
    store: &'a BuiltinStore,
    vars: &'a BTreeSet<Symbol>,
    reps: HashMap<Symbol, Symbol>,
    witnesses: HashMap<Symbol, Symbol>,
}

impl<'a> Canonicalizer<'a> {
    pub fn new(store: &'a BuiltinStore, vars: &'a BTreeSet<Symbol>) -> Self {
        let mut reps = HashMap::new();
        for v in vars {
            if let Term::Var(u) = store.apply(&Term::Var(v.clone())) {
                reps.entry(u).or_insert_with(|| v.clone());
            }
        }
        Canonicalizer { store, vars, reps, witnesses: HashMap::new() }
    }

    fn rename(&mut self, v: &Symbol) -> Term {
        if let Some(r) = self.reps.get(v) {
            return Term::Var(r.clone());
        }
        let n = self.witnesses.len() + 1;
        Term::Var(self.witnesses.entry(v.clone()).or_insert_with(|| format!("{WITNESS_PREFIX}{n}").into()).clone())
    }

    /// Applies the store and renames variables canonically, numbering any
    /// witness not seen before.
    pub fn term(&mut self, t: &Term) -> Term {
        let t = self.store.apply(t);
        t.map_vars(&mut |v| self.rename(v))
    }

    /// Like [`Canonicalizer::term`] but without numbering new witnesses:
    /// unseen ones render as `~`, which sorts after every name.
    pub fn peek(&self, t: &Term) -> String {
        let t = self.store.apply(t);
        t.map_vars(&mut |v| match self.reps.get(v).or_else(|| self.witnesses.get(v)) {
            Some(name) => Term::Var(name.clone()),
            None => Term::Var("~".into()),
        })
        .to_string()
    }

    pub fn equations(&mut self) -> ProjectedAnswer {
        // Observed variables grouped by canonical value. A variable-valued
        // class always resolves to its representative, itself observed.
        let mut groups: BTreeMap<Term, Vec<Symbol>> = BTreeMap::new();
        let mut order: Vec<Term> = Vec::new();
        for v in self.vars.iter() {
            let value = self.term(&Term::Var(v.clone()));
            if !groups.contains_key(&value) {
                order.push(value.clone());
            }
            groups.entry(value).or_default().push(v.clone());
        }
        let mut eqs = Vec::new();
        for value in order {
            let members = &groups[&value];
            for pair in members.windows(2) {
                eqs.push((pair[0].clone(), Term::Var(pair[1].clone())));
            }
            if !value.is_var() {
                eqs.push((members[0].clone(), value.clone()));
            }
        }
        ProjectedAnswer { eqs }
    }
}
