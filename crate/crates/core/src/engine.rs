//! The CHR transition system and the answer observables.
//!
//! A configuration `<G, K, d>` holds the pending goal, the identified user
//! constraint store and the built-in store. [`successors`] is the full
//! one-step relation; [`answers`] explores every derivation depth-first and
//! collects the data sufficient and qualified answers of the terminated ones.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

use crate::syntax::{head_arity_class, Constraint, Goal, Program, Rule, RuleKind, UserAtom};
use crate::terms::{match_into, FreshSupply, Substitution, Symbol, Term};
use crate::theory::{BuiltinAtom, BuiltinStore, Canonicalizer, ProjectedAnswer, TheoryError, TheoryKind};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum PropagationMode {
    /// A propagation rule may fire again on the same constraints.
    Naive,
    /// Each propagation rule fires at most once per tuple of constraints.
    #[default]
    Token,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Solve and Introduce are applied leftmost-first before any rule
    /// application is chosen.
    #[default]
    Eager,
    /// Every transition of the relation is a branching point.
    Interleaved,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Transitions per derivation.
    pub max_depth: usize,
    pub max_answers: usize,
    /// Distinct configurations expanded.
    pub max_configs: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_depth: 10_000, max_answers: 1_000, max_configs: 1_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StoredConstraint {
    pub atom: UserAtom,
    pub id: u64,
}

/// `<G, K, d>` plus the propagation history.
#[derive(Clone, Debug)]
pub struct Configuration {
    pub goal: Vec<Constraint>,
    /// Kept in increasing id order.
    pub store: Vec<Arc<StoredConstraint>>,
    pub builtins: BuiltinStore,
    pub history: Arc<BTreeSet<(Symbol, Vec<u64>)>>,
    next_id: u64,
}

impl Configuration {
    pub fn initial(goal: &Goal, theory: TheoryKind) -> Self {
        Configuration {
            goal: goal.atoms.clone(),
            store: Vec::new(),
            builtins: BuiltinStore::new(theory),
            history: Arc::default(),
            next_id: 0,
        }
    }

    pub fn is_failed(&self) -> bool {
        !self.builtins.is_consistent()
    }

    /// The user store with the built-in store applied.
    pub fn user_atoms(&self) -> Vec<UserAtom> {
        self.store.iter().map(|s| s.atom.map_args(|t| self.builtins.apply(t))).collect()
    }

    fn solve(&mut self, c: &BuiltinAtom) -> Result<(), EngineError> {
        self.builtins = self.builtins.tell(c)?;
        Ok(())
    }

    fn introduce(&mut self, a: &UserAtom) -> Result<(), EngineError> {
        let args = a.args.iter().map(|t| self.builtins.evaluate(t)).collect::<Result<Vec<_>, _>>()?;
        self.store.push(Arc::new(StoredConstraint { atom: UserAtom { predicate: a.predicate.clone(), args }, id: self.next_id }));
        self.next_id += 1;
        Ok(())
    }

    fn step_goal(&mut self, index: usize) -> Result<(), EngineError> {
        match self.goal.remove(index) {
            Constraint::Builtin(c) => self.solve(&c),
            Constraint::User(a) => self.introduce(&a),
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let goal = Goal::new(self.goal.clone());
        write!(f, "<{goal}, {{")?;
        for (i, s) in self.store.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}#{}", s.atom.map_args(|t| self.builtins.apply(t)), s.id)?;
        }
        if self.builtins.is_consistent() {
            write!(f, "}}, {}>", self.builtins.solved())
        } else {
            write!(f, "}}, false>")
        }
    }
}

/// Backtracking enumeration of injective assignments of head atoms to store
/// positions whose instantiated atoms match the heads.
struct HeadMatcher {
    positions: Vec<usize>,
    partial: Vec<Substitution>,
    done: bool,
}

impl HeadMatcher {
    fn new() -> Self {
        HeadMatcher { positions: vec![0], partial: vec![Substitution::new()], done: false }
    }

    fn next(&mut self, heads: &[UserAtom], actual: &[UserAtom]) -> Option<(Vec<usize>, Substitution)> {
        if self.done {
            return None;
        }
        loop {
            let level = self.positions.len() - 1;
            let head = &heads[level];
            let mut found = None;
            let mut i = self.positions[level];
            while i < actual.len() {
                let a = &actual[i];
                if a.predicate == head.predicate && a.args.len() == head.args.len() && !self.positions[..level].contains(&i) {
                    let mut s = self.partial[level].clone();
                    if head.args.iter().zip(&a.args).all(|(p, t)| match_into(p, t, &mut s)) {
                        found = Some(s);
                        break;
                    }
                }
                i += 1;
            }
            match found {
                Some(s) => {
                    self.positions[level] = i;
                    if level + 1 == heads.len() {
                        let result = (self.positions.clone(), s);
                        self.positions[level] = i + 1;
                        return Some(result);
                    }
                    self.partial.push(s);
                    self.positions.push(0);
                }
                None => {
                    if level == 0 {
                        self.done = true;
                        return None;
                    }
                    self.positions.pop();
                    self.partial.pop();
                    self.positions[level - 1] += 1;
                }
            }
        }
    }
}

/// Lazily produces the Simplify/Propagate successors of a configuration,
/// rules in program order, store constraints in id order, head positions
/// left to right.
pub struct RuleApplications<'a> {
    config: Configuration,
    program: &'a Program,
    mode: PropagationMode,
    supply: &'a FreshSupply,
    actual: Vec<UserAtom>,
    rule: usize,
    matcher: HeadMatcher,
}

impl<'a> RuleApplications<'a> {
    pub fn new(config: Configuration, program: &'a Program, mode: PropagationMode, supply: &'a FreshSupply) -> Self {
        RuleApplications {
            actual: config.user_atoms(),
            config,
            program,
            mode,
            supply,
            rule: 0,
            matcher: HeadMatcher::new(),
        }
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    fn fire(&self, rule: &Rule, positions: &[usize], head_match: Substitution) -> Option<Configuration> {
        let c = &self.config;
        let ids: Vec<u64> = positions.iter().map(|&p| c.store[p].id).collect();
        let key = (rule.id.clone(), ids);
        if rule.kind == RuleKind::Propagation && self.mode == PropagationMode::Token && c.history.contains(&key) {
            return None;
        }
        // Variables not fixed by the head are existential in the guard and
        // fresh in the body.
        let local: Vec<Symbol> = rule.vars().into_iter().filter(|v| !head_match.contains(v)).collect();
        let renaming = self.supply.renaming(&local);
        let mut theta = head_match;
        for (v, t) in renaming.iter() {
            theta.insert(v.clone(), t.clone());
        }
        let guard: Vec<BuiltinAtom> = rule.guard.iter().map(|g| g.map_terms(|t| theta.apply(t))).collect();
        let local_fresh: BTreeSet<Symbol> = renaming.iter().filter_map(|(_, t)| t.as_var().cloned()).collect();
        let guard_witness = c.builtins.entails_all(&guard, &local_fresh)?;

        let mut next = c.clone();
        let body = rule.body.iter().map(|b| b.map_terms(|t| guard_witness.apply(&theta.apply(t))));
        next.goal = body.chain(c.goal.iter().cloned()).collect();
        match rule.kind {
            RuleKind::Simplification => {
                let removed: HashSet<u64> = key.1.iter().copied().collect();
                next.store.retain(|s| !removed.contains(&s.id));
                Arc::make_mut(&mut next.history).retain(|(_, ids)| !ids.iter().any(|i| removed.contains(i)));
            }
            RuleKind::Propagation => {
                if self.mode == PropagationMode::Token {
                    Arc::make_mut(&mut next.history).insert(key);
                }
            }
        }
        Some(next)
    }
}

impl Iterator for RuleApplications<'_> {
    /// The rule id, the ids of the matched constraints, and the successor.
    type Item = (Symbol, Vec<u64>, Configuration);

    fn next(&mut self) -> Option<Self::Item> {
        if self.config.is_failed() {
            return None;
        }
        while self.rule < self.program.rules.len() {
            let rule = &self.program.rules[self.rule];
            while let Some((positions, s)) = self.matcher.next(&rule.head, &self.actual) {
                if let Some(next) = self.fire(rule, &positions, s) {
                    let ids = positions.iter().map(|&p| self.config.store[p].id).collect();
                    return Some((rule.id.clone(), ids, next));
                }
            }
            self.rule += 1;
            self.matcher = HeadMatcher::new();
        }
        None
    }
}

/// Every configuration reachable in one transition: Solve or Introduce on
/// any goal element, and every applicable Simplify or Propagate.
pub fn successors(
    c: &Configuration,
    p: &Program,
    mode: PropagationMode,
    supply: &FreshSupply,
) -> Result<Vec<Configuration>, EngineError> {
    if c.is_failed() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for i in 0..c.goal.len() {
        let mut next = c.clone();
        next.step_goal(i)?;
        out.push(next);
    }
    out.extend(RuleApplications::new(c.clone(), p, mode, supply).map(|(_, _, next)| next));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AnswerKind {
    DataSufficient,
    Qualified,
}

/// An observable of a successfully terminated derivation, projected onto
/// the free variables of the goal. Variables not in the goal are renamed to
/// canonical witnesses.
#[derive(Clone, Debug)]
pub struct Answer {
    pub kind: AnswerKind,
    /// In store order; empty for data sufficient answers.
    pub user_part: Vec<UserAtom>,
    pub builtin_part: ProjectedAnswer,
}

impl Answer {
    /// User part sorted textually; the multiset component of equality.
    pub fn canonical_user_part(&self) -> Vec<String> {
        let mut v: Vec<String> = self.user_part.iter().map(|a| a.to_string()).collect();
        v.sort();
        v
    }

    fn key(&self) -> (AnswerKind, Vec<String>, ProjectedAnswer) {
        (self.kind, self.canonical_user_part(), self.builtin_part.clone())
    }

    pub fn user_text(&self) -> String {
        if self.user_part.is_empty() {
            "true".to_string()
        } else {
            self.user_part.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ")
        }
    }
}

impl PartialEq for Answer {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Answer {}

impl Hash for Answer {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            AnswerKind::DataSufficient => write!(f, "SA: {}", self.builtin_part),
            AnswerKind::Qualified => write!(f, "QA: {} ; {}", self.user_text(), self.builtin_part),
        }
    }
}

/// The qualified answer (and data sufficient answer when the user store is
/// empty) of a terminated configuration.
pub fn answers_of_final(c: &Configuration, vars: &BTreeSet<Symbol>) -> (Option<Answer>, Answer) {
    let mut canon = Canonicalizer::new(&c.builtins, vars);
    let builtin_part = canon.equations();
    // Witnesses are numbered greedily: the next atom renamed is always the
    // one rendering least with the names assigned so far.
    let mut remaining: Vec<(usize, &UserAtom)> = c.store.iter().map(|s| &s.atom).enumerate().collect();
    let mut renamed: Vec<(usize, UserAtom)> = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let best = (0..remaining.len()).min_by_key(|&i| canon.peek(&remaining[i].1.to_term())).unwrap();
        let (pos, atom) = remaining.remove(best);
        renamed.push((pos, atom.map_args(|t| canon.term(t))));
    }
    renamed.sort_by_key(|(pos, _)| *pos);
    let user_part: Vec<UserAtom> = renamed.into_iter().map(|(_, a)| a).collect();
    let sa = user_part
        .is_empty()
        .then(|| Answer { kind: AnswerKind::DataSufficient, user_part: Vec::new(), builtin_part: builtin_part.clone() });
    (sa, Answer { kind: AnswerKind::Qualified, user_part, builtin_part })
}

/// Which limits cut the search short.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Truncation {
    pub depth: bool,
    pub configs: bool,
    pub answers: bool,
}

impl Truncation {
    pub fn any(&self) -> bool {
        self.depth || self.configs || self.answers
    }
}

#[derive(Clone, Debug, Default)]
pub struct AnswerSet {
    /// In discovery order.
    pub sa: Vec<Answer>,
    pub qa: Vec<Answer>,
    /// False iff a limit truncated the search; the sets are then lower bounds.
    pub exhausted: bool,
    pub truncation: Truncation,
    pub configs_explored: usize,
}

impl AnswerSet {
    pub fn contains_sa(&self, a: &ProjectedAnswer) -> bool {
        self.sa.iter().any(|s| &s.builtin_part == a)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchOptions {
    pub mode: PropagationMode,
    pub strategy: Strategy,
    pub theory: TheoryKind,
    pub limits: Limits,
}

impl SearchOptions {
    pub fn new(mode: PropagationMode, limits: Limits) -> Self {
        SearchOptions { mode, limits, ..Default::default() }
    }
}

/// Identity of a configuration up to renaming of constraint ids and of
/// variables outside the observed set. Equal keys imply the configurations
/// have the same terminated descendants, projected onto the observed set.
fn config_key(c: &Configuration, vars: &BTreeSet<Symbol>) -> u128 {
    let mut canon = Canonicalizer::new(&c.builtins, vars);
    let eqs = canon.equations();
    let mut text = eqs.to_string();
    text.push('|');
    for g in &c.goal {
        let g = match g {
            Constraint::User(a) => Constraint::User(a.map_args(|t| canon.term(t))),
            Constraint::Builtin(b) => Constraint::Builtin(b.map_terms(|t| canon.term(t))),
        };
        text.push_str(&g.to_string());
        text.push(';');
    }
    text.push('|');
    let mut order: Vec<(String, usize)> =
        c.store.iter().enumerate().map(|(i, s)| (canon.peek(&s.atom.to_term()), i)).collect();
    order.sort();
    let mut index_of: HashMap<u64, usize> = HashMap::new();
    for (k, (_, i)) in order.iter().enumerate() {
        let s = &c.store[*i];
        index_of.insert(s.id, k);
        text.push_str(&canon.term(&s.atom.to_term()).to_string());
        text.push(';');
    }
    text.push('|');
    let mut hist: Vec<String> = c
        .history
        .iter()
        .map(|(r, ids)| format!("{r}:{:?}", ids.iter().map(|i| index_of[i]).collect::<Vec<_>>()))
        .collect();
    hist.sort();
    text.push_str(&hist.join(","));
    let mut h1 = DefaultHasher::new();
    text.hash(&mut h1);
    let mut h2 = DefaultHasher::new();
    0x9e37_79b9_7f4a_7c15_u64.hash(&mut h2);
    text.hash(&mut h2);
    ((h1.finish() as u128) << 64) | h2.finish() as u128
}

enum Frame<'a> {
    /// Rule applications are enumerated lazily; the configuration is final
    /// if the enumeration ends without producing anything.
    Lazy { apps: RuleApplications<'a>, produced: bool, depth: usize },
    /// Every successor, computed up front, popped from the back.
    Expanded { pending: Vec<Configuration>, depth: usize },
}

impl Frame<'_> {
    fn depth(&self) -> usize {
        match self {
            Frame::Lazy { depth, .. } | Frame::Expanded { depth, .. } => *depth,
        }
    }
}

struct Search<'a> {
    program: &'a Program,
    supply: &'a FreshSupply,
    vars: BTreeSet<Symbol>,
    opts: SearchOptions,
    visited: HashSet<u128>,
    explored: usize,
    sa: Vec<Answer>,
    qa: Vec<Answer>,
    seen_answers: HashSet<Answer>,
    truncation: Truncation,
}

impl<'a> Search<'a> {
    fn record(&mut self, c: &Configuration) {
        let (sa, qa) = answers_of_final(c, &self.vars);
        if let Some(sa) = sa {
            if self.seen_answers.insert(sa.clone()) {
                self.sa.push(sa);
            }
        }
        if self.seen_answers.insert(qa.clone()) {
            self.qa.push(qa);
        }
        if self.qa.len() >= self.opts.limits.max_answers {
            self.truncation.answers = true;
        }
    }

    /// Applies Solve/Introduce leftmost-first. `None` when the configuration
    /// failed or ran out of depth on the way.
    fn flush(&mut self, mut c: Configuration, mut depth: usize) -> Result<Option<(Configuration, usize)>, EngineError> {
        while !c.goal.is_empty() {
            if depth >= self.opts.limits.max_depth {
                self.truncation.depth = true;
                return Ok(None);
            }
            c.step_goal(0)?;
            depth += 1;
            if c.is_failed() {
                return Ok(None);
            }
        }
        Ok(Some((c, depth)))
    }

    /// Turns a newly reached configuration into a frame, unless it failed or
    /// is a variant of one already expanded.
    fn enter(&mut self, c: Configuration, depth: usize) -> Result<Option<Frame<'a>>, EngineError> {
        let (c, depth) = match self.opts.strategy {
            Strategy::Eager => match self.flush(c, depth)? {
                Some(entered) => entered,
                None => return Ok(None),
            },
            Strategy::Interleaved if c.is_failed() => return Ok(None),
            Strategy::Interleaved => (c, depth),
        };
        if !self.visited.insert(config_key(&c, &self.vars)) {
            return Ok(None);
        }
        self.explored += 1;
        if self.explored > self.opts.limits.max_configs {
            self.truncation.configs = true;
            return Ok(None);
        }
        Ok(Some(match self.opts.strategy {
            Strategy::Eager => {
                Frame::Lazy { apps: RuleApplications::new(c, self.program, self.opts.mode, self.supply), produced: false, depth }
            }
            Strategy::Interleaved => {
                let mut pending = successors(&c, self.program, self.opts.mode, self.supply)?;
                if pending.is_empty() {
                    self.record(&c);
                }
                pending.reverse();
                Frame::Expanded { pending, depth }
            }
        }))
    }

    fn run(&mut self, goal: &Goal) -> Result<(), EngineError> {
        let mut frames: Vec<Frame<'a>> = Vec::new();
        let mut incoming = Some((Configuration::initial(goal, self.opts.theory), 0));
        loop {
            if let Some((c, depth)) = incoming.take() {
                if let Some(frame) = self.enter(c, depth)? {
                    frames.push(frame);
                }
            }
            if self.truncation.configs || self.truncation.answers {
                return Ok(());
            }
            let Some(frame) = frames.last_mut() else { return Ok(()) };
            let next = match frame {
                Frame::Lazy { apps, produced, .. } => {
                    let next = apps.next().map(|(_, _, c)| c);
                    *produced |= next.is_some();
                    next
                }
                Frame::Expanded { pending, .. } => pending.pop(),
            };
            match next {
                Some(_) if frame.depth() >= self.opts.limits.max_depth => self.truncation.depth = true,
                Some(c) => incoming = Some((c, frame.depth() + 1)),
                None => {
                    if let Some(Frame::Lazy { apps, produced: false, .. }) = frames.pop() {
                        self.record(&apps.config);
                    }
                }
            }
        }
    }
}

/// `SA_P(G)` and `QA_P(G)` within the given limits, projected onto `Fv(G)`.
pub fn answers(p: &Program, g: &Goal, opts: SearchOptions) -> Result<AnswerSet, EngineError> {
    answers_over(p, g, &g.vars(), opts)
}

/// Like [`answers`] but projecting onto an explicit set of variables.
pub fn answers_over(p: &Program, g: &Goal, vars: &BTreeSet<Symbol>, opts: SearchOptions) -> Result<AnswerSet, EngineError> {
    let supply = FreshSupply::new();
    let mut search = Search {
        program: p,
        supply: &supply,
        vars: vars.clone(),
        opts,
        visited: HashSet::new(),
        explored: 0,
        sa: Vec::new(),
        qa: Vec::new(),
        seen_answers: HashSet::new(),
        truncation: Truncation::default(),
    };
    search.run(g)?;
    Ok(AnswerSet {
        sa: search.sa,
        qa: search.qa,
        exhausted: !search.truncation.any(),
        truncation: search.truncation,
        configs_explored: search.explored,
    })
}

/// Outcome of a bounded property check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// A counterexample, described in text.
    Fail(String),
    /// A limit truncated a search the verdict depends on.
    Inconclusive(String),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail(_))
    }

    /// Keeps the first failure; otherwise the first inconclusive result.
    fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (f @ Verdict::Fail(_), _) => f,
            (_, f @ Verdict::Fail(_)) => f,
            (i @ Verdict::Inconclusive(_), _) => i,
            (_, other) => other,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "pass"),
            Verdict::Fail(why) => write!(f, "fail: {why}"),
            Verdict::Inconclusive(why) => write!(f, "inconclusive: {why}"),
        }
    }
}

fn require_single_headed(p: &Program) -> Result<(), EngineError> {
    match head_arity_class(p) {
        1 => Ok(()),
        n => Err(EngineError::Precondition(format!("program has head arity class {n}, expected 1"))),
    }
}

fn builtin_goal(c: &[BuiltinAtom], rest: &[&Goal]) -> Goal {
    let mut atoms: Vec<Constraint> = c.iter().cloned().map(Constraint::Builtin).collect();
    for g in rest {
        atoms.extend(g.atoms.iter().cloned());
    }
    Goal::new(atoms)
}

/// For a single-headed program: every data sufficient answer `d` of
/// `(c, G, H)` is also a data sufficient answer of `(d, G)` and of `(d, H)`,
/// all projected onto `Fv(c, G, H)`.
pub fn check_preservation_lemma(
    p: &Program,
    c: &[BuiltinAtom],
    g: &Goal,
    h: &Goal,
    opts: SearchOptions,
) -> Result<Verdict, EngineError> {
    require_single_headed(p)?;
    let whole = builtin_goal(c, &[g, h]);
    let vars = whole.vars();
    let top = answers_over(p, &whole, &vars, opts)?;
    let mut verdict = if top.exhausted {
        Verdict::Pass
    } else {
        Verdict::Inconclusive(format!("search of {whole} truncated"))
    };
    for d in &top.sa {
        let d_atoms = d.builtin_part.atoms();
        for part in [g, h] {
            let sub = builtin_goal(&d_atoms, &[part]);
            let found = answers_over(p, &sub, &vars, opts)?;
            let v = if found.contains_sa(&d.builtin_part) {
                Verdict::Pass
            } else if found.exhausted {
                let got: Vec<String> = found.sa.iter().map(|a| a.builtin_part.to_string()).collect();
                Verdict::Fail(format!(
                    "{whole} has data sufficient answer {}, but {sub} has only [{}]",
                    d.builtin_part,
                    got.join(" | ")
                ))
            } else {
                Verdict::Inconclusive(format!("search of {sub} truncated"))
            };
            verdict = verdict.and(v);
        }
    }
    Ok(verdict)
}

/// Renders an atom with every variable outside `keep` anonymised, so atoms
/// compare modulo renaming of local variables.
fn skeleton(a: &UserAtom, keep: &BTreeSet<Symbol>) -> String {
    a.map_args(|t| t.map_vars(&mut |v| if keep.contains(v) { Term::Var(v.clone()) } else { Term::var("_") }))
        .to_string()
}

/// For a single-headed program: whenever `(G, G)` has a qualified answer
/// `(c, K)` with `k` in `K`, the goal `(c, G, G)` has a qualified answer
/// containing `k` twice.
pub fn check_replication_lemma(p: &Program, g: &Goal, opts: SearchOptions) -> Result<Verdict, EngineError> {
    require_single_headed(p)?;
    let doubled = g.join(g);
    let top = answers(p, &doubled, opts)?;
    let mut verdict = if top.exhausted {
        Verdict::Pass
    } else {
        Verdict::Inconclusive(format!("search of {doubled} truncated"))
    };
    let mut checked: HashMap<ProjectedAnswer, AnswerSet> = HashMap::new();
    for qa in &top.qa {
        let c_atoms = qa.builtin_part.atoms();
        let replay = builtin_goal(&c_atoms, &[g, g]);
        let mut keep = g.vars();
        keep.extend(replay.vars());
        if !checked.contains_key(&qa.builtin_part) {
            checked.insert(qa.builtin_part.clone(), answers_over(p, &replay, &keep, opts)?);
        }
        let found = &checked[&qa.builtin_part];
        for k in &qa.user_part {
            let want = skeleton(k, &keep);
            let twice = found
                .qa
                .iter()
                .any(|a| a.user_part.iter().filter(|u| skeleton(u, &keep) == want).count() >= 2);
            let v = if twice {
                Verdict::Pass
            } else if found.exhausted {
                Verdict::Fail(format!("{doubled} has qualified answer {qa}, but no answer of {replay} contains {k} twice"))
            } else {
                Verdict::Inconclusive(format!("search of {replay} truncated"))
            };
            verdict = verdict.and(v);
        }
    }
    Ok(verdict)
}
