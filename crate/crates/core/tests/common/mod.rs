#![allow(dead_code)]

use chrkit::engine::{Limits, PropagationMode, SearchOptions};
use chrkit::syntax::{Constraint, Goal, Program, Rule, RuleKind, UserAtom};
use chrkit::terms::Term;
use chrkit::theory::BuiltinAtom;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const PRIMES: &str = include_str!("../../../../data/primes.chr");
pub const LESSEQUAL: &str = include_str!("../../../../data/lessequal.chr");

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Limits small enough that a hundred random searches stay fast.
pub fn small_limits() -> SearchOptions {
    SearchOptions::new(PropagationMode::Token, Limits { max_depth: 60, max_answers: 200, max_configs: 5_000 })
}

const PREDICATES: [&str; 3] = ["p", "q", "r"];
const CONSTANTS: [&str; 2] = ["a", "b"];
const HEAD_VARS: [&str; 2] = ["X", "Y"];

/// A random single-headed program: predicate `PREDICATES[k]` may only
/// rewrite into lower-ranked predicates, which keeps searches finite.
pub struct RandomChr1 {
    pub arities: [usize; 3],
}

impl RandomChr1 {
    pub fn new(rng: &mut StdRng) -> Self {
        RandomChr1 { arities: [rng.random_range(0..=2), rng.random_range(0..=2), rng.random_range(0..=2)] }
    }

    fn leaf(&self, rng: &mut StdRng, vars: &[&str]) -> Term {
        if rng.random_bool(0.6) && !vars.is_empty() {
            Term::var(vars[rng.random_range(0..vars.len())])
        } else {
            Term::constant(CONSTANTS[rng.random_range(0..CONSTANTS.len())])
        }
    }

    fn atom(&self, rng: &mut StdRng, k: usize, vars: &[&str]) -> UserAtom {
        let args = (0..self.arities[k]).map(|_| self.leaf(rng, vars)).collect();
        UserAtom::new(PREDICATES[k], args)
    }

    pub fn program(&self, rng: &mut StdRng) -> Program {
        let n = rng.random_range(1..=3);
        let mut rules = Vec::new();
        for i in 0..n {
            let k = rng.random_range(0..PREDICATES.len());
            let head = self.atom(rng, k, &HEAD_VARS);
            let head_vars: Vec<&str> = HEAD_VARS.iter().copied().filter(|v| head.to_term().occurs(v)).collect();
            let mut guard = Vec::new();
            if !head_vars.is_empty() && rng.random_bool(0.3) {
                let v = head_vars[rng.random_range(0..head_vars.len())];
                guard.push(BuiltinAtom::eq(Term::var(v), self.leaf(rng, &["Z"])));
            }
            let mut body_vars = head_vars.clone();
            body_vars.push("W");
            let mut body = Vec::new();
            for _ in 0..rng.random_range(0..=2) {
                if k > 0 && rng.random_bool(0.6) {
                    let lower = rng.random_range(0..k);
                    body.push(Constraint::User(self.atom(rng, lower, &body_vars)));
                } else {
                    let lhs = self.leaf(rng, &body_vars);
                    body.push(Constraint::Builtin(BuiltinAtom::eq(lhs, self.leaf(rng, &body_vars))));
                }
            }
            let kind = if rng.random_bool(0.3) { RuleKind::Propagation } else { RuleKind::Simplification };
            rules.push(Rule { id: format!("r{}", i + 1).into(), kind, head: vec![head], guard, body });
        }
        Program { rules }
    }

    pub fn goal(&self, rng: &mut StdRng, atoms: usize) -> Goal {
        let mut out = Vec::new();
        for _ in 0..atoms {
            if rng.random_bool(0.15) {
                let lhs = Term::var(["A", "B"][rng.random_range(0..2)]);
                out.push(Constraint::Builtin(BuiltinAtom::eq(lhs, self.leaf(rng, &["A", "B"]))));
            } else {
                let k = rng.random_range(0..PREDICATES.len());
                out.push(Constraint::User(self.atom(rng, k, &["A", "B"])));
            }
        }
        Goal::new(out)
    }

    /// A goal of user atoms only.
    pub fn user_goal(&self, rng: &mut StdRng, atoms: usize) -> Goal {
        let out = (0..atoms)
            .map(|_| {
                let k = rng.random_range(0..PREDICATES.len());
                Constraint::User(self.atom(rng, k, &["A", "B"]))
            })
            .collect();
        Goal::new(out)
    }
}

/// A random multi-headed program (heads of one or two atoms) for checks
/// that do not depend on the dialect.
pub fn random_program(rng: &mut StdRng) -> (Program, RandomChr1) {
    let gen = RandomChr1::new(rng);
    let mut p = gen.program(rng);
    if rng.random_bool(0.4) {
        let k = rng.random_range(0..PREDICATES.len());
        let j = rng.random_range(0..PREDICATES.len());
        let kind = if rng.random_bool(0.3) { RuleKind::Propagation } else { RuleKind::Simplification };
        let body = if kind == RuleKind::Propagation {
            Vec::new()
        } else {
            vec![Constraint::Builtin(BuiltinAtom::eq(Term::var("X"), Term::var("Y")))]
        };
        let id = format!("r{}", p.rules.len() + 1);
        let head = vec![gen_atom(&gen, rng, k), gen_atom(&gen, rng, j)];
        p.rules.push(Rule { id: id.into(), kind, head, guard: Vec::new(), body });
    }
    (p, gen)
}

fn gen_atom(gen: &RandomChr1, rng: &mut StdRng, k: usize) -> UserAtom {
    let args = (0..gen.arities[k]).map(|_| Term::var(HEAD_VARS[rng.random_range(0..2)])).collect();
    UserAtom::new(PREDICATES[k], args)
}
