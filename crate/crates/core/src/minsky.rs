//! Two-counter (Minsky) machines: the `.2cm` file format, a direct
//! interpreter, and the compilers into single-headed CHR with successor
//! terms and into function-free multi-headed CHR.
//!
//! ```text
//! # comments run to the end of the line
//! 1: succ r1
//! 2: decjump r2 4     # r2 = 0 ? goto 4 : (r2 -= 1; goto 3)
//! 3: halt
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::engine::{answers, answers_over, AnswerSet, EngineError, SearchOptions, Verdict};
use crate::syntax::{default_rule_id, Constraint, Goal, Program, Rule, RuleKind, UserAtom};
use crate::terms::Term;
use crate::theory::{BuiltinAtom, TheoryKind};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum MinskyError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("malformed machine: {0}")]
    Malformed(String),
    #[error("machine does not halt within {0} steps")]
    NotHalting(u64),
    #[error("machine halts within {0} steps")]
    Halting(u64),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Register {
    R1,
    R2,
}

impl fmt::Display for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Register::R1 => "r1",
            Register::R2 => "r2",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Succ(Register),
    /// Jump to the label when the register is zero, otherwise decrement it
    /// and continue with the next instruction.
    DecJump(Register, usize),
    Halt,
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Succ(r) => write!(f, "succ {r}"),
            Op::DecJump(r, l) => write!(f, "decjump {r} {l}"),
            Op::Halt => write!(f, "halt"),
        }
    }
}

/// Instructions labelled `1..=n`; execution starts at label 1 with both
/// registers zero. Label `n + 1` is a valid jump target and behaves as an
/// implicit halt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinskyMachine {
    ops: Vec<Op>,
}

impl MinskyMachine {
    pub fn new(ops: Vec<Op>) -> Result<Self, MinskyError> {
        if ops.is_empty() {
            return Err(MinskyError::Malformed("no instructions".into()));
        }
        let end = ops.len() + 1;
        for (i, op) in ops.iter().enumerate() {
            if let Op::DecJump(_, l) = op {
                if *l == 0 || *l > end {
                    return Err(MinskyError::Malformed(format!("instruction {} jumps to missing label {l}", i + 1)));
                }
            }
        }
        Ok(MinskyMachine { ops })
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn op(&self, label: usize) -> Option<Op> {
        label.checked_sub(1).and_then(|i| self.ops.get(i)).copied()
    }

    /// Labels at which execution stops: every `halt` plus the fall-through
    /// label `n + 1`.
    pub fn halt_labels(&self) -> BTreeSet<usize> {
        let mut out: BTreeSet<usize> =
            self.ops.iter().enumerate().filter(|(_, op)| **op == Op::Halt).map(|(i, _)| i + 1).collect();
        out.insert(self.ops.len() + 1);
        out
    }
}

impl fmt::Display for MinskyMachine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, op) in self.ops.iter().enumerate() {
            writeln!(f, "{}: {op}", i + 1)?;
        }
        Ok(())
    }
}

fn parse_register(s: &str) -> Option<Register> {
    match s {
        "r1" => Some(Register::R1),
        "r2" => Some(Register::R2),
        _ => None,
    }
}

/// Parses the `.2cm` format: one `label: instruction` per line, labels
/// `1..n` in order, `#` comments.
pub fn parse_2cm(text: &str) -> Result<MinskyMachine, MinskyError> {
    let mut ops = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |msg: String| MinskyError::Parse { line, msg };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (label, inst) = content.split_once(':').ok_or_else(|| err("expected `label: instruction`".into()))?;
        let label: usize = label.trim().parse().map_err(|_| err(format!("bad label `{}`", label.trim())))?;
        if label != ops.len() + 1 {
            return Err(err(format!("expected label {}, found {label}", ops.len() + 1)));
        }
        let words: Vec<&str> = inst.split_whitespace().collect();
        let op = match words.as_slice() {
            ["halt"] => Op::Halt,
            ["succ", r] => Op::Succ(parse_register(r).ok_or_else(|| err(format!("bad register `{r}`")))?),
            ["decjump", r, l] => Op::DecJump(
                parse_register(r).ok_or_else(|| err(format!("bad register `{r}`")))?,
                l.parse().map_err(|_| err(format!("bad target `{l}`")))?,
            ),
            _ => return Err(err(format!("unknown instruction `{}`", inst.trim()))),
        };
        ops.push(op);
    }
    MinskyMachine::new(ops)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MachineState {
    pub pc: usize,
    pub r1: u64,
    pub r2: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunOutcome {
    Halted { r1: u64, r2: u64, label: usize, steps: u64 },
    Diverged,
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunOutcome::Halted { r1, .. } => write!(f, "halted r1={r1}"),
            RunOutcome::Diverged => write!(f, "diverged"),
        }
    }
}

fn register(s: &mut MachineState, r: Register) -> &mut u64 {
    match r {
        Register::R1 => &mut s.r1,
        Register::R2 => &mut s.r2,
    }
}

/// Executes the machine from `(1, 0, 0)`; `Diverged` when no halt is
/// reached within `max_steps` instructions.
pub fn run_2cm(m: &MinskyMachine, max_steps: u64) -> RunOutcome {
    let mut s = MachineState { pc: 1, r1: 0, r2: 0 };
    let mut steps = 0;
    loop {
        let op = m.op(s.pc).unwrap_or(Op::Halt);
        if op == Op::Halt {
            return RunOutcome::Halted { r1: s.r1, r2: s.r2, label: s.pc, steps };
        }
        if steps == max_steps {
            return RunOutcome::Diverged;
        }
        steps += 1;
        match op {
            Op::Succ(r) => {
                *register(&mut s, r) += 1;
                s.pc += 1;
            }
            Op::DecJump(r, l) => {
                let v = register(&mut s, r);
                if *v == 0 {
                    s.pc = l;
                } else {
                    *v -= 1;
                    s.pc += 1;
                }
            }
            Op::Halt => unreachable!(),
        }
    }
}

/// The target dialects of the compilers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    /// Single-headed rules over successor terms.
    Chr1,
    /// As `Chr1` with a result argument bound by the halt rule.
    Chr1Sa,
    /// Multi-headed, function-free rules over chains of `s/2` links.
    ChrMulti,
}

fn label(j: usize) -> Term {
    Term::constant(&format!("p{j}"))
}

fn v(name: &str) -> Term {
    Term::var(name)
}

fn succ(t: Term) -> Term {
    Term::compound("succ", vec![t])
}

fn zero() -> Term {
    Term::int(0)
}

fn i_atom(j: usize, r1: Term, r2: Term, x: Option<&Term>) -> UserAtom {
    let mut args = vec![label(j), r1, r2];
    args.extend(x.cloned());
    UserAtom::new("i", args)
}

fn simp(head: Vec<UserAtom>, body: Vec<Constraint>) -> Rule {
    Rule { id: "".into(), kind: RuleKind::Simplification, head, guard: Vec::new(), body }
}

/// Gives every rule its positional id, so the printed program carries no
/// rule names.
fn numbered(mut rules: Vec<Rule>) -> Program {
    for (i, r) in rules.iter_mut().enumerate() {
        r.id = default_rule_id(i + 1).into();
    }
    Program { rules }
}

fn compile_single(m: &MinskyMachine, with_result: bool) -> Program {
    let x = with_result.then(|| v("X"));
    let x = x.as_ref();
    let mut rules = Vec::new();
    for (idx, op) in m.ops().iter().enumerate() {
        let j = idx + 1;
        let (r1, r2) = (v("R1"), v("R2"));
        match *op {
            Op::Halt => {
                if let Some(x) = x {
                    rules.push(simp(vec![i_atom(j, r1.clone(), r2, Some(x))],
                        vec![Constraint::Builtin(BuiltinAtom::eq(x.clone(), r1))],
                    ));
                }
            }
            Op::Succ(Register::R1) => rules.push(simp(vec![i_atom(j, r1.clone(), r2.clone(), x)],
                vec![Constraint::User(i_atom(j + 1, succ(r1), r2, x))],
            )),
            Op::Succ(Register::R2) => rules.push(simp(vec![i_atom(j, r1.clone(), r2.clone(), x)],
                vec![Constraint::User(i_atom(j + 1, r1, succ(r2), x))],
            )),
            Op::DecJump(Register::R1, l) => {
                rules.push(simp(vec![i_atom(j, zero(), r2.clone(), x)],
                    vec![Constraint::User(i_atom(l, zero(), r2.clone(), x))],
                ));
                rules.push(simp(vec![i_atom(j, succ(r1.clone()), r2.clone(), x)],
                    vec![Constraint::User(i_atom(j + 1, r1, r2, x))],
                ));
            }
            Op::DecJump(Register::R2, l) => {
                rules.push(simp(vec![i_atom(j, r1.clone(), zero(), x)],
                    vec![Constraint::User(i_atom(l, r1.clone(), zero(), x))],
                ));
                rules.push(simp(vec![i_atom(j, r1.clone(), succ(r2.clone()), x)],
                    vec![Constraint::User(i_atom(j + 1, r1, r2, x))],
                ));
            }
        }
    }
    numbered(rules)
}

/// Single-headed encoding: `i(p_j, R1, R2)` carries the registers as
/// successor terms; `halt` emits no rule, so the computation stops with the
/// final state as a qualified answer.
pub fn compile_chr1(m: &MinskyMachine) -> Program {
    compile_single(m, false)
}

/// Like [`compile_chr1`] with a fourth argument `X`, bound to the value of
/// `R1` by the halt rule, so a halting run has a data sufficient answer.
pub fn compile_chr1_sa(m: &MinskyMachine) -> Program {
    compile_single(m, true)
}

/// Multi-headed function-free encoding: a register value `k` is a chain of
/// `k` links `s(R, SuccR)` starting at a variable marked `zero(R)`.
pub fn compile_multihead(m: &MinskyMachine) -> Program {
    let mut rules = Vec::new();
    let user = |a: UserAtom| Constraint::User(a);
    let s = |a: &str, b: &str| UserAtom::new("s", vec![v(a), v(b)]);
    let zero_of = |r: &str| UserAtom::new("zero", vec![v(r)]);
    for (idx, op) in m.ops().iter().enumerate() {
        let j = idx + 1;
        let i = |j: usize, a: &str, b: &str| i_atom(j, v(a), v(b), None);
        match *op {
            Op::Halt => {}
            Op::Succ(Register::R1) => rules.push(simp(vec![i(j, "R1", "R2")],
                vec![user(s("R1", "SuccR1")), user(i(j + 1, "SuccR1", "R2"))],
            )),
            Op::Succ(Register::R2) => rules.push(simp(vec![i(j, "R1", "R2")],
                vec![user(s("R2", "SuccR2")), user(i(j + 1, "R1", "SuccR2"))],
            )),
            Op::DecJump(Register::R1, l) => {
                rules.push(simp(vec![i(j, "R1", "R2"), s("PreR1", "R1")], vec![user(i(j + 1, "PreR1", "R2"))]));
                rules.push(simp(vec![zero_of("R1"), i(j, "R1", "R2")],
                    vec![user(i(l, "R1", "R2")), user(zero_of("R1"))],
                ));
            }
            Op::DecJump(Register::R2, l) => {
                rules.push(simp(vec![i(j, "R1", "R2"), s("PreR2", "R2")], vec![user(i(j + 1, "R1", "PreR2"))]));
                rules.push(simp(vec![zero_of("R2"), i(j, "R1", "R2")],
                    vec![user(i(l, "R1", "R2")), user(zero_of("R2"))],
                ));
            }
        }
    }
    numbered(rules)
}

pub fn compile(m: &MinskyMachine, target: Target) -> Program {
    match target {
        Target::Chr1 => compile_chr1(m),
        Target::Chr1Sa => compile_chr1_sa(m),
        Target::ChrMulti => compile_multihead(m),
    }
}

/// `i(p1,0,0)`, `i(p1,0,0,X)` or `zero(R1), zero(R2), i(p1,R1,R2)`.
pub fn standard_goal(target: Target) -> Goal {
    let user = |a: UserAtom| Constraint::User(a);
    Goal::new(match target {
        Target::Chr1 => vec![user(i_atom(1, zero(), zero(), None))],
        Target::Chr1Sa => vec![user(i_atom(1, zero(), zero(), Some(&v("X"))))],
        Target::ChrMulti => vec![
            user(UserAtom::new("zero", vec![v("R1")])),
            user(UserAtom::new("zero", vec![v("R2")])),
            user(i_atom(1, v("R1"), v("R2"), None)),
        ],
    })
}

fn halted(m: &MinskyMachine, max_steps: u64) -> Result<(u64, usize), MinskyError> {
    match run_2cm(m, max_steps) {
        RunOutcome::Halted { r1, label, .. } => Ok((r1, label)),
        RunOutcome::Diverged => Err(MinskyError::NotHalting(max_steps)),
    }
}

fn label_of(a: &UserAtom) -> Option<usize> {
    if &*a.predicate != "i" {
        return None;
    }
    match a.args.first() {
        Some(Term::Const(c)) => c.strip_prefix('p').and_then(|n| n.parse().ok()),
        _ => None,
    }
}

fn truncated_or_fail(found: &AnswerSet, msg: String) -> Verdict {
    if found.exhausted {
        Verdict::Fail(msg)
    } else {
        Verdict::Inconclusive(format!("{msg} (search truncated)"))
    }
}

/// For a machine halting with `r1 = k` at label `j`: the single-headed
/// encoding has a qualified answer consisting of the one atom
/// `i(p_j, succ^k(0), _)`.
pub fn verify_chr1_encoding(m: &MinskyMachine, max_steps: u64, opts: SearchOptions) -> Result<Verdict, MinskyError> {
    let (k, j) = halted(m, max_steps)?;
    let found = answers(&compile_chr1(m), &standard_goal(Target::Chr1), opts)?;
    let ok = found.qa.iter().any(|a| {
        a.user_part.len() == 1 && label_of(&a.user_part[0]) == Some(j) && a.user_part[0].args[1].as_peano() == Some(k)
    });
    Ok(if ok {
        Verdict::Pass
    } else {
        let got: Vec<String> = found.qa.iter().map(|a| a.to_string()).collect();
        truncated_or_fail(&found, format!("expected i(p{j},{},_), got [{}]", Term::peano(k), got.join(" | ")))
    })
}

/// For a halting machine: the result-carrying encoding has exactly the data
/// sufficient answer `X = succ^k(0)`.
pub fn verify_sa_variant(m: &MinskyMachine, max_steps: u64, opts: SearchOptions) -> Result<Verdict, MinskyError> {
    let (k, _) = halted(m, max_steps)?;
    let found = answers(&compile_chr1_sa(m), &standard_goal(Target::Chr1Sa), opts)?;
    let want = format!("X={}", Term::peano(k));
    let got: Vec<String> = found.sa.iter().map(|a| a.builtin_part.to_string()).collect();
    Ok(if got == [want.clone()] {
        Verdict::Pass
    } else {
        truncated_or_fail(&found, format!("expected SA {want}, got [{}]", got.join(" | ")))
    })
}

/// Length of the `s/2` chain from `root` to `end`, if the user part contains
/// exactly such a chain (no branching).
pub fn chain_length(atoms: &[UserAtom], root: &Term, end: &Term) -> Option<u64> {
    let mut next: HashMap<&Term, &Term> = HashMap::new();
    for a in atoms.iter().filter(|a| &*a.predicate == "s" && a.args.len() == 2) {
        if next.insert(&a.args[0], &a.args[1]).is_some() {
            return None;
        }
    }
    let mut at = root;
    let mut k = 0;
    while at != end {
        at = next.get(at)?;
        k += 1;
        if k as usize > atoms.len() {
            return None;
        }
    }
    Some(k)
}

/// For a machine halting with `r1 = k` at label `j`: the multi-headed
/// encoding has a qualified answer containing `zero(R1)`, an atom
/// `i(p_j, S, _)` and a chain of exactly `k` links from `R1` to `S`.
/// Other residual atoms are not constrained.
pub fn verify_multihead_encoding(m: &MinskyMachine, max_steps: u64, opts: SearchOptions) -> Result<Verdict, MinskyError> {
    let (k, j) = halted(m, max_steps)?;
    let found = answers(&compile_multihead(m), &standard_goal(Target::ChrMulti), opts)?;
    let r1 = v("R1");
    let zero_r1 = UserAtom::new("zero", vec![r1.clone()]);
    let ok = found.qa.iter().any(|a| {
        a.user_part.contains(&zero_r1)
            && a.user_part
                .iter()
                .filter(|u| label_of(u) == Some(j))
                .any(|u| chain_length(&a.user_part, &r1, &u.args[1]) == Some(k))
    });
    Ok(if ok {
        Verdict::Pass
    } else {
        let got: Vec<String> = found.qa.iter().map(|a| a.to_string()).collect();
        truncated_or_fail(&found, format!("expected chain of length {k} ending at i(p{j},..), got [{}]", got.join(" | ")))
    })
}

/// For a machine that does not halt within `max_steps`: no qualified answer
/// of the compiled program holds an `i` atom at a halting label. The verdict
/// is `Pass` also when the search was truncated, since the claim is bounded.
pub fn check_no_halting_answer(
    m: &MinskyMachine,
    target: Target,
    max_steps: u64,
    opts: SearchOptions,
) -> Result<Verdict, MinskyError> {
    if let RunOutcome::Halted { steps, .. } = run_2cm(m, max_steps) {
        return Err(MinskyError::Halting(steps));
    }
    let halts = m.halt_labels();
    let goal = standard_goal(target);
    let found = answers_over(&compile(m, target), &goal, &goal.vars(), opts)?;
    let bad = found
        .qa
        .iter()
        .find(|a| a.user_part.iter().any(|u| label_of(u).is_some_and(|l| halts.contains(&l))));
    Ok(match bad {
        Some(a) => Verdict::Fail(format!("diverging machine has answer {a}")),
        None => Verdict::Pass,
    })
}

/// Search options suited to compiled machines: token mode over the pure
/// equality theory.
pub fn machine_search(limits: crate::engine::Limits) -> SearchOptions {
    SearchOptions { theory: TheoryKind::Equality, ..SearchOptions::new(Default::default(), limits) }
}

/// Small machines with known behaviour.
pub mod corpus {
    use super::{MinskyMachine, Op, Register};

    fn build(ops: Vec<Op>) -> MinskyMachine {
        MinskyMachine::new(ops).expect("corpus machine is well formed")
    }

    pub fn halt_only() -> MinskyMachine {
        build(vec![Op::Halt])
    }

    /// `k` increments of `r1`.
    pub fn increments(k: usize) -> MinskyMachine {
        let mut ops = vec![Op::Succ(Register::R1); k];
        ops.push(Op::Halt);
        build(ops)
    }

    /// Loads `a` into `r1` and `b` into `r2`, then moves `r2` into `r1` one
    /// unit at a time. Without a register known to be zero there is no
    /// unconditional jump, so the transfer is unrolled `b` times.
    pub fn addition(a: usize, b: usize) -> MinskyMachine {
        let mut ops = vec![Op::Succ(Register::R1); a];
        ops.extend(vec![Op::Succ(Register::R2); b]);
        let halt = a + b + 2 * b + 2;
        for _ in 0..b {
            ops.push(Op::DecJump(Register::R2, halt));
            ops.push(Op::Succ(Register::R1));
        }
        ops.push(Op::DecJump(Register::R2, halt));
        ops.push(Op::Halt);
        build(ops)
    }

    /// `r1 := a * b` with `b` loaded into `r2` as the loop counter and each
    /// (unrolled) iteration adding `a` to `r1`.
    pub fn multiplication(a: usize, b: usize) -> MinskyMachine {
        let mut ops = vec![Op::Succ(Register::R2); b];
        let block = 1 + a;
        let halt = ops.len() + b * block + 1;
        for _ in 0..b {
            ops.push(Op::DecJump(Register::R2, halt));
            ops.extend(vec![Op::Succ(Register::R1); a]);
        }
        ops.push(Op::Halt);
        build(ops)
    }

    /// Increments `r1` forever: `r2` stays zero, so the test always jumps
    /// back.
    pub fn counting_loop() -> MinskyMachine {
        build(vec![Op::Succ(Register::R1), Op::DecJump(Register::R2, 1), Op::Halt])
    }

    /// Named machines with the oracle result (`None` for divergence).
    pub fn standard() -> Vec<(String, MinskyMachine, Option<u64>)> {
        let mut out = vec![("halt".to_string(), halt_only(), Some(0))];
        for k in [1, 2, 5] {
            out.push((format!("inc{k}"), increments(k), Some(k as u64)));
        }
        for a in 0..=3 {
            for b in 0..=3 {
                out.push((format!("add{a}_{b}"), addition(a, b), Some((a + b) as u64)));
            }
        }
        out.push(("mul2x3".into(), multiplication(2, 3), Some(6)));
        out.push((
            "r2_only".into(),
            MinskyMachine::new(vec![Op::Succ(Register::R2), Op::Halt]).unwrap(),
            Some(0),
        ));
        out.push((
            "jump_on_zero".into(),
            MinskyMachine::new(vec![Op::DecJump(Register::R1, 3), Op::Halt, Op::Halt]).unwrap(),
            Some(0),
        ));
        out.push(("loop".into(), counting_loop(), None));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Limits;
    use crate::syntax::{head_arity_class, is_function_free, parse_program};

    fn m(text: &str) -> MinskyMachine {
        parse_2cm(text).unwrap()
    }

    #[test]
    fn parses_and_prints() {
        let text = "# add one\n1: succ r1\n2: decjump r2 4  # jump\n3: halt\n";
        let machine = m(text);
        assert_eq!(machine.ops(), &[Op::Succ(Register::R1), Op::DecJump(Register::R2, 4), Op::Halt]);
        assert_eq!(m(&machine.to_string()), machine);
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(parse_2cm("2: halt"), Err(MinskyError::Parse { line: 1, .. })));
        assert!(matches!(parse_2cm("1: succ r3"), Err(MinskyError::Parse { .. })));
        assert!(matches!(parse_2cm("1: decjump r1 9\n2: halt"), Err(MinskyError::Malformed(_))));
        assert!(matches!(parse_2cm("# nothing"), Err(MinskyError::Malformed(_))));
    }

    #[test]
    fn oracle_examples() {
        assert!(matches!(run_2cm(&m("1: succ r1\n2: succ r1\n3: halt"), 100), RunOutcome::Halted { r1: 2, .. }));
        assert_eq!(
            run_2cm(&m("1: decjump r1 3\n2: halt\n3: halt"), 100),
            RunOutcome::Halted { r1: 0, r2: 0, label: 3, steps: 1 }
        );
        assert_eq!(run_2cm(&corpus::counting_loop(), 1000), RunOutcome::Diverged);
        assert!(matches!(run_2cm(&corpus::multiplication(2, 3), 1000), RunOutcome::Halted { r1: 6, .. }));
        for a in 0..=3 {
            for b in 0..=3 {
                let out = run_2cm(&corpus::addition(a, b), 1000);
                assert!(matches!(out, RunOutcome::Halted { r1, r2: 0, .. } if r1 == (a + b) as u64), "{a}+{b}");
            }
        }
    }

    #[test]
    fn chr1_rules() {
        assert_eq!(compile_chr1(&m("1: succ r1\n2: halt")).to_string(), "i(p1,R1,R2) <=> i(p2,succ(R1),R2).\n");
        assert_eq!(
            compile_chr1(&m("1: decjump r2 1\n2: halt")).to_string(),
            "i(p1,R1,0) <=> i(p1,R1,0).\ni(p1,R1,succ(R2)) <=> i(p2,R1,R2).\n"
        );
        assert!(compile_chr1(&m("1: halt")).rules.is_empty());
        assert_eq!(compile_chr1_sa(&m("1: halt")).to_string(), "i(p1,R1,R2,X) <=> X=R1.\n");
    }

    #[test]
    fn multihead_rules() {
        assert_eq!(
            compile_multihead(&m("1: succ r1\n2: halt")).to_string(),
            "i(p1,R1,R2) <=> s(R1,SuccR1), i(p2,SuccR1,R2).\n"
        );
        assert_eq!(
            compile_multihead(&m("1: decjump r1 2\n2: halt")).to_string(),
            "i(p1,R1,R2), s(PreR1,R1) <=> i(p2,PreR1,R2).\nzero(R1), i(p1,R1,R2) <=> i(p2,R1,R2), zero(R1).\n"
        );
        assert!(compile_multihead(&m("1: halt")).rules.is_empty());
    }

    #[test]
    fn compiled_programs_round_trip_and_classify() {
        for (name, machine, _) in corpus::standard() {
            for target in [Target::Chr1, Target::Chr1Sa, Target::ChrMulti] {
                let p = compile(&machine, target);
                assert_eq!(parse_program(&p.to_string()).unwrap(), p, "{name}");
            }
            let multi = compile_multihead(&machine);
            assert!(is_function_free(&multi, &standard_goal(Target::ChrMulti)), "{name}");
            assert!(head_arity_class(&compile_chr1(&machine)) == 1);
            if machine.ops().iter().any(|op| matches!(op, Op::DecJump(..))) {
                assert_eq!(head_arity_class(&multi), 2, "{name}");
            }
        }
    }

    #[test]
    fn encodings_agree_on_small_machines() {
        let opts = machine_search(Limits::default());
        for text in ["1: halt", "1: succ r2\n2: halt", "1: succ r1\n2: succ r1\n3: halt", "1: decjump r1 3\n2: halt\n3: halt"] {
            let machine = m(text);
            assert_eq!(verify_chr1_encoding(&machine, 100, opts).unwrap(), Verdict::Pass, "{text}");
            assert_eq!(verify_multihead_encoding(&machine, 100, opts).unwrap(), Verdict::Pass, "{text}");
            assert_eq!(verify_sa_variant(&machine, 100, opts).unwrap(), Verdict::Pass, "{text}");
        }
    }

    #[test]
    fn free_register_is_stuck() {
        let p = compile_chr1(&m("1: decjump r1 2\n2: halt"));
        let g = crate::syntax::parse_goal("i(p1,X,0)").unwrap();
        let r = answers(&p, &g, machine_search(Limits::default())).unwrap();
        let qa: Vec<String> = r.qa.iter().map(|a| a.to_string()).collect();
        assert_eq!(qa, vec!["QA: i(p1,X,0) ; true"]);
    }

    #[test]
    fn sa_variant_of_diverging_machine_is_empty() {
        let limits = Limits { max_depth: 200, ..Limits::default() };
        let p = compile_chr1_sa(&corpus::counting_loop());
        let r = answers(&p, &standard_goal(Target::Chr1Sa), machine_search(limits)).unwrap();
        assert!(r.sa.is_empty());
        assert!(!r.exhausted);
        let v = check_no_halting_answer(&corpus::counting_loop(), Target::ChrMulti, 1000, machine_search(limits)).unwrap();
        assert_eq!(v, Verdict::Pass);
    }

    #[test]
    fn encoding_checks_require_halting() {
        let opts = machine_search(Limits::default());
        assert!(matches!(verify_chr1_encoding(&corpus::counting_loop(), 50, opts), Err(MinskyError::NotHalting(50))));
        assert!(matches!(
            check_no_halting_answer(&corpus::halt_only(), Target::Chr1, 50, opts),
            Err(MinskyError::Halting(0))
        ));
    }

    #[test]
    fn chain_length_follows_links() {
        let s = |a: &str, b: &str| UserAtom::new("s", vec![v(a), v(b)]);
        let atoms = vec![s("B", "C"), s("A", "B")];
        assert_eq!(chain_length(&atoms, &v("A"), &v("C")), Some(2));
        assert_eq!(chain_length(&atoms, &v("A"), &v("A")), Some(0));
        assert_eq!(chain_length(&atoms, &v("C"), &v("A")), None);
    }
}
