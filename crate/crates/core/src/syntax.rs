//! Concrete syntax for programs and goals, the AST, and the static
//! classifiers (head arity, function-freeness).
//!
//! ```text
//! program := rule*
//! rule    := [name '@'] atoms ('<=>' | '==>') [atoms '|'] atoms '.'
//! atoms   := 'true' | atom (',' atom)*
//! atom    := expr [relop expr]
//! relop   := '=' | '<' | '>' | '=<' | '>=' | '\='
//! expr    := mexpr (('+' | '-') mexpr)*
//! mexpr   := primary ('mod' primary)*
//! primary := Var | Int | '-' Int | ident ['(' expr (',' expr)* ')'] | '(' expr ')'
//! ```
//!
//! Variables start with an uppercase letter or `_`, identifiers with a
//! lowercase letter. `%` starts a line comment.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::terms::{Symbol, Term};
use crate::theory::{BuiltinAtom, BuiltinPred};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UserAtom {
    pub predicate: Symbol,
    pub args: Vec<Term>,
}

impl UserAtom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Self {
        UserAtom { predicate: predicate.into(), args }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// The atom viewed as a term, `p(args...)` or the constant `p`.
    pub fn to_term(&self) -> Term {
        Term::compound(&self.predicate, self.args.clone())
    }

    pub fn map_args(&self, f: impl FnMut(&Term) -> Term) -> UserAtom {
        UserAtom { predicate: self.predicate.clone(), args: self.args.iter().map(f).collect() }
    }

    pub fn visit_vars(&self, f: &mut impl FnMut(&Symbol)) {
        self.args.iter().for_each(|a| a.visit_vars(f));
    }
}

impl fmt::Display for UserAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

/// A goal or body element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    User(UserAtom),
    Builtin(BuiltinAtom),
}

impl Constraint {
    pub fn map_terms(&self, f: impl FnMut(&Term) -> Term) -> Constraint {
        match self {
            Constraint::User(a) => Constraint::User(a.map_args(f)),
            Constraint::Builtin(b) => Constraint::Builtin(b.map_terms(f)),
        }
    }

    pub fn visit_vars(&self, f: &mut impl FnMut(&Symbol)) {
        match self {
            Constraint::User(a) => a.visit_vars(f),
            Constraint::Builtin(b) => b.visit_vars(f),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::User(a) => write!(f, "{a}"),
            Constraint::Builtin(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleKind {
    Simplification,
    Propagation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub id: Symbol,
    pub kind: RuleKind,
    pub head: Vec<UserAtom>,
    pub guard: Vec<BuiltinAtom>,
    pub body: Vec<Constraint>,
}

impl Rule {
    /// All variables of the rule, in first-occurrence order.
    pub fn vars(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        let mut push = |v: &Symbol| {
            if !out.contains(v) {
                out.push(v.clone());
            }
        };
        self.head.iter().for_each(|a| a.visit_vars(&mut push));
        self.guard.iter().for_each(|a| a.visit_vars(&mut push));
        self.body.iter().for_each(|a| a.visit_vars(&mut push));
        out
    }

    fn fmt_rule(&self, f: &mut fmt::Formatter<'_>, show_id: bool) -> fmt::Result {
        if show_id {
            write!(f, "{} @ ", self.id)?;
        }
        write_list(f, &self.head)?;
        write!(f, " {} ", if self.kind == RuleKind::Simplification { "<=>" } else { "==>" })?;
        if !self.guard.is_empty() {
            write_list(f, &self.guard)?;
            write!(f, " | ")?;
        }
        if self.body.is_empty() {
            write!(f, "true")?;
        } else {
            write_list(f, &self.body)?;
        }
        write!(f, ".")
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_rule(f, true)
    }
}

/// Id given to the unnamed rule at (1-based) position `pos`.
pub fn default_rule_id(pos: usize) -> String {
    format!("r{pos}")
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
}

impl Program {
    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| &*r.id == id)
    }
}

/// One rule per line; a rule whose id is its positional default is printed
/// without a name, so printing and parsing round-trip.
impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.rules.iter().enumerate() {
            r.fmt_rule(f, *r.id != *default_rule_id(i + 1))?;
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Goal {
    pub atoms: Vec<Constraint>,
}

impl Goal {
    pub fn new(atoms: Vec<Constraint>) -> Self {
        Goal { atoms }
    }

    /// Free variables, sorted.
    pub fn vars(&self) -> std::collections::BTreeSet<Symbol> {
        let mut out = std::collections::BTreeSet::new();
        for a in &self.atoms {
            a.visit_vars(&mut |v| {
                out.insert(v.clone());
            });
        }
        out
    }

    /// Concatenation, keeping multiplicities.
    pub fn join(&self, other: &Goal) -> Goal {
        Goal { atoms: self.atoms.iter().chain(&other.atoms).cloned().collect() }
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            write!(f, "true")
        } else {
            write_list(f, &self.atoms)
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("duplicate rule id `{0}`")]
    DuplicateRule(String),
    #[error("rule `{0}`: built-in constraint `{1}` in head")]
    BuiltinInHead(String, String),
    #[error("rule `{0}`: user constraint `{1}` in guard")]
    UserInGuard(String, String),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    LParen,
    RParen,
    Comma,
    Dot,
    At,
    Bar,
    Simp,
    Prop,
    Rel(BuiltinPred),
    Plus,
    Minus,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Var(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::At => write!(f, "`@`"),
            Tok::Bar => write!(f, "`|`"),
            Tok::Simp => write!(f, "`<=>`"),
            Tok::Prop => write!(f, "`==>`"),
            Tok::Rel(p) => write!(f, "`{}`", p.symbol()),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let syntax = |line, col, msg: String| ParseError::Syntax { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let mut advance = |n: usize, i: &mut usize| {
            *i += n;
            col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let (tok, len) = if rest.starts_with("<=>") {
            (Tok::Simp, 3)
        } else if rest.starts_with("==>") {
            (Tok::Prop, 3)
        } else if rest.starts_with("=<") || rest.starts_with("<=") {
            (Tok::Rel(BuiltinPred::Le), 2)
        } else if rest.starts_with(">=") {
            (Tok::Rel(BuiltinPred::Ge), 2)
        } else if rest.starts_with("\\=") || rest.starts_with("!=") {
            (Tok::Rel(BuiltinPred::Ne), 2)
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(1, &mut i);
            }
            let digits: String = chars[start..i].iter().collect();
            let value = digits.parse().map_err(|_| syntax(l0, c0, format!("integer literal `{digits}` out of range")))?;
            out.push(Spanned { tok: Tok::Int(value), line: l0, col: c0 });
            continue;
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                advance(1, &mut i);
            }
            let word: String = chars[start..i].iter().collect();
            let tok = if c.is_uppercase() || c == '_' { Tok::Var(word) } else { Tok::Ident(word) };
            out.push(Spanned { tok, line: l0, col: c0 });
            continue;
        } else {
            let tok = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '@' => Tok::At,
                '|' => Tok::Bar,
                '=' => Tok::Rel(BuiltinPred::Eq),
                '<' => Tok::Rel(BuiltinPred::Lt),
                '>' => Tok::Rel(BuiltinPred::Gt),
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                _ => return Err(syntax(l0, c0, format!("unexpected character `{c}`"))),
            };
            (tok, 1)
        };
        advance(len, &mut i);
        out.push(Spanned { tok, line: l0, col: c0 });
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

/// An atom as parsed, before it is known whether it sits in a head, guard or body.
enum Parsed {
    True,
    Atom(Constraint),
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(text)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let s = &self.toks[self.pos];
        Err(ParseError::Syntax { line: s.line, col: s.col, msg: msg.into() })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {tok}, found {}", self.peek()))
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut rules = Vec::new();
        let mut seen = HashSet::new();
        while *self.peek() != Tok::Eof {
            let rule = self.rule(rules.len() + 1)?;
            if !seen.insert(rule.id.clone()) {
                return Err(ParseError::DuplicateRule(rule.id.to_string()));
            }
            rules.push(rule);
        }
        Ok(Program { rules })
    }

    fn rule(&mut self, pos: usize) -> Result<Rule, ParseError> {
        let id: Symbol = match (self.peek().clone(), self.peek_at(1)) {
            (Tok::Ident(name) | Tok::Var(name), Tok::At) => {
                self.bump();
                self.bump();
                name.into()
            }
            _ => default_rule_id(pos).into(),
        };
        let head_start = self.pos;
        let head = self.conjunction()?;
        let kind = match self.bump() {
            Tok::Simp => RuleKind::Simplification,
            Tok::Prop => RuleKind::Propagation,
            other => {
                self.pos -= 1;
                return self.error(format!("expected `<=>` or `==>`, found {other}"));
            }
        };
        let first = self.conjunction()?;
        let (guard, body) = if *self.peek() == Tok::Bar {
            self.bump();
            (first, self.conjunction()?)
        } else {
            (Vec::new(), first)
        };
        self.expect(Tok::Dot)?;

        let mut head_atoms = Vec::new();
        for c in head {
            match c {
                Constraint::User(a) => head_atoms.push(a),
                Constraint::Builtin(b) => return Err(ParseError::BuiltinInHead(id.to_string(), b.to_string())),
            }
        }
        if head_atoms.is_empty() {
            self.pos = head_start;
            return self.error("rule head must contain at least one constraint");
        }
        let mut guard_atoms = Vec::new();
        for c in guard {
            match c {
                Constraint::Builtin(b) => guard_atoms.push(b),
                Constraint::User(a) => return Err(ParseError::UserInGuard(id.to_string(), a.to_string())),
            }
        }
        Ok(Rule { id, kind, head: head_atoms, guard: guard_atoms, body })
    }

    /// `true` alone, or a comma-separated list of atoms.
    fn conjunction(&mut self) -> Result<Vec<Constraint>, ParseError> {
        let mut out = Vec::new();
        loop {
            if let Parsed::Atom(a) = self.atom()? {
                out.push(a);
            }
            if *self.peek() != Tok::Comma {
                break;
            }
            self.bump();
        }
        Ok(out)
    }

    fn atom(&mut self) -> Result<Parsed, ParseError> {
        if matches!(self.peek(), Tok::Ident(s) if s == "true")
            && matches!(self.peek_at(1), Tok::Comma | Tok::Dot | Tok::Bar | Tok::Simp | Tok::Prop | Tok::Eof)
        {
            self.bump();
            return Ok(Parsed::True);
        }
        let lhs = self.expr()?;
        if let Tok::Rel(pred) = *self.peek() {
            self.bump();
            let rhs = self.expr()?;
            return Ok(Parsed::Atom(Constraint::Builtin(BuiltinAtom::new(pred, lhs, rhs))));
        }
        match lhs {
            Term::Const(p) if !is_reserved(&p) => Ok(Parsed::Atom(Constraint::User(UserAtom { predicate: p, args: vec![] }))),
            Term::Compound(p, args) if !is_reserved(&p) => Ok(Parsed::Atom(Constraint::User(UserAtom { predicate: p, args }))),
            other => self.error(format!("`{other}` is not a constraint")),
        }
    }

    fn expr(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.mexpr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => "+",
                Tok::Minus => "-",
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.mexpr()?;
            lhs = Term::compound(op, vec![lhs, rhs]);
        }
    }

    fn mexpr(&mut self) -> Result<Term, ParseError> {
        let mut lhs = self.primary()?;
        while matches!(self.peek(), Tok::Ident(s) if s == "mod") {
            self.bump();
            let rhs = self.primary()?;
            lhs = Term::compound("mod", vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Term, ParseError> {
        match self.bump() {
            Tok::Var(v) => Ok(Term::var(&v)),
            Tok::Int(i) => Ok(Term::Int(i)),
            Tok::Minus => match self.bump() {
                Tok::Int(i) => Ok(Term::Int(-i)),
                other => {
                    self.pos -= 1;
                    self.error(format!("expected integer after `-`, found {other}"))
                }
            },
            Tok::LParen => {
                let t = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Ident(name) if name == "mod" => {
                self.pos -= 1;
                self.error("unexpected `mod`")
            }
            Tok::Ident(name) => {
                if *self.peek() != Tok::LParen {
                    return Ok(Term::constant(&name));
                }
                self.bump();
                let mut args = vec![self.expr()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.expr()?);
                }
                self.expect(Tok::RParen)?;
                Ok(Term::compound(&name, args))
            }
            other => {
                self.pos -= 1;
                self.error(format!("expected a term, found {other}"))
            }
        }
    }
}

fn is_reserved(name: &str) -> bool {
    matches!(name, "true" | "mod" | "+" | "-")
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    Parser::new(text)?.program()
}

/// Comma-separated constraints with an optional trailing `.`; `true` is the empty goal.
pub fn parse_goal(text: &str) -> Result<Goal, ParseError> {
    let mut p = Parser::new(text)?;
    let atoms = if *p.peek() == Tok::Eof { Vec::new() } else { p.conjunction()? };
    if *p.peek() == Tok::Dot {
        p.bump();
    }
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {} after goal", p.peek()));
    }
    Ok(Goal { atoms })
}

pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {} after term", p.peek()));
    }
    Ok(t)
}

/// The least `n` such that the program is in CHR_n (1 for the empty program).
pub fn head_arity_class(p: &Program) -> usize {
    p.rules.iter().map(|r| r.head.len()).max().unwrap_or(1).max(1)
}

/// Rules whose head has more than `n` atoms.
pub fn head_arity_violations(p: &Program, n: usize) -> Vec<Symbol> {
    p.rules.iter().filter(|r| r.head.len() > n).map(|r| r.id.clone()).collect()
}

fn has_function_symbol(t: &Term) -> bool {
    matches!(t, Term::Compound(..))
}

fn user_atom_function_free(a: &UserAtom) -> bool {
    !a.args.iter().any(has_function_symbol)
}

fn builtin_function_free(b: &BuiltinAtom) -> bool {
    !has_function_symbol(&b.lhs) && !has_function_symbol(&b.rhs)
}

/// Why a rule falls outside the function-free fragment, if it does.
pub fn function_free_violation(r: &Rule) -> Option<String> {
    if let Some(a) = r.head.iter().find(|a| !user_atom_function_free(a)) {
        return Some(format!("function symbol in head atom `{a}`"));
    }
    if let Some(b) = r.guard.iter().find(|b| !builtin_function_free(b)) {
        return Some(format!("function symbol in guard `{b}`"));
    }
    for c in &r.body {
        match c {
            Constraint::User(a) if !user_atom_function_free(a) => {
                return Some(format!("function symbol in body atom `{a}`"))
            }
            Constraint::Builtin(b) => return Some(format!("built-in `{b}` in body")),
            _ => {}
        }
    }
    None
}

/// True iff no function symbol (compound term, including arithmetic) occurs
/// in `p` or `g`, and built-ins occur only in guards.
pub fn is_function_free(p: &Program, g: &Goal) -> bool {
    p.rules.iter().all(|r| function_free_violation(r).is_none())
        && g.atoms.iter().all(|c| matches!(c, Constraint::User(a) if user_atom_function_free(a)))
}
