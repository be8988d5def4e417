//! A Constraint Handling Rules engine with answer enumeration, and a
//! two-counter machine front end compiling machines into CHR.

pub mod cli;
pub mod engine;
pub mod minsky;
pub mod syntax;
pub mod terms;
pub mod theory;

pub use engine::{answers, answers_over, successors, Answer, AnswerKind, AnswerSet, Configuration, Limits, PropagationMode, SearchOptions, Strategy};
pub use syntax::{parse_goal, parse_program, Goal, Program, Rule};
pub use terms::{Substitution, Term};
pub use theory::{BuiltinAtom, BuiltinStore, ProjectedAnswer, TheoryKind};
