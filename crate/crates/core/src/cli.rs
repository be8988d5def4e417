//! The `chrkit` command line: answer enumeration, two-counter machine
//! compilation and execution, and dialect classification.
//!
//! Exit codes: 0 success, 1 parse or run error (or a failed check), 2 when
//! a search or machine run was cut short by a limit.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::engine::{answers, Limits, PropagationMode, SearchOptions};
use crate::minsky::{compile, parse_2cm, run_2cm, standard_goal, RunOutcome, Target};
use crate::syntax::{
    function_free_violation, head_arity_class, head_arity_violations, is_function_free, parse_goal, parse_program, Program,
};
use crate::theory::TheoryKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_TRUNCATED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "chrkit", version, about = "Constraint Handling Rules engine and two-counter machine compiler")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AnswerMode {
    Sa,
    Qa,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Propagation {
    Naive,
    Token,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Theory {
    /// Syntactic equality only.
    Equality,
    /// Equality plus ground arithmetic and order guards.
    Arithmetic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CompileTarget {
    Chr1,
    Chr1Sa,
    ChrMulti,
}

impl From<CompileTarget> for Target {
    fn from(t: CompileTarget) -> Target {
        match t {
            CompileTarget::Chr1 => Target::Chr1,
            CompileTarget::Chr1Sa => Target::Chr1Sa,
            CompileTarget::ChrMulti => Target::ChrMulti,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Enumerate the data sufficient and qualified answers of a goal.
    Answers {
        program: PathBuf,
        goal: String,
        #[arg(long, value_enum, default_value = "both")]
        mode: AnswerMode,
        #[arg(long, value_enum, default_value = "token")]
        propagation: Propagation,
        #[arg(long, value_enum, default_value = "arithmetic")]
        theory: Theory,
        #[arg(long, default_value_t = Limits::default().max_depth)]
        max_depth: usize,
        #[arg(long, default_value_t = Limits::default().max_answers)]
        max_answers: usize,
        #[arg(long, default_value_t = Limits::default().max_configs)]
        max_configs: usize,
    },
    /// Compile a two-counter machine into CHR.
    #[command(name = "compile-2cm")]
    Compile2cm {
        machine: PathBuf,
        #[arg(long, value_enum)]
        target: CompileTarget,
        /// Write the program here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also print the standard goal for the target.
        #[arg(long)]
        emit_goal: bool,
    },
    /// Classify a program by head arity and function-freeness.
    Check {
        program: PathBuf,
        /// Require every head to have at most this many atoms.
        #[arg(long)]
        head_arity: Option<usize>,
        /// Require the program to be function-free.
        #[arg(long)]
        function_free: bool,
        /// Goal included in the function-free check.
        #[arg(long)]
        goal: Option<String>,
    },
    /// Run a two-counter machine directly.
    #[command(name = "2cm-run")]
    Run2cm {
        machine: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        max_steps: u64,
    },
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Runs the command line `args` (including the program name), writing to
/// the given streams; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, String> {
    let io = |e: std::io::Error| e.to_string();
    match command {
        Command::Answers { program, goal, mode, propagation, theory, max_depth, max_answers, max_configs } => {
            let text = read(&program)?;
            let p = parse_program(&text).map_err(|e| format!("{}:{e}", program.display()))?;
            let g = parse_goal(&goal).map_err(|e| format!("goal:{e}"))?;
            let opts = SearchOptions {
                mode: match propagation {
                    Propagation::Naive => PropagationMode::Naive,
                    Propagation::Token => PropagationMode::Token,
                },
                theory: match theory {
                    Theory::Equality => TheoryKind::Equality,
                    Theory::Arithmetic => TheoryKind::Arithmetic,
                },
                limits: Limits { max_depth, max_answers, max_configs },
                ..SearchOptions::default()
            };
            let started = Instant::now();
            let found = answers(&p, &g, opts).map_err(|e| e.to_string())?;
            let mut lines: Vec<String> = Vec::new();
            if matches!(mode, AnswerMode::Sa | AnswerMode::Both) {
                lines.extend(found.sa.iter().map(|a| a.to_string()));
            }
            if matches!(mode, AnswerMode::Qa | AnswerMode::Both) {
                lines.extend(found.qa.iter().map(|a| a.to_string()));
            }
            lines.sort();
            for l in &lines {
                writeln!(out, "{l}").map_err(io)?;
            }
            writeln!(out, "configs: {}", found.configs_explored).map_err(io)?;
            let mut hit = Vec::new();
            if found.truncation.depth {
                hit.push("depth");
            }
            if found.truncation.configs {
                hit.push("configs");
            }
            if found.truncation.answers {
                hit.push("answers");
            }
            if !hit.is_empty() {
                writeln!(out, "truncated by: {}", hit.join(", ")).map_err(io)?;
            }
            writeln!(out, "exhausted: {}", if found.exhausted { "yes" } else { "no" }).map_err(io)?;
            let _ = writeln!(err, "time: {:.3}s", started.elapsed().as_secs_f64());
            Ok(if found.exhausted { EXIT_OK } else { EXIT_TRUNCATED })
        }
        Command::Compile2cm { machine, target, out: path, emit_goal } => {
            let m = parse_2cm(&read(&machine)?).map_err(|e| format!("{}: {e}", machine.display()))?;
            let target = Target::from(target);
            let program = compile(&m, target).to_string();
            match path {
                Some(path) => std::fs::write(&path, &program).map_err(|e| format!("{}: {e}", path.display()))?,
                None => write!(out, "{program}").map_err(io)?,
            }
            if emit_goal {
                writeln!(out, "{}", standard_goal(target)).map_err(io)?;
            }
            Ok(EXIT_OK)
        }
        Command::Check { program, head_arity, function_free, goal } => {
            let p = parse_program(&read(&program)?).map_err(|e| format!("{}:{e}", program.display()))?;
            let mut ok = true;
            writeln!(out, "head arity class: {}", head_arity_class(&p)).map_err(io)?;
            if let Some(n) = head_arity {
                let bad = head_arity_violations(&p, n);
                if bad.is_empty() {
                    writeln!(out, "head arity <= {n}: pass").map_err(io)?;
                } else {
                    ok = false;
                    let ids: Vec<&str> = bad.iter().map(|s| &**s).collect();
                    writeln!(out, "head arity <= {n}: fail ({})", ids.join(", ")).map_err(io)?;
                }
            }
            if function_free {
                let g = match &goal {
                    Some(text) => parse_goal(text).map_err(|e| format!("goal:{e}"))?,
                    None => Default::default(),
                };
                let mut problems: Vec<String> =
                    p.rules.iter().filter_map(|r| function_free_violation(r).map(|why| format!("{}: {why}", r.id))).collect();
                if !is_function_free(&Program::default(), &g) {
                    problems.push(format!("goal `{g}` has a function symbol or a built-in"));
                }
                if problems.is_empty() {
                    writeln!(out, "function-free: pass").map_err(io)?;
                } else {
                    ok = false;
                    writeln!(out, "function-free: fail").map_err(io)?;
                    for prob in problems {
                        writeln!(out, "  {prob}").map_err(io)?;
                    }
                }
            }
            Ok(if ok { EXIT_OK } else { EXIT_ERROR })
        }
        Command::Run2cm { machine, max_steps } => {
            let m = parse_2cm(&read(&machine)?).map_err(|e| format!("{}: {e}", machine.display()))?;
            let outcome = run_2cm(&m, max_steps);
            writeln!(out, "{outcome}").map_err(io)?;
            Ok(match outcome {
                RunOutcome::Halted { .. } => EXIT_OK,
                RunOutcome::Diverged => EXIT_TRUNCATED,
            })
        }
    }
}
