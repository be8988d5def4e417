//! Python bindings: parse programs and goals, enumerate answers, and
//! compile or run two-counter machines.

use chrkit::engine::{answers as search, Answer, AnswerKind, AnswerSet as CoreAnswerSet, Limits, PropagationMode, SearchOptions};
use chrkit::minsky::{compile, parse_2cm, run_2cm, standard_goal, MinskyMachine, RunOutcome, Target};
use chrkit::syntax::{head_arity_class, is_function_free, parse_goal, parse_program, Goal as CoreGoal, Program as CoreProgram};
use chrkit::theory::TheoryKind;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A CHR program.
#[pyclass(name = "Program", module = "chrkit_py", frozen)]
pub struct Program {
    inner: CoreProgram,
}

#[pymethods]
impl Program {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_program(text).map(|inner| Program { inner }).map_err(value_error)
    }

    /// Rule ids in program order.
    #[getter]
    fn rule_ids(&self) -> Vec<String> {
        self.inner.rules.iter().map(|r| r.id.to_string()).collect()
    }

    /// The largest number of atoms in a rule head.
    fn head_arity_class(&self) -> usize {
        head_arity_class(&self.inner)
    }

    #[pyo3(signature = (goal=None))]
    fn is_function_free(&self, goal: Option<&Goal>) -> bool {
        is_function_free(&self.inner, &goal.map(|g| g.inner.clone()).unwrap_or_default())
    }

    fn __len__(&self) -> usize {
        self.inner.rules.len()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Program({} rules)", self.inner.rules.len())
    }
}

/// A conjunction of user-defined and built-in constraints.
#[pyclass(name = "Goal", module = "chrkit_py", frozen)]
pub struct Goal {
    inner: CoreGoal,
}

#[pymethods]
impl Goal {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_goal(text).map(|inner| Goal { inner }).map_err(value_error)
    }

    /// Free variables, sorted.
    #[getter]
    fn variables(&self) -> Vec<String> {
        self.inner.vars().into_iter().map(|v| v.to_string()).collect()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Goal({:?})", self.inner.to_string())
    }
}

fn answer_strings(v: &[Answer]) -> Vec<String> {
    let mut out: Vec<String> = v.iter().map(|a| a.to_string()).collect();
    out.sort();
    out
}

/// The outcome of an answer search.
#[pyclass(name = "AnswerSet", module = "chrkit_py", frozen)]
pub struct AnswerSet {
    inner: CoreAnswerSet,
}

#[pymethods]
impl AnswerSet {
    /// Data sufficient answers as `SA: ...` strings, sorted.
    #[getter]
    fn sa(&self) -> Vec<String> {
        answer_strings(&self.inner.sa)
    }

    /// Qualified answers as `QA: atoms ; eqs` strings, sorted.
    #[getter]
    fn qa(&self) -> Vec<String> {
        answer_strings(&self.inner.qa)
    }

    /// Built-in parts of the data sufficient answers, as lists of equations.
    #[getter]
    fn sa_equations(&self) -> Vec<Vec<String>> {
        self.inner
            .sa
            .iter()
            .filter(|a| a.kind == AnswerKind::DataSufficient)
            .map(|a| a.builtin_part.atoms().iter().map(|e| e.to_string()).collect())
            .collect()
    }

    /// False when a limit cut the search short.
    #[getter]
    fn exhausted(&self) -> bool {
        self.inner.exhausted
    }

    /// Names of the limits that were hit.
    #[getter]
    fn truncated_by(&self) -> Vec<&'static str> {
        let t = &self.inner.truncation;
        [(t.depth, "depth"), (t.configs, "configs"), (t.answers, "answers")]
            .into_iter()
            .filter_map(|(hit, name)| hit.then_some(name))
            .collect()
    }

    #[getter]
    fn configs_explored(&self) -> usize {
        self.inner.configs_explored
    }

    fn __repr__(&self) -> String {
        format!(
            "AnswerSet(sa={}, qa={}, exhausted={})",
            self.inner.sa.len(),
            self.inner.qa.len(),
            if self.inner.exhausted { "True" } else { "False" }
        )
    }
}

fn search_options(
    propagation: &str,
    theory: &str,
    max_depth: Option<usize>,
    max_answers: Option<usize>,
    max_configs: Option<usize>,
) -> PyResult<SearchOptions> {
    let mode = match propagation {
        "token" => PropagationMode::Token,
        "naive" => PropagationMode::Naive,
        other => return Err(value_error(format!("unknown propagation mode `{other}`"))),
    };
    let theory = match theory {
        "arithmetic" => TheoryKind::Arithmetic,
        "equality" => TheoryKind::Equality,
        other => return Err(value_error(format!("unknown theory `{other}`"))),
    };
    let d = Limits::default();
    let limits = Limits {
        max_depth: max_depth.unwrap_or(d.max_depth),
        max_answers: max_answers.unwrap_or(d.max_answers),
        max_configs: max_configs.unwrap_or(d.max_configs),
    };
    Ok(SearchOptions { mode, theory, limits, ..SearchOptions::default() })
}

/// Enumerates the answers of `goal` under `program`. The search runs
/// without the GIL.
#[pyfunction]
#[pyo3(signature = (program, goal, *, propagation="token", theory="arithmetic", max_depth=None, max_answers=None, max_configs=None))]
#[allow(clippy::too_many_arguments)]
fn answers(
    py: Python<'_>,
    program: &Program,
    goal: &Goal,
    propagation: &str,
    theory: &str,
    max_depth: Option<usize>,
    max_answers: Option<usize>,
    max_configs: Option<usize>,
) -> PyResult<AnswerSet> {
    let opts = search_options(propagation, theory, max_depth, max_answers, max_configs)?;
    let (p, g) = (program.inner.clone(), goal.inner.clone());
    let found = py.detach(move || search(&p, &g, opts)).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(AnswerSet { inner: found })
}

fn target(name: &str) -> PyResult<Target> {
    match name {
        "chr1" => Ok(Target::Chr1),
        "chr1-sa" => Ok(Target::Chr1Sa),
        "chr-multi" => Ok(Target::ChrMulti),
        other => Err(value_error(format!("unknown target `{other}`"))),
    }
}

/// A two-counter machine.
#[pyclass(name = "Machine", module = "chrkit_py", frozen)]
pub struct Machine {
    inner: MinskyMachine,
}

#[pymethods]
impl Machine {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_2cm(text).map(|inner| Machine { inner }).map_err(value_error)
    }

    /// Runs from `(1, 0, 0)`; returns the final `R1` or `None` when no halt
    /// is reached within `max_steps`.
    #[pyo3(signature = (max_steps=10_000))]
    fn run(&self, max_steps: u64) -> Option<u64> {
        match run_2cm(&self.inner, max_steps) {
            RunOutcome::Halted { r1, .. } => Some(r1),
            RunOutcome::Diverged => None,
        }
    }

    /// Compiles into CHR; `target` is `chr1`, `chr1-sa` or `chr-multi`.
    fn compile(&self, target: &str) -> PyResult<Program> {
        Ok(Program { inner: compile(&self.inner, self::target(target)?) })
    }

    /// The goal that starts a compiled program.
    #[staticmethod]
    fn standard_goal(target: &str) -> PyResult<Goal> {
        Ok(Goal { inner: standard_goal(self::target(target)?) })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

#[pymodule]
fn chrkit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Program>()?;
    m.add_class::<Goal>()?;
    m.add_class::<AnswerSet>()?;
    m.add_class::<Machine>()?;
    m.add_function(wrap_pyfunction!(answers, m)?)?;
    Ok(())
}
