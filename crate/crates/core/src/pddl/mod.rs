//! PDDL subset front end: typed STRIPS with durative actions whose
//! durations, costs and risks are numeric constants supplied by the problem.
//!
//! Anything outside the subset is rejected with a positioned error rather
//! than silently ignored.

pub mod ast;
mod ground;
mod parse;
pub mod sexpr;

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{GroundedTask, ModelError};
pub use ast::{DomainAst, ProblemAst};
pub use ground::ground;
pub use parse::{parse_domain, parse_problem};
pub use sexpr::Pos;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PddlError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: unsupported: {what}")]
    Unsupported { pos: Pos, what: String },
    #[error("{pos}: unknown requirement {name}")]
    UnknownRequirement { pos: Pos, name: String },
    #[error("{pos}: unknown type {name}")]
    UnknownType { pos: Pos, name: String },
    #[error("{pos}: undeclared predicate {name}")]
    UndeclaredPredicate { pos: Pos, name: String },
    #[error("{pos}: undeclared function {name}")]
    UndeclaredFunction { pos: Pos, name: String },
    #[error("{pos}: undeclared variable {name}")]
    UndeclaredVariable { pos: Pos, name: String },
    #[error("{pos}: {name} expects {expected} arguments, found {found}")]
    ArityMismatch {
        pos: Pos,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("{pos}: unknown object {name}")]
    UnknownObject { pos: Pos, name: String },
    #[error("{pos}: object {object} is not of type {expected}")]
    TypeMismatch {
        pos: Pos,
        object: String,
        expected: String,
    },
    #[error("{pos}: variable {name} in a ground context")]
    NonGround { pos: Pos, name: String },
    #[error("problem is for domain {found}, expected {expected}")]
    DomainMismatch { expected: String, found: String },
    #[error("no value for {name} needed by {action}")]
    UndefinedFluent { name: String, action: String },
    #[error("grounded task is malformed: {0}")]
    Model(#[from] ModelError),
}

/// Parses and grounds a domain/problem pair.
pub fn load(domain_text: &str, problem_text: &str) -> Result<GroundedTask, PddlError> {
    let dom = parse_domain(domain_text)?;
    let prob = parse_problem(problem_text, &dom)?;
    ground(&dom, &prob)
}

/// Deterministic plain-text listing of a grounded task.
pub fn dump_ground(task: &GroundedTask) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "task {}", task.name);
    let _ = writeln!(out, "mode {}", task.mode());
    let _ = writeln!(out, "time-quantum {}", task.time_quantum);
    let _ = writeln!(out, "cost-quantum {}", task.cost_quantum);
    let _ = writeln!(out, "atoms {}", task.num_atoms());
    for a in task.atoms() {
        let _ = writeln!(out, "  {} {}", a.id, a.name);
    }
    let _ = writeln!(out, "actions {}", task.actions().len());
    let ids = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    for a in task.actions() {
        let _ = writeln!(
            out,
            "  {} {} duration={} cost={} risk={} pre=[{}] add=[{}] del=[{}]",
            a.id,
            a.name,
            task.format_time(a.duration),
            task.format_cost(a.cost),
            task.format_cost(a.risk),
            ids(&a.pre),
            ids(&a.add),
            ids(&a.del)
        );
    }
    let init: Vec<usize> = task.init().iter().collect();
    let _ = writeln!(out, "init [{}]", ids(&init));
    let _ = writeln!(out, "goal [{}]", ids(task.goal()));
    out
}
