use std::sync::Arc;

use super::ast::{DomainAst, ProblemAst, Span, TaskInvocation};
use super::{Diagnostic, Source};
use crate::domain::{compile, compile_goal, external_references};
use crate::registry::Registry;
use crate::scalar::Scalar;
use crate::world::{init_state, Schema};

/// Checks a parsed domain and problem for everything the planner relies on:
/// resolvable types, entities, attributes and external functions, an Agent
/// as first parameter of every action, and a well-typed goal. An empty
/// result means the pair is ready to plan with.
pub fn validate<C: Scalar>(
    domain: &DomainAst,
    problem: &ProblemAst,
    registry: &Registry<C>,
) -> Vec<Diagnostic> {
    validate_with_goal(domain, problem, &problem.goal(), Source::Problem, registry)
}

/// As [`validate`], with the goal given separately.
pub fn validate_with_goal<C: Scalar>(
    domain: &DomainAst,
    problem: &ProblemAst,
    goal: &[TaskInvocation],
    goal_source: Source,
    registry: &Registry<C>,
) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let schema = match Schema::from_ast(domain) {
        Ok(s) => Arc::new(s),
        Err(d) => return vec![d],
    };
    for r in external_references(domain) {
        let declared = problem.tables().any(|t| t.name.name == r.name);
        if !declared && !registry.resolves(r.kind, &r.name) {
            diags.push(Diagnostic::error(
                r.span,
                format!("{} `{}` is not defined", r.kind, r.name),
            ));
        }
    }
    let state = match init_state(schema, problem) {
        Ok(s) => s,
        Err(e) => {
            diags
                .push(Diagnostic::error(Span::default(), e.to_string()).in_source(Source::Problem));
            return diags;
        }
    };
    match compile(domain, state.universe().clone()) {
        Ok(model) => {
            if let Err(d) = compile_goal(&model, goal) {
                diags.extend(d.into_iter().map(|d| d.in_source(goal_source)));
            }
        }
        Err(d) => diags.extend(d),
    }
    diags
}
