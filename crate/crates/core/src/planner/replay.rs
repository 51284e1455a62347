use super::*;
use crate::domain::DomainModel;
use crate::registry::{PredicateQuery, Registry};
use crate::world::{apply_effects_traced, Bindings, Evaluator, SlotKey, WorldState, WriteLog};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("step {index}: {reason}")]
pub struct ReplayFailure {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayMode {
    /// Preconditions, evaluable predicates and costs are all rechecked.
    Full,
    /// Only symbolic preconditions and effects; attachments are trusted.
    Symbolic,
}

/// What one step read and wrote.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepTrace {
    pub reads: Vec<SlotKey>,
    pub writes: WriteLog,
}

/// Applies one plan step to `state`. `history` holds the attachments of the
/// steps executed before it (only consulted in [`ReplayMode::Full`]).
pub fn execute_step<C: Scalar>(
    domain: &DomainModel,
    registry: &Registry<C>,
    state: &WorldState,
    step: &PlanStep<C>,
    history: &[crate::registry::Attachment],
    mode: ReplayMode,
    trace: Option<&mut StepTrace>,
) -> Result<WorldState, String> {
    let (_, op) = domain
        .operator(&step.action)
        .ok_or_else(|| format!("unknown action `{}`", step.action))?;
    if op.params.len() != step.args.len() {
        return Err(format!(
            "`{}` takes {} arguments, {} given",
            op.name,
            op.params.len(),
            step.args.len()
        ));
    }
    for (a, p) in step.args.iter().zip(&op.params) {
        if !domain
            .universe
            .value_matches(a, crate::world::ValueType::Entity(p.ty))
            || a.is_null()
        {
            return Err(format!("argument {a} of `{}` has the wrong type", op.name));
        }
    }
    let mut env = Bindings::from_args(op.n_vars(), &step.args);
    let mut local = StepTrace::default();
    let holds = {
        let mut ev = Evaluator::tracking(state, &mut local.reads);
        ev.conditions(&op.pre, &mut env)
            .map_err(|e| e.to_string())?
    };
    if !holds {
        return Err(format!("precondition of {step} does not hold"));
    }
    let args_of = |call: &crate::domain::FnCall| -> Result<Vec<Value>, String> {
        let mut ev = Evaluator::new(state);
        call.args
            .iter()
            .map(|a| {
                ev.term(a, &env)
                    .map(|v| v.unwrap_or(Value::Null))
                    .map_err(|e| e.to_string())
            })
            .collect()
    };
    if mode == ReplayMode::Full {
        match (op.predicates.first(), &step.attachment) {
            (None, None) => {}
            (None, Some(_)) => {
                return Err(format!(
                    "{step} carries an attachment but has no evaluable predicate"
                ))
            }
            (Some(p), None) => return Err(format!("{step} lacks an attachment for `{}`", p.name)),
            (Some(p), Some(att)) => {
                let args = args_of(p)?;
                let q = PredicateQuery {
                    state,
                    args: &args,
                    index: att.index,
                    history,
                };
                match registry
                    .eval_predicate(&p.name, &q)
                    .map_err(|e| e.to_string())?
                {
                    Some(a) if a == *att => {}
                    Some(_) => {
                        return Err(format!(
                            "`{}` solution {} differs from the attachment",
                            p.name, att.index
                        ))
                    }
                    None => return Err(format!("`{}` has no solution {}", p.name, att.index)),
                }
            }
        }
        let cost = match &op.cost {
            Some(f) => registry
                .eval_cost(&f.name, state, &args_of(f)?)
                .map_err(|e| e.to_string())?,
            None => C::one(),
        };
        if cost != step.cost {
            return Err(format!(
                "recorded cost {} of {step} differs from {}",
                step.cost, cost
            ));
        }
    }
    let next = apply_effects_traced(
        &op.effects,
        state,
        &mut env,
        Some(&mut local.reads),
        Some(&mut local.writes),
    )
    .map_err(|e| e.to_string())?;
    if let Some(t) = trace {
        *t = local;
    }
    Ok(next)
}

/// Independent soundness check of a plan: every step applicable in turn
/// from `s0`, attachments reproducible, costs and total recomputed.
/// Returns the final state.
pub fn replay_validate<C: Scalar>(
    plan: &Plan<C>,
    s0: &WorldState,
    domain: &DomainModel,
    registry: &Registry<C>,
) -> Result<WorldState, ReplayFailure> {
    let mut state = s0.clone();
    let mut history = Vec::new();
    for (i, step) in plan.steps.iter().enumerate() {
        if step.index != i {
            return Err(ReplayFailure {
                index: i,
                reason: format!("step carries index {}", step.index),
            });
        }
        state = execute_step(
            domain,
            registry,
            &state,
            step,
            &history,
            ReplayMode::Full,
            None,
        )
        .map_err(|reason| ReplayFailure { index: i, reason })?;
        history.extend(step.attachment.clone());
    }
    let total = crate::scalar::sum(plan.steps.iter().map(|s| s.cost.clone()));
    if total != plan.total_cost {
        return Err(ReplayFailure {
            index: plan.steps.len(),
            reason: format!(
                "total cost {} differs from the sum of step costs {}",
                plan.total_cost, total
            ),
        });
    }
    Ok(state)
}
