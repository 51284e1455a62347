use std::cmp::Ordering;

use super::eval::{Bindings, Evaluator};
use super::state::WorldState;
use super::value::Value;
use super::WorldError;
use crate::domain::Selector;
use crate::dsl::ast::{Direction, SelectKind};
use crate::registry::{ExternError, Registry};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SelectError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Extern(#[from] ExternError),
}

/// Candidate values for a selector variable, in the order the planner tries
/// them. `env` must hold every other variable the filter mentions; the
/// selector variable itself is left unbound on return.
pub fn enumerate_bindings<C: Scalar>(
    sel: &Selector,
    state: &WorldState,
    env: &Bindings,
    registry: &Registry<C>,
) -> Result<Vec<Value>, SelectError> {
    let mut ev = Evaluator::new(state);
    let mut passing = Vec::new();
    for cand in state.universe().of_type(sel.ty) {
        let mut local = env.clone();
        local.bind(sel.var, Value::Entity(cand.clone()))?;
        if ev.conditions(&sel.filter, &mut local)? {
            passing.push((cand.clone(), local));
            if sel.kind == SelectKind::SelectOnce {
                break;
            }
        }
    }

    if sel.kind != SelectKind::SelectOrdered {
        return Ok(passing.into_iter().map(|(e, _)| Value::Entity(e)).collect());
    }
    let ordering = sel
        .ordering
        .as_ref()
        .expect("SELECTORDERED carries an ordering function");
    let mut keyed = Vec::with_capacity(passing.len());
    for (e, local) in passing {
        let mut args = Vec::with_capacity(ordering.args.len());
        for a in &ordering.args {
            args.push(ev.term(a, &local)?.unwrap_or(Value::Null));
        }
        let key = registry.eval_ordering(&ordering.name, state, &args)?;
        keyed.push((key, e));
    }
    let descending = sel.direction == Some(Direction::Descending);
    keyed.sort_by(|(a, _), (b, _)| {
        let o = a.partial_cmp(b).unwrap_or(Ordering::Equal);
        if descending {
            o.reverse()
        } else {
            o
        }
    });
    Ok(keyed.into_iter().map(|(_, e)| Value::Entity(e)).collect())
}
