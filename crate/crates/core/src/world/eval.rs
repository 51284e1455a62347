//! Condition evaluation and effect application over [`WorldState`].

use super::state::{Slot, SlotKey, WorldState};
use super::value::{EntityRef, Value};
use super::WorldError;
use crate::domain::{Cond, Effect, Quant, Term, VarId};

/// Variable frame for one method or operator instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bindings {
    vals: Vec<Option<Value>>,
}

impl Bindings {
    pub fn new(n_vars: usize) -> Self {
        Bindings {
            vals: vec![None; n_vars],
        }
    }

    pub fn from_args(n_vars: usize, args: &[Value]) -> Self {
        let mut b = Bindings::new(n_vars.max(args.len()));
        for (i, a) in args.iter().enumerate() {
            b.vals[i] = Some(a.clone());
        }
        b
    }

    pub fn get(&self, v: VarId) -> Option<&Value> {
        self.vals.get(v.0 as usize).and_then(|x| x.as_ref())
    }

    /// Binds a variable; each variable is written at most once.
    pub fn bind(&mut self, v: VarId, value: Value) -> Result<(), WorldError> {
        let slot = &mut self.vals[v.0 as usize];
        if slot.is_some() {
            return Err(WorldError::Rebound(v.0));
        }
        *slot = Some(value);
        Ok(())
    }

    /// Quantifier variables are rebound once per candidate.
    fn scoped(&mut self, v: VarId, value: Option<Value>) {
        self.vals[v.0 as usize] = value;
    }
}

/// Reads a state, optionally recording every slot it touches.
pub struct Evaluator<'a> {
    state: &'a WorldState,
    reads: Option<&'a mut Vec<SlotKey>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(state: &'a WorldState) -> Self {
        Evaluator { state, reads: None }
    }

    pub fn tracking(state: &'a WorldState, reads: &'a mut Vec<SlotKey>) -> Self {
        Evaluator {
            state,
            reads: Some(reads),
        }
    }

    pub fn state(&self) -> &WorldState {
        self.state
    }

    fn note(&mut self, key: SlotKey) {
        if let Some(r) = self.reads.as_deref_mut() {
            r.push(key);
        }
    }

    /// `Ok(None)` means the term dereferenced a Null entity.
    pub fn term(&mut self, t: &Term, env: &Bindings) -> Result<Option<Value>, WorldError> {
        match t {
            Term::Const(v) => Ok(Some(v.clone())),
            Term::Var(v) => env
                .get(*v)
                .cloned()
                .map(Some)
                .ok_or(WorldError::Unbound(v.0)),
            Term::Attr { base, attr } => {
                let Some(b) = self.term(base, env)? else {
                    return Ok(None);
                };
                let e = match b {
                    Value::Entity(e) => e,
                    Value::Null => return Ok(None),
                    other => return Err(WorldError::NotAnEntity(other.to_string())),
                };
                self.note(SlotKey {
                    entity: e.clone(),
                    attr: *attr,
                    member: None,
                });
                Ok(Some(self.state.atom(&e, *attr).clone()))
            }
        }
    }

    fn entity_of(&mut self, t: &Term, env: &Bindings) -> Result<Option<EntityRef>, WorldError> {
        match self.term(t, env)? {
            Some(Value::Entity(e)) => Ok(Some(e)),
            Some(Value::Null) | None => Ok(None),
            Some(other) => Err(WorldError::NotAnEntity(other.to_string())),
        }
    }

    /// Conjunction of `conds`.
    pub fn conditions(&mut self, conds: &[Cond], env: &mut Bindings) -> Result<bool, WorldError> {
        for c in conds {
            if !self.condition(c, env)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn condition(&mut self, c: &Cond, env: &mut Bindings) -> Result<bool, WorldError> {
        match c {
            Cond::Cmp { lhs, rhs, negated } => {
                let (Some(l), Some(r)) = (self.term(lhs, env)?, self.term(rhs, env)?) else {
                    return Ok(false);
                };
                Ok((l == r) != *negated)
            }
            Cond::Member {
                elem,
                base,
                attr,
                negated,
            } => {
                let Some(v) = self.term(elem, env)? else {
                    return Ok(false);
                };
                let Some(e) = self.entity_of(base, env)? else {
                    return Ok(false);
                };
                self.note(SlotKey {
                    entity: e.clone(),
                    attr: *attr,
                    member: Some(v.clone()),
                });
                Ok(self.state.contains(&e, *attr, &v) != *negated)
            }
            Cond::Exist(q) => {
                for cand in self.candidates(q) {
                    env.scoped(q.var, Some(Value::Entity(cand)));
                    let hit = self.conditions(&q.filter, env)? && self.conditions(&q.body, env)?;
                    if hit {
                        env.scoped(q.var, None);
                        return Ok(true);
                    }
                }
                env.scoped(q.var, None);
                Ok(false)
            }
            Cond::Forall(q) => {
                for cand in self.candidates(q) {
                    env.scoped(q.var, Some(Value::Entity(cand)));
                    if self.conditions(&q.filter, env)? && !self.conditions(&q.body, env)? {
                        env.scoped(q.var, None);
                        return Ok(false);
                    }
                }
                env.scoped(q.var, None);
                Ok(true)
            }
        }
    }

    fn candidates<B>(&self, q: &Quant<B>) -> Vec<EntityRef> {
        self.state.universe().of_type(q.ty).to_vec()
    }
}

/// Evaluates a condition list without tracking.
pub fn eval_conditions(
    conds: &[Cond],
    state: &WorldState,
    env: &mut Bindings,
) -> Result<bool, WorldError> {
    Evaluator::new(state).conditions(conds, env)
}

#[derive(Debug, Clone)]
enum Write {
    Assign(EntityRef, crate::world::AttrId, Value),
    Add(EntityRef, crate::world::AttrId, Value),
    Remove(EntityRef, crate::world::AttrId, Value),
}

/// Everything an effect block wrote: the key and the value it now holds
/// (`Bool(present)` for set membership).
pub type WriteLog = Vec<(SlotKey, Value)>;

/// Applies an effect list with simultaneous-update semantics: every read,
/// including IF guards and FORALL filters, sees `state`; writes land in the
/// returned snapshot in statement order. `state` itself is never modified.
pub fn apply_effects(
    effects: &[Effect],
    state: &WorldState,
    env: &mut Bindings,
) -> Result<WorldState, WorldError> {
    apply_effects_traced(effects, state, env, None, None)
}

pub fn apply_effects_traced(
    effects: &[Effect],
    state: &WorldState,
    env: &mut Bindings,
    reads: Option<&mut Vec<SlotKey>>,
    writes: Option<&mut WriteLog>,
) -> Result<WorldState, WorldError> {
    let mut pending = Vec::new();
    {
        let mut ev = Evaluator { state, reads };
        collect_writes(&mut ev, effects, env, &mut pending)?;
    }
    if pending.is_empty() {
        return Ok(state.clone());
    }
    let mut next = state.clone();
    let universe = state.universe().clone();
    let mut log = writes;
    for w in pending {
        let (e, attr) = match &w {
            Write::Assign(e, a, _) | Write::Add(e, a, _) | Write::Remove(e, a, _) => {
                (e.clone(), *a)
            }
        };
        if state.is_static_slot(&e, attr) {
            let name = &state.schema().attribute(universe.type_of(&e), attr).name;
            return Err(WorldError::StaticWrite(format!("{e}.{name}")));
        }
        let idx = universe.slot_index(&e, attr);
        let slot = &mut next.slots_mut()[idx];
        let entry = match (w, slot) {
            (Write::Assign(_, _, v), Slot::Atom(s)) => {
                *s = v.clone();
                (
                    SlotKey {
                        entity: e,
                        attr,
                        member: None,
                    },
                    v,
                )
            }
            (Write::Add(_, _, v), Slot::Set(s)) => {
                s.insert(v.clone());
                (
                    SlotKey {
                        entity: e,
                        attr,
                        member: Some(v),
                    },
                    Value::Bool(true),
                )
            }
            (Write::Remove(_, _, v), Slot::Set(s)) => {
                s.remove(&v);
                (
                    SlotKey {
                        entity: e,
                        attr,
                        member: Some(v),
                    },
                    Value::Bool(false),
                )
            }
            _ => return Err(WorldError::ArityMismatch(format!("{e}"))),
        };
        if let Some(l) = log.as_deref_mut() {
            l.push(entry);
        }
    }
    Ok(next)
}

fn target(ev: &mut Evaluator<'_>, base: &Term, env: &Bindings) -> Result<EntityRef, WorldError> {
    match ev.term(base, env)? {
        Some(Value::Entity(e)) => Ok(e),
        Some(Value::Null) | None => Err(WorldError::NullAccess),
        Some(other) => Err(WorldError::NotAnEntity(other.to_string())),
    }
}

fn value(ev: &mut Evaluator<'_>, t: &Term, env: &Bindings) -> Result<Value, WorldError> {
    ev.term(t, env)?.ok_or(WorldError::NullAccess)
}

fn collect_writes(
    ev: &mut Evaluator<'_>,
    effects: &[Effect],
    env: &mut Bindings,
    out: &mut Vec<Write>,
) -> Result<(), WorldError> {
    for e in effects {
        match e {
            Effect::Assign {
                base,
                attr,
                value: v,
            } => {
                let t = target(ev, base, env)?;
                out.push(Write::Assign(t, *attr, value(ev, v, env)?));
            }
            Effect::SetAdd {
                base,
                attr,
                value: v,
            } => {
                let t = target(ev, base, env)?;
                out.push(Write::Add(t, *attr, value(ev, v, env)?));
            }
            Effect::SetRemove {
                base,
                attr,
                value: v,
            } => {
                let t = target(ev, base, env)?;
                out.push(Write::Remove(t, *attr, value(ev, v, env)?));
            }
            Effect::If { guard, then } => {
                if ev.conditions(guard, env)? {
                    collect_writes(ev, then, env, out)?;
                }
            }
            Effect::Forall(q) => {
                for cand in ev.candidates(q) {
                    env.scoped(q.var, Some(Value::Entity(cand)));
                    if ev.conditions(&q.filter, env)? {
                        collect_writes(ev, &q.body, env, out)?;
                    }
                }
                env.scoped(q.var, None);
            }
        }
    }
    Ok(())
}
