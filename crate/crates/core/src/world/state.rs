use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use super::schema::{AttrId, Schema, TypeId, ValueType};
use super::value::{EntityRef, Value};
use super::WorldError;
use crate::dsl::ast::{Arity, AssignOp, Expr, Mutability, ProblemAst, ProblemItem};

#[derive(Debug, Clone)]
pub struct EntityDef {
    pub entity: EntityRef,
    pub ty: TypeId,
    slot_base: usize,
}

/// The fixed set of entities of one problem, shared by every state snapshot.
#[derive(Debug)]
pub struct Universe {
    schema: Arc<Schema>,
    entities: Vec<EntityDef>,
    by_name: HashMap<String, u32>,
    by_type: Vec<Vec<EntityRef>>,
    n_slots: usize,
}

impl Universe {
    pub fn new<'a, I>(schema: Arc<Schema>, entities: I) -> Result<Universe, WorldError>
    where
        I: IntoIterator<Item = (&'a str, TypeId)>,
    {
        let mut u = Universe {
            by_type: vec![Vec::new(); schema.types().count()],
            schema,
            entities: Vec::new(),
            by_name: HashMap::new(),
            n_slots: 0,
        };
        for (name, ty) in entities {
            if u.by_name.contains_key(name) {
                return Err(WorldError::DuplicateEntity(name.to_string()));
            }
            let id = u.entities.len() as u32;
            let entity = EntityRef::new(id, Arc::from(name));
            u.by_name.insert(name.to_string(), id);
            u.by_type[ty.0 as usize].push(entity.clone());
            let slot_base = u.n_slots;
            u.n_slots += u.schema.get(ty).attributes.len();
            u.entities.push(EntityDef {
                entity,
                ty,
                slot_base,
            });
        }
        Ok(u)
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn entity(&self, name: &str) -> Option<&EntityRef> {
        self.by_name
            .get(name)
            .map(|&i| &self.entities[i as usize].entity)
    }

    pub fn def(&self, e: &EntityRef) -> &EntityDef {
        &self.entities[e.id() as usize]
    }

    pub fn type_of(&self, e: &EntityRef) -> TypeId {
        self.def(e).ty
    }

    /// Entities of a type in declaration order.
    pub fn of_type(&self, ty: TypeId) -> &[EntityRef] {
        &self.by_type[ty.0 as usize]
    }

    pub fn entities(&self) -> impl Iterator<Item = &EntityDef> {
        self.entities.iter()
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub(crate) fn slot_index(&self, e: &EntityRef, attr: AttrId) -> usize {
        self.def(e).slot_base + attr.0 as usize
    }

    pub fn value_matches(&self, v: &Value, ty: ValueType) -> bool {
        match (v, ty) {
            (Value::Null, _) => true,
            (Value::Bool(_), ValueType::Bool)
            | (Value::Int(_), ValueType::Int)
            | (Value::Text(_), ValueType::Text) => true,
            (Value::Entity(e), ValueType::Entity(t)) => self.type_of(e) == t,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Slot {
    Atom(Value),
    Set(BTreeSet<Value>),
}

/// Identifies what a condition read or an effect wrote: a whole atom slot,
/// or the membership of one value in a set slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlotKey {
    pub entity: EntityRef,
    pub attr: AttrId,
    pub member: Option<Value>,
}

/// Immutable snapshot of the world. Cloning is O(1); applying effects
/// produces a new snapshot and leaves this one untouched.
#[derive(Clone)]
pub struct WorldState {
    universe: Arc<Universe>,
    slots: Arc<Vec<Slot>>,
}

impl WorldState {
    /// Every atom slot Null, every set slot empty.
    pub fn blank(universe: Arc<Universe>) -> WorldState {
        let mut slots = Vec::with_capacity(universe.n_slots);
        for def in &universe.entities {
            for a in &universe.schema.get(def.ty).attributes {
                slots.push(match a.arity {
                    Arity::Atom => Slot::Atom(Value::Null),
                    Arity::Set => Slot::Set(BTreeSet::new()),
                });
            }
        }
        WorldState {
            universe,
            slots: Arc::new(slots),
        }
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn schema(&self) -> &Schema {
        &self.universe.schema
    }

    pub fn slot(&self, e: &EntityRef, attr: AttrId) -> &Slot {
        &self.slots[self.universe.slot_index(e, attr)]
    }

    /// Value of an atom slot; Null for set slots.
    pub fn atom(&self, e: &EntityRef, attr: AttrId) -> &Value {
        match self.slot(e, attr) {
            Slot::Atom(v) => v,
            Slot::Set(_) => &Value::Null,
        }
    }

    pub fn contains(&self, e: &EntityRef, attr: AttrId, v: &Value) -> bool {
        match self.slot(e, attr) {
            Slot::Set(s) => s.contains(v),
            Slot::Atom(_) => false,
        }
    }

    /// Reads a key: the atom value, or `Bool(present)` for membership keys.
    pub fn read_key(&self, key: &SlotKey) -> Value {
        match &key.member {
            None => self.atom(&key.entity, key.attr).clone(),
            Some(v) => Value::Bool(self.contains(&key.entity, key.attr, v)),
        }
    }

    /// Looks up `Entity.attr` by names; handy in tests and reports.
    pub fn get(&self, entity: &str, attr: &str) -> Option<&Slot> {
        let e = self.universe.entity(entity)?;
        let (id, _) = self.schema().get(self.universe.type_of(e)).attr(attr)?;
        Some(self.slot(e, id))
    }

    pub(crate) fn slots_mut(&mut self) -> &mut Vec<Slot> {
        Arc::make_mut(&mut self.slots)
    }

    pub fn is_static_slot(&self, e: &EntityRef, attr: AttrId) -> bool {
        let ty = self.universe.type_of(e);
        self.schema().attribute(ty, attr).mutability == Mutability::Static
    }

    /// All `(entity, attribute, slot)` triples in declaration order.
    pub fn iter_slots(&self) -> impl Iterator<Item = (&EntityRef, AttrId, &Slot)> + '_ {
        self.universe.entities.iter().flat_map(move |def| {
            let n = self.schema().get(def.ty).attributes.len();
            (0..n).map(move |i| {
                (
                    &def.entity,
                    AttrId(i as u32),
                    &self.slots[def.slot_base + i],
                )
            })
        })
    }

    /// Deterministic text form, used for isolation checks and debugging.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (e, attr, slot) in self.iter_slots() {
            let name = &self.schema().attribute(self.universe.type_of(e), attr).name;
            match slot {
                Slot::Atom(v) => out.push_str(&format!("{e}.{name} = {v}\n")),
                Slot::Set(s) => {
                    let items: Vec<String> = s.iter().map(|v| v.to_string()).collect();
                    out.push_str(&format!("{e}.{name} = {{{}}}\n", items.join(", ")));
                }
            }
        }
        out
    }
}

impl PartialEq for WorldState {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.universe, &other.universe) && self.slots == other.slots
    }
}

impl fmt::Debug for WorldState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// Builds the initial state of a parsed problem. Unassigned atoms are Null,
/// unassigned sets empty. Atom assignments are last-write-wins, except that a
/// static atom may be assigned at most once.
pub fn init_state(schema: Arc<Schema>, problem: &ProblemAst) -> Result<WorldState, WorldError> {
    let mut entities = Vec::new();
    for (name, ty) in problem.entities() {
        let id = schema
            .type_id(&ty.name)
            .ok_or_else(|| WorldError::UnknownType(ty.name.clone()))?;
        entities.push((name.name.as_str(), id));
    }
    let universe = Arc::new(Universe::new(schema, entities)?);
    let mut state = WorldState::blank(universe.clone());
    let mut static_assigned = std::collections::HashSet::new();
    for item in &problem.items {
        let ProblemItem::Assign {
            entity,
            attr,
            op,
            value,
        } = item
        else {
            continue;
        };
        let e = universe
            .entity(&entity.name)
            .ok_or_else(|| WorldError::UnknownEntity(entity.name.clone()))?
            .clone();
        let ty = universe.type_of(&e);
        let (attr_id, def) =
            universe.schema().get(ty).attr(&attr.name).ok_or_else(|| {
                WorldError::UnknownAttribute(entity.name.clone(), attr.name.clone())
            })?;
        let v = literal_value(&universe, value)?;
        if !universe.value_matches(&v, def.value_type) {
            return Err(WorldError::TypeMismatch {
                slot: format!("{}.{}", entity.name, attr.name),
                value: v.to_string(),
            });
        }
        if def.mutability == Mutability::Static
            && def.arity == Arity::Atom
            && !static_assigned.insert((e.id(), attr_id))
        {
            return Err(WorldError::StaticReassigned(format!(
                "{}.{}",
                entity.name, attr.name
            )));
        }
        let idx = universe.slot_index(&e, attr_id);
        match (&mut state.slots_mut()[idx], op) {
            (Slot::Atom(slot), AssignOp::Set) => *slot = v,
            (Slot::Set(set), AssignOp::Add) => {
                set.insert(v);
            }
            (Slot::Set(set), AssignOp::Remove) => {
                set.remove(&v);
            }
            _ => {
                return Err(WorldError::ArityMismatch(format!(
                    "{}.{}",
                    entity.name, attr.name
                )))
            }
        }
    }
    Ok(state)
}

pub(crate) fn literal_value(universe: &Universe, e: &Expr) -> Result<Value, WorldError> {
    Ok(match e {
        Expr::Null(_) => Value::Null,
        Expr::Bool(b, _) => Value::Bool(*b),
        Expr::Int(n, _) => Value::Int(*n),
        Expr::Str(s, _) => Value::text(s),
        Expr::Name(id) => Value::Entity(
            universe
                .entity(&id.name)
                .ok_or_else(|| WorldError::UnknownEntity(id.name.clone()))?
                .clone(),
        ),
        Expr::Attr { base, attr } => {
            return Err(WorldError::NotALiteral(format!(
                "{}.{}",
                base.name, attr.name
            )));
        }
    })
}
