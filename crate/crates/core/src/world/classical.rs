//! Mapping of an object-oriented state onto classical ground atoms under a
//! closed-world reading.

use std::collections::BTreeSet;

use super::state::{Slot, WorldState};
use super::value::Value;

/// `E.a = v` becomes `a(E,v)`, `E.a = true` becomes `a(E)`, false and Null
/// produce nothing, and every member `v` of a set slot becomes `a(E,v)`.
/// Strings keep their quotes so they cannot collide with entity names.
pub fn to_classical_atoms(state: &WorldState) -> BTreeSet<String> {
    let mut atoms = BTreeSet::new();
    for (e, attr, slot) in state.iter_slots() {
        let name = &state
            .schema()
            .attribute(state.universe().type_of(e), attr)
            .name;
        match slot {
            Slot::Atom(Value::Null) | Slot::Atom(Value::Bool(false)) => {}
            Slot::Atom(Value::Bool(true)) => {
                atoms.insert(format!("{name}({e})"));
            }
            Slot::Atom(v) => {
                atoms.insert(format!("{name}({e},{v})"));
            }
            Slot::Set(members) => {
                for v in members {
                    atoms.insert(format!("{name}({e},{v})"));
                }
            }
        }
    }
    atoms
}

/// One atom per line, sorted.
pub fn classical_text(state: &WorldState) -> String {
    let mut out = String::new();
    for a in to_classical_atoms(state) {
        out.push_str(&a);
        out.push('\n');
    }
    out
}

pub fn classical_json(state: &WorldState) -> serde_json::Value {
    serde_json::json!({ "atoms": to_classical_atoms(state).into_iter().collect::<Vec<_>>() })
}
