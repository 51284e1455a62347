//! Typed entity/attribute world model.

pub mod classical;
pub mod eval;
mod schema;
mod select;
pub(crate) mod state;
mod value;

pub use classical::{classical_json, classical_text, to_classical_atoms};
pub use eval::{
    apply_effects, apply_effects_traced, eval_conditions, Bindings, Evaluator, WriteLog,
};
pub use schema::{AttrId, AttributeDef, EntityTypeDef, Schema, TypeId, ValueType};
pub use select::{enumerate_bindings, SelectError};
pub use state::{init_state, EntityDef, Slot, SlotKey, Universe, WorldState};
pub use value::{EntityRef, Value};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("entity `{0}` has no attribute `{1}`")]
    UnknownAttribute(String, String),
    #[error("type mismatch: `{slot}` cannot hold {value}")]
    TypeMismatch { slot: String, value: String },
    #[error("static attribute `{0}` assigned twice")]
    StaticReassigned(String),
    #[error("write to static attribute `{0}`")]
    StaticWrite(String),
    #[error("wrong assignment operator for `{0}`")]
    ArityMismatch(String),
    #[error("`{0}` is not a literal value")]
    NotALiteral(String),
    #[error("entity `{0}` declared twice")]
    DuplicateEntity(String),
    #[error("`{0}` is not an entity")]
    NotAnEntity(String),
    #[error("attribute access on NULL inside an effect")]
    NullAccess,
    #[error("variable #{0} is unbound")]
    Unbound(u16),
    #[error("variable #{0} bound twice")]
    Rebound(u16),
}
