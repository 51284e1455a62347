use std::collections::HashMap;

use crate::dsl::ast::{Arity, DomainAst, Mutability};
use crate::dsl::Diagnostic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeId(pub u32);

impl TypeId {
    pub const AGENT: TypeId = TypeId(0);
}

/// Index of an attribute within its entity type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttrId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueType {
    Bool,
    Int,
    Text,
    Entity(TypeId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeDef {
    pub name: String,
    pub mutability: Mutability,
    pub arity: Arity,
    pub value_type: ValueType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityTypeDef {
    pub name: String,
    pub attributes: Vec<AttributeDef>,
}

impl EntityTypeDef {
    pub fn attr(&self, name: &str) -> Option<(AttrId, &AttributeDef)> {
        self.attributes
            .iter()
            .enumerate()
            .find(|(_, a)| a.name == name)
            .map(|(i, a)| (AttrId(i as u32), a))
    }
}

/// Resolved entity types of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    types: Vec<EntityTypeDef>,
    by_name: HashMap<String, TypeId>,
}

impl Schema {
    pub fn from_ast(ast: &DomainAst) -> Result<Schema, Diagnostic> {
        let decls = ast.entity_types();
        let by_name: HashMap<String, TypeId> = decls
            .iter()
            .enumerate()
            .map(|(i, t)| (t.name.clone(), TypeId(i as u32)))
            .collect();
        let mut types = Vec::with_capacity(decls.len());
        for t in decls {
            let mut attributes = Vec::new();
            for a in t.attributes {
                let value_type = match a.value_type.name.as_str() {
                    "bool" => ValueType::Bool,
                    "int" => ValueType::Int,
                    "string" => ValueType::Text,
                    other => match by_name.get(other) {
                        Some(id) => ValueType::Entity(*id),
                        None => {
                            return Err(Diagnostic::error(
                                a.value_type.span,
                                format!("unknown type `{other}`"),
                            ))
                        }
                    },
                };
                attributes.push(AttributeDef {
                    name: a.name.name,
                    mutability: a.mutability,
                    arity: a.arity,
                    value_type,
                });
            }
            types.push(EntityTypeDef {
                name: t.name,
                attributes,
            });
        }
        Ok(Schema { types, by_name })
    }

    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, id: TypeId) -> &EntityTypeDef {
        &self.types[id.0 as usize]
    }

    pub fn attribute(&self, ty: TypeId, attr: AttrId) -> &AttributeDef {
        &self.get(ty).attributes[attr.0 as usize]
    }

    pub fn types(&self) -> impl Iterator<Item = (TypeId, &EntityTypeDef)> {
        self.types
            .iter()
            .enumerate()
            .map(|(i, t)| (TypeId(i as u32), t))
    }

    pub fn type_name(&self, ty: ValueType) -> String {
        match ty {
            ValueType::Bool => "bool".into(),
            ValueType::Int => "int".into(),
            ValueType::Text => "string".into(),
            ValueType::Entity(id) => self.get(id).name.clone(),
        }
    }
}
