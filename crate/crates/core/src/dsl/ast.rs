//! Syntax trees for domain (`.hatp`) and problem (`.hatpp`) files.
//!
//! Nodes keep the source position of their first token. [`Span`] equality
//! is always true so that two trees compare structurally regardless of
//! where they were parsed from.

use std::fmt;

use crate::scalar::Rational;

#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Ident {
            name: name.into(),
            span: Span::default(),
        }
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Mutability {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Arity {
    Atom,
    Set,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeDecl {
    pub name: Ident,
    pub mutability: Mutability,
    pub arity: Arity,
    /// `bool`, `int`, `string` or an entity type name.
    pub value_type: Ident,
}

/// Entity type with its attributes, as seen after merging all
/// `define` items for that type.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityTypeDecl {
    pub name: String,
    pub attributes: Vec<AttributeDecl>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub ty: Ident,
    pub name: Ident,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// A variable or an entity constant; resolved during validation.
    Name(Ident),
    Attr {
        base: Ident,
        attr: Ident,
    },
    Str(String, Span),
    Int(i64, Span),
    Bool(bool, Span),
    Null(Span),
}

impl Expr {
    pub fn span(&self) -> Span {
        match self {
            Expr::Name(id) => id.span,
            Expr::Attr { base, .. } => base.span,
            Expr::Str(_, s) | Expr::Int(_, s) | Expr::Bool(_, s) | Expr::Null(s) => *s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Call {
    pub name: Ident,
    pub args: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantified<B> {
    pub ty: Ident,
    pub var: Ident,
    pub filter: Vec<Condition>,
    pub body: Vec<B>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    Compare {
        lhs: Expr,
        op: CmpOp,
        rhs: Expr,
    },
    /// `elem >> set` or `elem !>> set`.
    Member {
        elem: Expr,
        set: Expr,
        negated: bool,
    },
    Exist(Quantified<Condition>),
    Forall(Quantified<Condition>),
    /// Evaluable predicate backed by an external procedure.
    Call(Call),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetOp {
    Add,
    Remove,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Effect {
    Assign {
        target: Expr,
        value: Expr,
    },
    Set {
        target: Expr,
        op: SetOp,
        value: Expr,
    },
    If {
        guard: Vec<Condition>,
        then: Vec<Effect>,
        span: Span,
    },
    Forall(Quantified<Effect>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SelectKind {
    Select,
    SelectOrdered,
    SelectOnce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Direction {
    Ascending,
    Descending,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorDecl {
    pub var: Ident,
    pub kind: SelectKind,
    pub entity_type: Ident,
    pub filter: Vec<Condition>,
    pub ordering: Option<Call>,
    pub direction: Option<Direction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskInvocation {
    pub name: Ident,
    pub args: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubtaskDecl {
    pub label: u32,
    pub task: TaskInvocation,
    pub predecessors: Vec<u32>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MethodBody {
    pub selectors: Vec<SelectorDecl>,
    pub subtasks: Vec<SubtaskDecl>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodCase {
    pub preconditions: Vec<Condition>,
    pub body: MethodBody,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodDecl {
    pub name: Ident,
    pub params: Vec<Param>,
    pub empty: Option<Vec<Condition>>,
    pub cases: Vec<MethodCase>,
}

impl MethodDecl {
    /// Methods decompose the task that carries their own name.
    pub fn task_name(&self) -> &str {
        &self.name.name
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorDecl {
    pub name: Ident,
    pub params: Vec<Param>,
    pub preconditions: Vec<Condition>,
    pub effects: Vec<Effect>,
    pub cost: Option<Call>,
    pub duration: Option<Call>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainItem {
    EntityTypes(Vec<Ident>),
    Attributes {
        entity: Ident,
        attributes: Vec<AttributeDecl>,
    },
    Method(MethodDecl),
    Operator(OperatorDecl),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DomainAst {
    pub items: Vec<DomainItem>,
}

pub const AGENT: &str = "Agent";

impl DomainAst {
    /// All entity types in declaration order; `Agent` always comes first.
    pub fn entity_types(&self) -> Vec<EntityTypeDecl> {
        let mut out = vec![EntityTypeDecl {
            name: AGENT.to_string(),
            attributes: Vec::new(),
        }];
        for item in &self.items {
            match item {
                DomainItem::EntityTypes(names) => {
                    for n in names {
                        if !out.iter().any(|t| t.name == n.name) {
                            out.push(EntityTypeDecl {
                                name: n.name.clone(),
                                attributes: Vec::new(),
                            });
                        }
                    }
                }
                DomainItem::Attributes { entity, attributes } => {
                    if let Some(t) = out.iter_mut().find(|t| t.name == entity.name) {
                        t.attributes.extend(attributes.iter().cloned());
                    }
                }
                _ => {}
            }
        }
        out
    }

    pub fn methods(&self) -> impl Iterator<Item = &MethodDecl> {
        self.items.iter().filter_map(|i| match i {
            DomainItem::Method(m) => Some(m),
            _ => None,
        })
    }

    pub fn operators(&self) -> impl Iterator<Item = &OperatorDecl> {
        self.items.iter().filter_map(|i| match i {
            DomainItem::Operator(o) => Some(o),
            _ => None,
        })
    }

    pub fn operator(&self, name: &str) -> Option<&OperatorDecl> {
        self.operators().find(|o| o.name.name == name)
    }

    pub fn methods_for<'a>(&'a self, task: &'a str) -> impl Iterator<Item = &'a MethodDecl> + 'a {
        self.methods().filter(move |m| m.task_name() == task)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    pub key: Vec<Expr>,
    pub value: Rational,
}

/// `table name(T1, T2) { (a, b) = 5; default = 100; }`
#[derive(Debug, Clone, PartialEq)]
pub struct TableDecl {
    pub name: Ident,
    pub key_types: Vec<Ident>,
    pub entries: Vec<TableEntry>,
    pub default: Option<Rational>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignOp {
    Set,
    Add,
    Remove,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemItem {
    New {
        names: Vec<Ident>,
        ty: Ident,
    },
    Assign {
        entity: Ident,
        attr: Ident,
        op: AssignOp,
        value: Expr,
    },
    Table(TableDecl),
    Goal(Vec<TaskInvocation>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProblemAst {
    pub items: Vec<ProblemItem>,
}

impl ProblemAst {
    /// `(name, type)` for every instantiated entity, in declaration order.
    pub fn entities(&self) -> Vec<(&Ident, &Ident)> {
        self.items
            .iter()
            .filter_map(|i| match i {
                ProblemItem::New { names, ty } => Some(names.iter().map(move |n| (n, ty))),
                _ => None,
            })
            .flatten()
            .collect()
    }

    pub fn tables(&self) -> impl Iterator<Item = &TableDecl> {
        self.items.iter().filter_map(|i| match i {
            ProblemItem::Table(t) => Some(t),
            _ => None,
        })
    }

    /// Concatenation of every `goal` block.
    pub fn goal(&self) -> Vec<TaskInvocation> {
        self.items
            .iter()
            .filter_map(|i| match i {
                ProblemItem::Goal(g) => Some(g.iter().cloned()),
                _ => None,
            })
            .flatten()
            .collect()
    }
}
