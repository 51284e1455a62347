//! Resolved form of a domain: variables are frame slots, attributes are
//! indices, entity names are values, and task names point at operators or
//! method groups.

mod compile;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

pub use compile::{compile, compile_goal, external_references, ExternalRef};

use crate::dsl::ast::{Direction, SelectKind};
use crate::world::{AttrId, TypeId, Universe, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u16);

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Var(VarId),
    Const(Value),
    /// `base.attr`; `base` is entity-typed.
    Attr {
        base: Box<Term>,
        attr: AttrId,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quant<B> {
    pub var: VarId,
    pub ty: TypeId,
    pub filter: Vec<Cond>,
    pub body: Vec<B>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cond {
    Cmp {
        lhs: Term,
        rhs: Term,
        negated: bool,
    },
    Member {
        elem: Term,
        base: Term,
        attr: AttrId,
        negated: bool,
    },
    Exist(Quant<Cond>),
    Forall(Quant<Cond>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Effect {
    Assign {
        base: Term,
        attr: AttrId,
        value: Term,
    },
    SetAdd {
        base: Term,
        attr: AttrId,
        value: Term,
    },
    SetRemove {
        base: Term,
        attr: AttrId,
        value: Term,
    },
    If {
        guard: Vec<Cond>,
        then: Vec<Effect>,
    },
    Forall(Quant<Effect>),
}

/// Reference to an external function with argument terms.
#[derive(Debug, Clone, PartialEq)]
pub struct FnCall {
    pub name: String,
    pub args: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDef {
    pub name: String,
    pub ty: TypeId,
}

#[derive(Debug, Clone)]
pub struct Operator {
    pub name: String,
    pub params: Vec<ParamDef>,
    pub var_names: Vec<String>,
    pub pre: Vec<Cond>,
    /// Evaluable predicates, checked after the symbolic precondition.
    pub predicates: Vec<FnCall>,
    pub effects: Vec<Effect>,
    pub cost: Option<FnCall>,
    pub duration: Option<FnCall>,
}

impl Operator {
    pub fn n_vars(&self) -> usize {
        self.var_names.len()
    }

    /// Parameter positions (other than the first) typed `Agent`.
    pub fn co_agent_params(&self) -> impl Iterator<Item = usize> + '_ {
        self.params
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, p)| p.ty == TypeId::AGENT)
            .map(|(i, _)| i)
    }
}

#[derive(Debug, Clone)]
pub struct Selector {
    pub var: VarId,
    pub ty: TypeId,
    pub kind: SelectKind,
    pub filter: Vec<Cond>,
    pub ordering: Option<FnCall>,
    pub direction: Option<Direction>,
}

#[derive(Debug, Clone)]
pub struct Subtask {
    pub label: u32,
    pub task: TaskRef,
    pub args: Vec<Term>,
    pub predecessors: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct Case {
    pub pre: Vec<Cond>,
    pub predicates: Vec<FnCall>,
    pub selectors: Vec<Selector>,
    pub subtasks: Vec<Subtask>,
    /// Every total order of `subtasks` (as indices) that respects the
    /// predecessor relation, in lexicographic label order.
    pub orders: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct Method {
    pub name: String,
    pub params: Vec<ParamDef>,
    pub var_names: Vec<String>,
    pub empty: Option<Vec<Cond>>,
    pub cases: Vec<Case>,
}

impl Method {
    pub fn n_vars(&self) -> usize {
        self.var_names.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskRef {
    Primitive(usize),
    Compound(usize),
}

/// An abstract task name with all methods that decompose it.
#[derive(Debug, Clone)]
pub struct CompoundTask {
    pub name: String,
    pub params: Vec<ParamDef>,
    pub methods: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DomainModel {
    pub universe: Arc<Universe>,
    pub operators: Vec<Operator>,
    pub methods: Vec<Method>,
    pub compounds: Vec<CompoundTask>,
    pub tasks: HashMap<String, TaskRef>,
}

impl DomainModel {
    pub fn operator(&self, name: &str) -> Option<(usize, &Operator)> {
        match self.tasks.get(name) {
            Some(TaskRef::Primitive(i)) => Some((*i, &self.operators[*i])),
            _ => None,
        }
    }

    pub fn task_name(&self, t: TaskRef) -> &str {
        match t {
            TaskRef::Primitive(i) => &self.operators[i].name,
            TaskRef::Compound(i) => &self.compounds[i].name,
        }
    }

    pub fn task_params(&self, t: TaskRef) -> &[ParamDef] {
        match t {
            TaskRef::Primitive(i) => &self.operators[i].params,
            TaskRef::Compound(i) => &self.compounds[i].params,
        }
    }
}

/// A task with ground arguments.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundTask {
    pub task: TaskRef,
    pub args: Vec<Value>,
}

/// The ordered list of pending tasks; processed strictly left to right.
pub type TaskNetwork = Vec<GroundTask>;

pub struct DisplayTask<'a>(pub &'a DomainModel, pub &'a GroundTask);

impl fmt::Display for DisplayTask<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.1.args.iter().map(|a| a.to_string()).collect();
        write!(f, "{}({})", self.0.task_name(self.1.task), args.join(","))
    }
}
