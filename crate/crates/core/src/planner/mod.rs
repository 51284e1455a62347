//! Total-order HTN decomposition with branch-and-bound.

mod linearize;
mod replay;
mod search;

use std::collections::BTreeMap;
use std::fmt;

pub use linearize::{linearizations, OrderError};
pub use replay::{execute_step, replay_validate, ReplayFailure, ReplayMode, StepTrace};
pub use search::{plan, Planner, SearchNode};

use crate::registry::{Attachment, ExternError};
use crate::scalar::Scalar;
use crate::world::{Value, WorldError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// First plan in depth-first order.
    FirstSolution,
    /// Least total cost, by branch-and-bound.
    Optimal,
    /// Every distinct plan, up to a limit.
    AllSolutions(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub mode: SearchMode,
    /// Longest decomposition path explored.
    pub max_depth: usize,
    /// Search stops after expanding this many nodes.
    pub max_nodes: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            mode: SearchMode::FirstSolution,
            max_depth: 10_000,
            max_nodes: 1_000_000,
        }
    }
}

impl SearchOptions {
    pub fn with_mode(mode: SearchMode) -> Self {
        SearchOptions {
            mode,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchStatistics {
    pub nodes_expanded: u64,
    /// Dead ends: nodes whose head task admits no decomposition.
    pub backtracks: u64,
    pub linearizations_generated: u64,
    /// Nodes cut by the cost bound.
    pub pruned: u64,
    pub external_calls: u64,
    /// External calls per `Task/predicate` site.
    pub external_calls_by_site: BTreeMap<String, u64>,
}

impl SearchStatistics {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "nodesExpanded": self.nodes_expanded,
            "backtracks": self.backtracks,
            "linearizationsGenerated": self.linearizations_generated,
            "pruned": self.pruned,
            "externalCalls": self.external_calls,
            "externalCallsBySite": self.external_calls_by_site,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanStep<C> {
    pub index: usize,
    pub action: String,
    pub args: Vec<Value>,
    pub cost: C,
    /// Value of the action's duration function, if it has one.
    pub duration: Option<C>,
    pub attachment: Option<Attachment>,
}

impl<C: Scalar> PlanStep<C> {
    pub fn to_json(&self) -> serde_json::Value {
        let mut o = serde_json::json!({
            "index": self.index,
            "action": self.action,
            "args": self.args.iter().map(Value::to_json).collect::<Vec<_>>(),
            "cost": self.cost.to_json(),
        });
        if let Some(d) = &self.duration {
            o["duration"] = d.to_json();
        }
        if let Some(a) = &self.attachment {
            o["attachment"] = a.to_json();
        }
        o
    }
}

impl<C> fmt::Display for PlanStep<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
        write!(f, "{}({})", self.action, args.join(","))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan<C> {
    pub steps: Vec<PlanStep<C>>,
    pub total_cost: C,
}

impl<C: Scalar> Plan<C> {
    pub fn new(steps: Vec<PlanStep<C>>) -> Self {
        let total_cost = crate::scalar::sum(steps.iter().map(|s| s.cost.clone()));
        Plan { steps, total_cost }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn to_json(&self, stats: &SearchStatistics) -> serde_json::Value {
        serde_json::json!({
            "steps": self.steps.iter().map(PlanStep::to_json).collect::<Vec<_>>(),
            "totalCost": self.total_cost.to_json(),
            "stats": stats.to_json(),
        })
    }

    /// Signature used to tell plans apart: actions, arguments, attachments.
    pub fn signature(&self) -> Vec<String> {
        self.steps
            .iter()
            .map(|s| match &s.attachment {
                Some(a) => format!("{s}@{}#{}", a.predicate, a.index),
                None => s.to_string(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult<C> {
    pub plans: Vec<Plan<C>>,
    pub stats: SearchStatistics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoSolution {
    /// The whole search space was explored.
    Exhausted,
    /// A depth or node limit cut the search short.
    LimitHit,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("{}", match .reason {
        NoSolution::Exhausted => "no solution (search exhausted)",
        NoSolution::LimitHit => "no solution found within the search limits",
    })]
    NoSolution {
        reason: NoSolution,
        stats: SearchStatistics,
    },
    #[error("undefined task `{0}`")]
    UndefinedTask(String),
    #[error(transparent)]
    Extern(#[from] ExternError),
    #[error(transparent)]
    World(#[from] WorldError),
}

impl From<crate::world::SelectError> for PlanError {
    fn from(e: crate::world::SelectError) -> Self {
        match e {
            crate::world::SelectError::World(w) => PlanError::World(w),
            crate::world::SelectError::Extern(x) => PlanError::Extern(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Continue,
    Prune,
}

/// Branch-and-bound test before adding an action: prune when the extended
/// partial plan cannot be strictly cheaper than the best plan so far.
pub fn bound_check<C: Scalar>(mode: SearchMode, partial: &C, next: &C, best: Option<&C>) -> Bound {
    match (mode, best) {
        (SearchMode::Optimal, Some(b)) if partial.clone() + next.clone() >= *b => Bound::Prune,
        _ => Bound::Continue,
    }
}
