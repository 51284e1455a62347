//! External functions: cost, duration and ordering functions, evaluable
//! predicates, and table-backed implementations declared in problem files.
//!
//! A registry is built before search and only read afterwards, so it can be
//! shared by any number of concurrent searches.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use base64::Engine;

use crate::dsl::ast::ProblemAst;
use crate::scalar::{Rational, Scalar};
use crate::world::{state::literal_value, Universe, Value, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FunctionKind {
    Cost,
    Duration,
    Ordering,
    Evaluable,
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FunctionKind::Cost => "cost function",
            FunctionKind::Duration => "duration function",
            FunctionKind::Ordering => "ordering function",
            FunctionKind::Evaluable => "evaluable predicate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExternError {
    #[error("{kind} `{name}` is not registered")]
    Unregistered { kind: FunctionKind, name: String },
    #[error("{kind} `{name}` is already registered")]
    Duplicate { kind: FunctionKind, name: String },
    #[error("{kind} `{name}` returned {value}; values must be finite and non-negative")]
    Inadmissible {
        kind: FunctionKind,
        name: String,
        value: String,
    },
    #[error("table `{table}` has no entry for ({key}) and no default")]
    MissingKey { table: String, key: String },
    #[error("table `{table}` takes {expected} arguments, {found} given")]
    Arity {
        table: String,
        expected: usize,
        found: usize,
    },
    #[error("table `{table}` value {value} is not representable")]
    NotRepresentable { table: String, value: String },
    #[error("`{name}` failed: {message}")]
    Failed { name: String, message: String },
}

/// Solution produced by an evaluable predicate and stored on a plan step.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Attachment {
    pub predicate: String,
    pub index: usize,
    pub payload: Vec<u8>,
}

impl Attachment {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "predicate": self.predicate,
            "index": self.index,
            "payload": base64::engine::general_purpose::STANDARD.encode(&self.payload),
        })
    }
}

/// One question to an evaluable predicate: the `index`-th solution for
/// `args` in `state`. `history` holds the attachments of earlier plan steps,
/// so that a solver can model geometric consequences of earlier choices.
pub struct PredicateQuery<'a> {
    pub state: &'a WorldState,
    pub args: &'a [Value],
    pub index: usize,
    pub history: &'a [Attachment],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredicateOutcome {
    Solution(Vec<u8>),
    /// No solution with this or any higher index.
    NoMoreSolutions,
}

pub type NumericFn<C> = Arc<dyn Fn(&WorldState, &[Value]) -> Result<C, ExternError> + Send + Sync>;
pub type PredicateFn = Arc<dyn Fn(&PredicateQuery<'_>) -> PredicateOutcome + Send + Sync>;

/// `name(T1, ..., Tn)` mapping value tuples to rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub name: String,
    pub arity: usize,
    pub entries: BTreeMap<Vec<Value>, Rational>,
    pub default: Option<Rational>,
}

impl NumericTable {
    pub fn lookup(&self, args: &[Value]) -> Result<Rational, ExternError> {
        if args.len() != self.arity {
            return Err(ExternError::Arity {
                table: self.name.clone(),
                expected: self.arity,
                found: args.len(),
            });
        }
        self.entries
            .get(args)
            .or(self.default.as_ref())
            .copied()
            .ok_or_else(|| ExternError::MissingKey {
                table: self.name.clone(),
                key: args
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            })
    }
}

/// Named external functions, generic over the cost scalar.
pub struct Registry<C> {
    numeric: BTreeMap<(FunctionKind, String), NumericFn<C>>,
    predicates: BTreeMap<String, PredicateFn>,
    tables: BTreeMap<String, NumericTable>,
}

impl<C> Clone for Registry<C> {
    fn clone(&self) -> Self {
        Registry {
            numeric: self.numeric.clone(),
            predicates: self.predicates.clone(),
            tables: self.tables.clone(),
        }
    }
}

impl<C: Scalar> Default for Registry<C> {
    fn default() -> Self {
        Self::new()
    }
}

impl<C: Scalar> Registry<C> {
    /// A registry holding the builtins `const_0` and `const_1`, usable as
    /// cost, duration or ordering function.
    pub fn new() -> Self {
        let mut r = Registry {
            numeric: BTreeMap::new(),
            predicates: BTreeMap::new(),
            tables: BTreeMap::new(),
        };
        for kind in [
            FunctionKind::Cost,
            FunctionKind::Duration,
            FunctionKind::Ordering,
        ] {
            r.numeric.insert(
                (kind, "const_0".into()),
                Arc::new(|_: &WorldState, _: &[Value]| Ok(C::zero())),
            );
            r.numeric.insert(
                (kind, "const_1".into()),
                Arc::new(|_: &WorldState, _: &[Value]| Ok(C::one())),
            );
        }
        r
    }

    /// Registers a cost, duration or ordering function.
    pub fn register<F>(&mut self, name: &str, kind: FunctionKind, f: F) -> Result<(), ExternError>
    where
        F: Fn(&WorldState, &[Value]) -> Result<C, ExternError> + Send + Sync + 'static,
    {
        if kind == FunctionKind::Evaluable {
            return Err(ExternError::Failed {
                name: name.into(),
                message: "evaluable predicates are registered with `register_predicate`".into(),
            });
        }
        let key = (kind, name.to_string());
        if self.numeric.contains_key(&key) || self.tables.contains_key(name) {
            return Err(ExternError::Duplicate {
                kind,
                name: name.into(),
            });
        }
        self.numeric.insert(key, Arc::new(f));
        Ok(())
    }

    /// Registers an evaluable predicate. The solver is asked for one
    /// solution index at a time.
    pub fn register_predicate<F>(&mut self, name: &str, solver: F) -> Result<(), ExternError>
    where
        F: Fn(&PredicateQuery<'_>) -> PredicateOutcome + Send + Sync + 'static,
    {
        if self.predicates.contains_key(name) || self.tables.contains_key(name) {
            return Err(ExternError::Duplicate {
                kind: FunctionKind::Evaluable,
                name: name.into(),
            });
        }
        self.predicates.insert(name.to_string(), Arc::new(solver));
        Ok(())
    }

    /// Registers a table; it serves every function kind under its name.
    /// As an evaluable predicate, an entry `n` means solutions `0..n`.
    pub fn register_table(&mut self, table: NumericTable) -> Result<(), ExternError> {
        let taken = self.tables.contains_key(&table.name)
            || self.predicates.contains_key(&table.name)
            || self.numeric.keys().any(|(_, n)| *n == table.name);
        if taken {
            return Err(ExternError::Duplicate {
                kind: FunctionKind::Cost,
                name: table.name,
            });
        }
        self.tables.insert(table.name.clone(), table);
        Ok(())
    }

    /// Registers every `table` declared in a problem file.
    pub fn register_problem_tables(
        &mut self,
        problem: &ProblemAst,
        universe: &Universe,
    ) -> Result<(), ExternError> {
        for t in problem.tables() {
            let mut entries = BTreeMap::new();
            for e in &t.entries {
                let key = e
                    .key
                    .iter()
                    .map(|k| literal_value(universe, k))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|err| ExternError::Failed {
                        name: t.name.name.clone(),
                        message: err.to_string(),
                    })?;
                entries.insert(key, e.value);
            }
            self.register_table(NumericTable {
                name: t.name.name.clone(),
                arity: t.key_types.len(),
                entries,
                default: t.default,
            })?;
        }
        Ok(())
    }

    pub fn table(&self, name: &str) -> Option<&NumericTable> {
        self.tables.get(name)
    }

    /// True if `name` resolves for `kind`.
    pub fn resolves(&self, kind: FunctionKind, name: &str) -> bool {
        self.tables.contains_key(name)
            || match kind {
                FunctionKind::Evaluable => self.predicates.contains_key(name),
                _ => self.numeric.contains_key(&(kind, name.to_string())),
            }
    }

    fn numeric(
        &self,
        kind: FunctionKind,
        name: &str,
        state: &WorldState,
        args: &[Value],
    ) -> Result<C, ExternError> {
        if let Some(f) = self.numeric.get(&(kind, name.to_string())) {
            return f(state, args);
        }
        if let Some(t) = self.tables.get(name) {
            let r = t.lookup(args)?;
            return C::from_rational(&r).ok_or_else(|| ExternError::NotRepresentable {
                table: name.into(),
                value: r.to_string(),
            });
        }
        Err(ExternError::Unregistered {
            kind,
            name: name.into(),
        })
    }

    fn admissible(
        &self,
        kind: FunctionKind,
        name: &str,
        state: &WorldState,
        args: &[Value],
    ) -> Result<C, ExternError> {
        let v = self.numeric(kind, name, state, args)?;
        if v.is_admissible() {
            Ok(v)
        } else {
            Err(ExternError::Inadmissible {
                kind,
                name: name.into(),
                value: v.to_string(),
            })
        }
    }

    /// Cost of an action instance; negative or non-finite values are errors.
    pub fn eval_cost(
        &self,
        name: &str,
        state: &WorldState,
        args: &[Value],
    ) -> Result<C, ExternError> {
        self.admissible(FunctionKind::Cost, name, state, args)
    }

    pub fn eval_duration(
        &self,
        name: &str,
        state: &WorldState,
        args: &[Value],
    ) -> Result<C, ExternError> {
        self.admissible(FunctionKind::Duration, name, state, args)
    }

    /// Sort key of one selector candidate.
    pub fn eval_ordering(
        &self,
        name: &str,
        state: &WorldState,
        args: &[Value],
    ) -> Result<C, ExternError> {
        self.numeric(FunctionKind::Ordering, name, state, args)
    }

    /// Asks for the solution with index `query.index`. Returns the
    /// attachment, or `None` once solutions are exhausted.
    pub fn eval_predicate(
        &self,
        name: &str,
        query: &PredicateQuery<'_>,
    ) -> Result<Option<Attachment>, ExternError> {
        let outcome = if let Some(p) = self.predicates.get(name) {
            p(query)
        } else if let Some(t) = self.tables.get(name) {
            let n = t.lookup(query.args)?;
            if (query.index as i64) < n.floor().to_integer() {
                PredicateOutcome::Solution(format!("{name}#{}", query.index).into_bytes())
            } else {
                PredicateOutcome::NoMoreSolutions
            }
        } else {
            return Err(ExternError::Unregistered {
                kind: FunctionKind::Evaluable,
                name: name.into(),
            });
        };
        Ok(match outcome {
            PredicateOutcome::Solution(payload) => Some(Attachment {
                predicate: name.to_string(),
                index: query.index,
                payload,
            }),
            PredicateOutcome::NoMoreSolutions => None,
        })
    }
}

/// Evaluable predicate with a fixed list of canned payloads.
pub fn canned_solutions(
    payloads: Vec<Vec<u8>>,
) -> impl Fn(&PredicateQuery<'_>) -> PredicateOutcome + Send + Sync {
    move |q| match payloads.get(q.index) {
        Some(p) => PredicateOutcome::Solution(p.clone()),
        None => PredicateOutcome::NoMoreSolutions,
    }
}
