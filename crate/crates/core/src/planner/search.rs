use std::collections::HashSet;
use std::sync::Arc;

use super::*;
use crate::domain::{Case, DomainModel, FnCall, GroundTask, Method, TaskNetwork, TaskRef};
use crate::registry::{PredicateQuery, Registry};
use crate::world::{
    apply_effects, enumerate_bindings, eval_conditions, Bindings, Evaluator, WorldState,
};

/// Immutable singly linked list; children share their parent's tail.
struct List<T>(Option<Arc<(T, List<T>)>>);

impl<T> Clone for List<T> {
    fn clone(&self) -> Self {
        List(self.0.clone())
    }
}

impl<T: Clone> List<T> {
    fn empty() -> Self {
        List(None)
    }

    fn push(&self, item: T) -> Self {
        List(Some(Arc::new((item, self.clone()))))
    }

    fn head(&self) -> Option<&T> {
        self.0.as_ref().map(|n| &n.0)
    }

    fn tail(&self) -> Self {
        self.0
            .as_ref()
            .map(|n| n.1.clone())
            .unwrap_or_else(List::empty)
    }

    fn iter(&self) -> impl Iterator<Item = &T> {
        let mut cur = self.0.as_deref();
        std::iter::from_fn(move || {
            let (item, next) = cur?;
            cur = next.0.as_deref();
            Some(item)
        })
    }
}

/// A point in the search: state, remaining tasks and the plan so far.
#[derive(Clone)]
pub struct SearchNode<C> {
    pub state: WorldState,
    pub cost: C,
    pub depth: usize,
    network: List<GroundTask>,
    /// Most recent step first.
    steps: List<PlanStep<C>>,
    n_steps: usize,
}

impl<C: Scalar> SearchNode<C> {
    pub fn root(state: WorldState, goal: &TaskNetwork) -> Self {
        let mut network = List::empty();
        for t in goal.iter().rev() {
            network = network.push(t.clone());
        }
        SearchNode {
            state,
            cost: C::zero(),
            depth: 0,
            network,
            steps: List::empty(),
            n_steps: 0,
        }
    }

    pub fn network(&self) -> Vec<GroundTask> {
        self.network.iter().cloned().collect()
    }

    pub fn steps(&self) -> Vec<PlanStep<C>> {
        let mut v: Vec<_> = self.steps.iter().cloned().collect();
        v.reverse();
        v
    }

    fn history(&self) -> Vec<crate::registry::Attachment> {
        let mut v: Vec<_> = self
            .steps
            .iter()
            .filter_map(|s| s.attachment.clone())
            .collect();
        v.reverse();
        v
    }
}

/// Pending alternative solutions of an evaluable predicate for one ground
/// action instance.
struct Retry<C> {
    parent: SearchNode<C>,
    task: GroundTask,
    cost: C,
    duration: Option<C>,
    next_state: WorldState,
    predicate: String,
    args: Vec<Value>,
    next_index: usize,
    solutions_before: usize,
}

enum Frame<C> {
    Node(SearchNode<C>),
    Retry(Box<Retry<C>>),
}

/// Depth-first decomposition engine over one domain and registry.
pub struct Planner<'a, C> {
    domain: &'a DomainModel,
    registry: &'a Registry<C>,
    options: SearchOptions,
    stats: SearchStatistics,
    limit_hit: bool,
    best: Option<C>,
    solutions: usize,
}

/// Runs one search from `s0` on `goal`.
pub fn plan<C: Scalar>(
    domain: &DomainModel,
    s0: &WorldState,
    goal: &TaskNetwork,
    options: SearchOptions,
    registry: &Registry<C>,
) -> Result<PlanResult<C>, PlanError> {
    Planner::new(domain, registry, options).run(s0, goal)
}

impl<'a, C: Scalar> Planner<'a, C> {
    pub fn new(domain: &'a DomainModel, registry: &'a Registry<C>, options: SearchOptions) -> Self {
        Planner {
            domain,
            registry,
            options,
            stats: SearchStatistics::default(),
            limit_hit: false,
            best: None,
            solutions: 0,
        }
    }

    pub fn stats(&self) -> &SearchStatistics {
        &self.stats
    }

    pub fn run(mut self, s0: &WorldState, goal: &TaskNetwork) -> Result<PlanResult<C>, PlanError> {
        let mut plans: Vec<Plan<C>> = Vec::new();
        let mut seen: HashSet<Vec<String>> = HashSet::new();
        let mut stack = vec![Frame::Node(SearchNode::root(s0.clone(), goal))];

        while let Some(frame) = stack.pop() {
            let node = match frame {
                Frame::Node(n) => n,
                Frame::Retry(r) => {
                    let children = self.retry(*r)?;
                    stack.extend(children.into_iter().rev());
                    continue;
                }
            };
            if let Some(best) = &self.best {
                if node.cost >= *best {
                    self.stats.pruned += 1;
                    continue;
                }
            }
            if node.network.head().is_none() {
                let p = Plan::new(node.steps());
                match self.options.mode {
                    SearchMode::FirstSolution => {
                        plans.push(p);
                        break;
                    }
                    SearchMode::Optimal => {
                        self.best = Some(p.total_cost.clone());
                        plans = vec![p];
                        self.solutions += 1;
                    }
                    SearchMode::AllSolutions(limit) => {
                        if seen.insert(p.signature()) {
                            plans.push(p);
                            self.solutions += 1;
                            if plans.len() >= limit {
                                break;
                            }
                        }
                    }
                }
                continue;
            }
            if node.depth >= self.options.max_depth {
                self.limit_hit = true;
                continue;
            }
            if self.stats.nodes_expanded >= self.options.max_nodes {
                self.limit_hit = true;
                break;
            }
            let children = self.expand(&node)?;
            if children.is_empty() {
                self.stats.backtracks += 1;
            }
            stack.extend(children.into_iter().rev());
        }

        if plans.is_empty() {
            let reason = if self.limit_hit {
                NoSolution::LimitHit
            } else {
                NoSolution::Exhausted
            };
            return Err(PlanError::NoSolution {
                reason,
                stats: self.stats,
            });
        }
        Ok(PlanResult {
            plans,
            stats: self.stats,
        })
    }

    /// Children of `node` in the order the search tries them. For an action
    /// with an evaluable predicate, only the instance carrying the first
    /// solution is returned.
    pub fn decompose_step(
        &mut self,
        node: &SearchNode<C>,
    ) -> Result<Vec<SearchNode<C>>, PlanError> {
        let mut out = Vec::new();
        for f in self.expand(node)? {
            match f {
                Frame::Node(n) => out.push(n),
                Frame::Retry(r) => {
                    out.extend(self.retry(*r)?.into_iter().filter_map(|f| match f {
                        Frame::Node(n) => Some(n),
                        Frame::Retry(_) => None,
                    }))
                }
            }
        }
        Ok(out)
    }

    fn expand(&mut self, node: &SearchNode<C>) -> Result<Vec<Frame<C>>, PlanError> {
        self.stats.nodes_expanded += 1;
        let task = node
            .network
            .head()
            .expect("expand called on a finished node")
            .clone();
        let rest = node.network.tail();
        match task.task {
            TaskRef::Primitive(i) => self.apply_primitive(node, i, task, rest),
            TaskRef::Compound(ci) => {
                let mut out = Vec::new();
                for &mi in &self.domain.compounds[ci].methods {
                    let m = &self.domain.methods[mi];
                    self.apply_method(node, m, &task, &rest, &mut out)?;
                }
                Ok(out)
            }
        }
    }

    fn call_args(
        &self,
        call: &FnCall,
        state: &WorldState,
        env: &Bindings,
    ) -> Result<Vec<Value>, PlanError> {
        let mut ev = Evaluator::new(state);
        let mut args = Vec::with_capacity(call.args.len());
        for a in &call.args {
            args.push(ev.term(a, env)?.unwrap_or(Value::Null));
        }
        Ok(args)
    }

    fn count_call(&mut self, site: &str, predicate: &str) {
        self.stats.external_calls += 1;
        *self
            .stats
            .external_calls_by_site
            .entry(format!("{site}/{predicate}"))
            .or_default() += 1;
    }

    fn apply_primitive(
        &mut self,
        node: &SearchNode<C>,
        op_index: usize,
        task: GroundTask,
        rest: List<GroundTask>,
    ) -> Result<Vec<Frame<C>>, PlanError> {
        let op = &self.domain.operators[op_index];
        let mut env = Bindings::from_args(op.n_vars(), &task.args);
        if !eval_conditions(&op.pre, &node.state, &mut env)? {
            return Ok(Vec::new());
        }
        let cost = match &op.cost {
            Some(f) => self.registry.eval_cost(
                &f.name,
                &node.state,
                &self.call_args(f, &node.state, &env)?,
            )?,
            None => C::one(),
        };
        if bound_check(self.options.mode, &node.cost, &cost, self.best.as_ref()) == Bound::Prune {
            self.stats.pruned += 1;
            return Ok(Vec::new());
        }
        let duration = match &op.duration {
            Some(f) => Some(self.registry.eval_duration(
                &f.name,
                &node.state,
                &self.call_args(f, &node.state, &env)?,
            )?),
            None => None,
        };
        let next_state = apply_effects(&op.effects, &node.state, &mut env)?;
        let base = SearchNode {
            network: rest,
            ..node.clone()
        };
        match op.predicates.first() {
            None => Ok(vec![Frame::Node(child(
                &base, task, &op.name, cost, duration, None, next_state,
            ))]),
            Some(p) => {
                let args = self.call_args(p, &node.state, &env)?;
                Ok(vec![Frame::Retry(Box::new(Retry {
                    parent: base,
                    task,
                    cost,
                    duration,
                    next_state,
                    predicate: p.name.clone(),
                    args,
                    next_index: 0,
                    solutions_before: self.solutions,
                }))])
            }
        }
    }

    /// Asks the predicate for its next solution. Alternatives are only
    /// sought after the previous instance's subtree produced no plan.
    fn retry(&mut self, r: Retry<C>) -> Result<Vec<Frame<C>>, PlanError> {
        if r.next_index > 0 && self.solutions > r.solutions_before {
            return Ok(Vec::new());
        }
        let op_name = self.domain.task_name(r.task.task).to_string();
        self.count_call(&op_name, &r.predicate);
        let history = r.parent.history();
        let query = PredicateQuery {
            state: &r.parent.state,
            args: &r.args,
            index: r.next_index,
            history: &history,
        };
        let Some(att) = self.registry.eval_predicate(&r.predicate, &query)? else {
            return Ok(Vec::new());
        };
        let node = child(
            &r.parent,
            r.task.clone(),
            &op_name,
            r.cost.clone(),
            r.duration.clone(),
            Some(att),
            r.next_state.clone(),
        );
        let next = Retry {
            next_index: r.next_index + 1,
            solutions_before: self.solutions,
            ..r
        };
        Ok(vec![Frame::Node(node), Frame::Retry(Box::new(next))])
    }

    fn method_predicates(
        &mut self,
        site: &str,
        preds: &[FnCall],
        node: &SearchNode<C>,
        env: &Bindings,
    ) -> Result<bool, PlanError> {
        for p in preds {
            let args = self.call_args(p, &node.state, env)?;
            self.count_call(site, &p.name);
            let history = node.history();
            let q = PredicateQuery {
                state: &node.state,
                args: &args,
                index: 0,
                history: &history,
            };
            if self.registry.eval_predicate(&p.name, &q)?.is_none() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn apply_method(
        &mut self,
        node: &SearchNode<C>,
        m: &Method,
        task: &GroundTask,
        rest: &List<GroundTask>,
        out: &mut Vec<Frame<C>>,
    ) -> Result<(), PlanError> {
        let env = Bindings::from_args(m.n_vars(), &task.args);
        if let Some(cond) = &m.empty {
            if eval_conditions(cond, &node.state, &mut env.clone())? {
                out.push(Frame::Node(SearchNode {
                    network: rest.clone(),
                    depth: node.depth + 1,
                    ..node.clone()
                }));
            }
        }
        for case in &m.cases {
            let mut case_env = env.clone();
            if !eval_conditions(&case.pre, &node.state, &mut case_env)? {
                continue;
            }
            if !self.method_predicates(&m.name, &case.predicates, node, &case_env)? {
                continue;
            }
            let mut bindings = Vec::new();
            self.bind_selectors(case, 0, &node.state, case_env, &mut bindings)?;
            if bindings.is_empty() {
                continue;
            }
            self.stats.linearizations_generated += case.orders.len() as u64;
            for order in &case.orders {
                for b in &bindings {
                    if let Some(network) =
                        self.ground_subtasks(case, order, b, &node.state, rest)?
                    {
                        out.push(Frame::Node(SearchNode {
                            network,
                            depth: node.depth + 1,
                            ..node.clone()
                        }));
                    }
                }
            }
        }
        Ok(())
    }

    fn bind_selectors(
        &self,
        case: &Case,
        i: usize,
        state: &WorldState,
        env: Bindings,
        out: &mut Vec<Bindings>,
    ) -> Result<(), PlanError> {
        let Some(sel) = case.selectors.get(i) else {
            out.push(env);
            return Ok(());
        };
        for v in enumerate_bindings(sel, state, &env, self.registry)? {
            let mut next = env.clone();
            next.bind(sel.var, v)?;
            self.bind_selectors(case, i + 1, state, next, out)?;
        }
        Ok(())
    }

    /// Prepends the case's subtasks, in `order`, to `rest`. `None` if an
    /// argument evaluates to Null.
    fn ground_subtasks(
        &self,
        case: &Case,
        order: &[usize],
        env: &Bindings,
        state: &WorldState,
        rest: &List<GroundTask>,
    ) -> Result<Option<List<GroundTask>>, PlanError> {
        let mut ev = Evaluator::new(state);
        let mut grounded = Vec::with_capacity(order.len());
        for &i in order {
            let st = &case.subtasks[i];
            let mut args = Vec::with_capacity(st.args.len());
            for a in &st.args {
                match ev.term(a, env)? {
                    Some(v) if !v.is_null() => args.push(v),
                    _ => return Ok(None),
                }
            }
            grounded.push(GroundTask {
                task: st.task,
                args,
            });
        }
        let mut network = rest.clone();
        for t in grounded.into_iter().rev() {
            network = network.push(t);
        }
        Ok(Some(network))
    }
}

fn child<C: Scalar>(
    base: &SearchNode<C>,
    task: GroundTask,
    action: &str,
    cost: C,
    duration: Option<C>,
    attachment: Option<crate::registry::Attachment>,
    state: WorldState,
) -> SearchNode<C> {
    let step = PlanStep {
        index: base.n_steps,
        action: action.to_string(),
        args: task.args,
        cost: cost.clone(),
        duration,
        attachment,
    };
    SearchNode {
        state,
        cost: base.cost.clone() + cost,
        depth: base.depth + 1,
        network: base.network.clone(),
        steps: base.steps.push(step),
        n_steps: base.n_steps + 1,
    }
}
