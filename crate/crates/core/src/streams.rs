//! Splitting a totally ordered plan into one stream per agent, linked by
//! the causal and ordering constraints that keep parallel execution safe.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::DomainModel;
use crate::planner::{execute_step, Plan, ReplayFailure, ReplayMode, StepTrace};
use crate::registry::Registry;
use crate::scalar::Scalar;
use crate::world::{SlotKey, TypeId, Value, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinkKind {
    /// The producer establishes a value the consumer reads.
    Support,
    /// The earlier step must stay before the later one so that a write
    /// does not clobber a value another step relies on.
    Threat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalLink {
    pub producer: usize,
    pub consumer: usize,
    pub kind: LinkKind,
    /// Literals protected by the link, in classical form.
    pub atoms: Vec<String>,
}

/// A step with agent-typed parameters beyond the first: every named agent
/// takes part in executing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointGroup {
    pub steps: Vec<usize>,
    pub agents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamPlan {
    /// Agent name to the indices of the steps it executes, in plan order.
    pub streams: BTreeMap<String, Vec<usize>>,
    pub causal_links: Vec<CausalLink>,
    pub joint_groups: Vec<JointGroup>,
    /// Display label of each step, e.g. `Move(R1,L1,L2,L2)`.
    pub labels: Vec<String>,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StreamError {
    #[error("first argument of step {0} is not an Agent")]
    NoAgent(usize),
    #[error(transparent)]
    Replay(#[from] ReplayFailure),
}

impl StreamPlan {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Agent owning each step.
    pub fn owners(&self) -> Vec<&str> {
        let mut out = vec![""; self.len()];
        for (agent, steps) in &self.streams {
            for &i in steps {
                out[i] = agent;
            }
        }
        out
    }

    /// Ordering constraints: consecutive steps of each stream plus links.
    pub fn edges(&self) -> BTreeSet<(usize, usize)> {
        let mut e = BTreeSet::new();
        for steps in self.streams.values() {
            for w in steps.windows(2) {
                e.insert((w[0], w[1]));
            }
        }
        for l in &self.causal_links {
            e.insert((l.producer, l.consumer));
        }
        e
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "streams": self.streams,
            "causalLinks": self.causal_links.iter().map(|l| serde_json::json!({
                "producer": l.producer,
                "consumer": l.consumer,
                "kind": match l.kind { LinkKind::Support => "support", LinkKind::Threat => "threat" },
                "atoms": l.atoms,
            })).collect::<Vec<_>>(),
            "jointGroups": self.joint_groups.iter().map(|g| serde_json::json!({
                "steps": g.steps,
                "agents": g.agents,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Classical literal for "key holds value".
fn literal(state: &WorldState, key: &SlotKey, value: &Value) -> String {
    let attr = &state
        .schema()
        .attribute(state.universe().type_of(&key.entity), key.attr)
        .name;
    let e = &key.entity;
    match (&key.member, value) {
        (Some(m), Value::Bool(true)) => format!("{attr}({e},{m})"),
        (Some(m), _) => format!("not {attr}({e},{m})"),
        (None, Value::Bool(true)) => format!("{attr}({e})"),
        (None, Value::Bool(false)) => format!("not {attr}({e})"),
        (None, Value::Null) => format!("not {attr}({e},_)"),
        (None, v) => format!("{attr}({e},{v})"),
    }
}

/// Assigns each step to the agent named by its first argument and derives
/// the links between streams. `plan` must be replay-valid from `s0`.
pub fn split<C: Scalar>(
    plan: &Plan<C>,
    s0: &WorldState,
    domain: &DomainModel,
    registry: &Registry<C>,
) -> Result<StreamPlan, StreamError> {
    let n = plan.steps.len();
    let universe = s0.universe();
    let mut streams: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut owner = Vec::with_capacity(n);
    let mut joint_groups = Vec::new();
    for (i, step) in plan.steps.iter().enumerate() {
        let agent = match step.args.first() {
            Some(Value::Entity(e)) if universe.type_of(e) == TypeId::AGENT => e.name().to_string(),
            _ => return Err(StreamError::NoAgent(i)),
        };
        streams.entry(agent.clone()).or_default().push(i);
        owner.push(agent.clone());
        if let Some((_, op)) = domain.operator(&step.action) {
            let mut agents = vec![agent];
            for p in op.co_agent_params() {
                if let Some(Value::Entity(e)) = step.args.get(p) {
                    if !agents.iter().any(|a| a == e.name()) {
                        agents.push(e.name().to_string());
                    }
                }
            }
            if agents.len() > 1 {
                joint_groups.push(JointGroup {
                    steps: vec![i],
                    agents,
                });
            }
        }
    }

    // Replay with read/write tracking.
    let mut states = Vec::with_capacity(n + 1);
    let mut traces = Vec::with_capacity(n);
    let mut state = s0.clone();
    for (i, step) in plan.steps.iter().enumerate() {
        let mut t = StepTrace::default();
        let next = execute_step(
            domain,
            registry,
            &state,
            step,
            &[],
            ReplayMode::Symbolic,
            Some(&mut t),
        )
        .map_err(|reason| ReplayFailure { index: i, reason })?;
        states.push(state);
        traces.push(t);
        state = next;
    }

    let mut writers: BTreeMap<&SlotKey, Vec<(usize, &Value)>> = BTreeMap::new();
    for (i, t) in traces.iter().enumerate() {
        for (k, v) in &t.writes {
            writers.entry(k).or_default().push((i, v));
        }
    }

    let mut links: BTreeMap<(usize, usize), (LinkKind, BTreeSet<String>)> = BTreeMap::new();
    let mut add = |from: usize, to: usize, kind: LinkKind, atom: String| {
        if owner[from] == owner[to] {
            return;
        }
        let e = links.entry((from, to)).or_insert((kind, BTreeSet::new()));
        e.0 = e.0.min(kind);
        e.1.insert(atom);
    };
    for (j, t) in traces.iter().enumerate() {
        let reads: BTreeSet<&SlotKey> = t.reads.iter().collect();
        for key in reads {
            let needed = states[j].read_key(key);
            let label = literal(s0, key, &needed);
            let ws = writers.get(key).map(Vec::as_slice).unwrap_or(&[]);
            let before: Vec<_> = ws.iter().filter(|(i, _)| *i < j).collect();
            let bad_before = before.iter().any(|(_, v)| **v != needed);
            let initial_ok = s0.read_key(key) == needed;
            if !(initial_ok && !bad_before) {
                let &&(p, _) = before
                    .last()
                    .expect("a value differing from the initial one has a writer");
                add(p, j, LinkKind::Support, label.clone());
                for &&(b, v) in &before {
                    if b < p && *v != needed {
                        add(b, p, LinkKind::Threat, label.clone());
                    }
                }
            }
            for &(t, v) in ws {
                if t > j && *v != needed {
                    add(j, t, LinkKind::Threat, label.clone());
                }
            }
        }
    }

    Ok(StreamPlan {
        streams,
        causal_links: links
            .into_iter()
            .map(|((producer, consumer), (kind, atoms))| CausalLink {
                producer,
                consumer,
                kind,
                atoms: atoms.into_iter().collect(),
            })
            .collect(),
        joint_groups,
        labels: plan.steps.iter().map(|s| s.to_string()).collect(),
        actions: plan.steps.iter().map(|s| s.action.clone()).collect(),
    })
}

/// Outcome of replaying linear extensions of a stream plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearizationCheck {
    pub extensions_checked: u64,
    pub exhaustive: bool,
    pub seed: u64,
    /// First extension that failed to replay, with the failure.
    pub counterexample: Option<(Vec<usize>, ReplayFailure)>,
}

impl LinearizationCheck {
    pub fn ok(&self) -> bool {
        self.counterexample.is_none()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "ok": self.ok(),
            "extensionsChecked": self.extensions_checked,
            "exhaustive": self.exhaustive,
            "seed": self.seed,
        })
    }
}

/// Plans up to this many steps are checked on every linear extension.
pub const EXHAUSTIVE_LIMIT: usize = 8;

/// Replays linear extensions of the stream orders and links: all of them
/// for plans of at most [`EXHAUSTIVE_LIMIT`] steps, otherwise `samples`
/// random ones drawn with `seed`.
pub fn check_linearizations<C: Scalar>(
    sp: &StreamPlan,
    plan: &Plan<C>,
    s0: &WorldState,
    domain: &DomainModel,
    registry: &Registry<C>,
    seed: u64,
    samples: u64,
) -> LinearizationCheck {
    let n = plan.steps.len();
    let mut preds = vec![Vec::new(); n];
    for (a, b) in sp.edges() {
        preds[b].push(a);
    }
    let replay = |order: &[usize]| -> Result<(), ReplayFailure> {
        let mut state = s0.clone();
        for (pos, &i) in order.iter().enumerate() {
            state = execute_step(
                domain,
                registry,
                &state,
                &plan.steps[i],
                &[],
                ReplayMode::Symbolic,
                None,
            )
            .map_err(|reason| ReplayFailure {
                index: pos,
                reason: format!("{} ({})", reason, plan.steps[i]),
            })?;
        }
        Ok(())
    };
    let mut check = LinearizationCheck {
        extensions_checked: 0,
        exhaustive: n <= EXHAUSTIVE_LIMIT,
        seed,
        counterexample: None,
    };
    if check.exhaustive {
        let mut placed = vec![false; n];
        let mut order = Vec::with_capacity(n);
        all_extensions(&preds, &mut placed, &mut order, &mut |o| {
            check.extensions_checked += 1;
            match replay(o) {
                Ok(()) => true,
                Err(f) => {
                    check.counterexample = Some((o.to_vec(), f));
                    false
                }
            }
        });
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let order = random_extension(&preds, &mut rng);
            check.extensions_checked += 1;
            if let Err(f) = replay(&order) {
                check.counterexample = Some((order, f));
                break;
            }
        }
    }
    check
}

/// Visits every topological order; stops when `visit` returns false.
fn all_extensions(
    preds: &[Vec<usize>],
    placed: &mut [bool],
    order: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    if order.len() == preds.len() {
        return visit(order);
    }
    for i in 0..preds.len() {
        if !placed[i] && preds[i].iter().all(|&p| placed[p]) {
            placed[i] = true;
            order.push(i);
            let go_on = all_extensions(preds, placed, order, visit);
            order.pop();
            placed[i] = false;
            if !go_on {
                return false;
            }
        }
    }
    true
}

fn random_extension(preds: &[Vec<usize>], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = preds.len();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let ready: Vec<usize> = (0..n)
            .filter(|&i| !placed[i] && preds[i].iter().all(|&p| placed[p]))
            .collect();
        let &i = ready.choose(rng).expect("constraints are acyclic");
        placed[i] = true;
        order.push(i);
    }
    order
}

fn esc(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn node(sp: &StreamPlan, i: usize) -> String {
    format!("a{i}_{}", sp.actions[i])
}

/// Graphviz text: one cluster per stream, solid edges for stream order,
/// dashed edges for links. Joint steps are drawn with a double border.
pub fn export_graph(sp: &StreamPlan) -> String {
    let mut out = String::from("digraph streams {\n");
    if sp.is_empty() {
        out.push_str("}\n");
        return out;
    }
    out.push_str("    rankdir=LR;\n    node [shape=box];\n");
    let joint: BTreeMap<usize, &JointGroup> = sp
        .joint_groups
        .iter()
        .flat_map(|g| g.steps.iter().map(move |&s| (s, g)))
        .collect();
    for (agent, steps) in &sp.streams {
        writeln!(out, "    subgraph cluster_{agent} {{").unwrap();
        writeln!(out, "        label=\"{agent}\";").unwrap();
        for &i in steps {
            match joint.get(&i) {
                Some(g) => writeln!(
                    out,
                    "        {} [label=\"{}\\njoint: {}\", peripheries=2];",
                    node(sp, i),
                    esc(&sp.labels[i]),
                    g.agents.join(", ")
                ),
                None => writeln!(
                    out,
                    "        {} [label=\"{}\"];",
                    node(sp, i),
                    esc(&sp.labels[i])
                ),
            }
            .unwrap();
        }
        for w in steps.windows(2) {
            writeln!(out, "        {} -> {};", node(sp, w[0]), node(sp, w[1])).unwrap();
        }
        out.push_str("    }\n");
    }
    for l in &sp.causal_links {
        let style = match l.kind {
            LinkKind::Support => "dashed",
            LinkKind::Threat => "dotted",
        };
        writeln!(
            out,
            "    {} -> {} [style={style}, label=\"{}\"];",
            node(sp, l.producer),
            node(sp, l.consumer),
            esc(&l.atoms.join(", "))
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}
