//! Post-hoc filtering of plans by human-robot interaction criteria: time
//! agents spend waiting, balance of effort, interdependence between
//! streams, and undesirable action sequences.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write;
use std::str::FromStr;

use crate::domain::DomainModel;
use crate::planner::{Plan, PlanStep};
use crate::registry::Registry;
use crate::scalar::{parse_rational, Rational, Scalar};
use crate::streams::{split, StreamError, StreamPlan};
use crate::world::WorldState;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SocialError {
    #[error("no filter criterion is configured")]
    EmptyConfig,
    #[error("invalid filter configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Streams(#[from] StreamError),
}

/// Earliest-start timing of a stream plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule<C> {
    pub start: Vec<C>,
    pub end: Vec<C>,
    /// Idle time between an agent's first start and last end.
    pub wait: BTreeMap<String, C>,
    pub makespan: C,
}

/// Steps each agent takes part in, in plan order: the steps it owns plus
/// joint steps it participates in.
pub fn timelines(sp: &StreamPlan) -> BTreeMap<String, Vec<usize>> {
    let mut t = sp.streams.clone();
    for g in &sp.joint_groups {
        for a in &g.agents {
            let steps = t.entry(a.clone()).or_default();
            steps.extend(g.steps.iter().copied());
            steps.sort_unstable();
            steps.dedup();
        }
    }
    t
}

/// Durations fall back to step costs when an action has no duration
/// function.
pub fn durations<C: Scalar>(plan: &Plan<C>) -> Vec<C> {
    plan.steps
        .iter()
        .map(|s| s.duration.clone().unwrap_or_else(|| s.cost.clone()))
        .collect()
}

/// A step starts once every agent taking part has finished its previous
/// step and every link producer has finished. `durations` has one entry per
/// plan step.
pub fn schedule<C: Scalar>(sp: &StreamPlan, durations: &[C]) -> Schedule<C> {
    let n = durations.len();
    let lines = timelines(sp);
    let mut preds = vec![Vec::new(); n];
    for steps in lines.values() {
        for w in steps.windows(2) {
            preds[w[1]].push(w[0]);
        }
    }
    for l in &sp.causal_links {
        preds[l.consumer].push(l.producer);
    }
    // Every predecessor has a smaller index, so plan order is topological.
    let mut start: Vec<C> = Vec::with_capacity(n);
    let mut end: Vec<C> = Vec::with_capacity(n);
    for i in 0..n {
        let s = preds[i]
            .iter()
            .map(|&p| end[p].clone())
            .fold(C::zero(), crate::scalar::max_of);
        end.push(s.clone() + durations[i].clone());
        start.push(s);
    }
    let mut wait = BTreeMap::new();
    for (agent, steps) in &lines {
        let gaps = steps
            .windows(2)
            .map(|w| start[w[1]].clone() - end[w[0]].clone());
        wait.insert(agent.clone(), crate::scalar::sum(gaps));
    }
    let makespan = end.iter().cloned().fold(C::zero(), crate::scalar::max_of);
    Schedule {
        start,
        end,
        wait,
        makespan,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ImbalanceMode {
    /// Largest minus smallest per-agent effort.
    #[default]
    Difference,
    /// Largest divided by smallest per-agent effort.
    Ratio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// Contiguous steps of the whole plan.
    Global,
    /// Contiguous steps of one agent's stream.
    PerStream,
}

/// `Name(arg, *, ...)`; `*` matches any argument, a bare name any arity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepPattern {
    pub action: String,
    pub args: Option<Vec<Option<String>>>,
}

impl StepPattern {
    pub fn matches<C>(&self, step: &PlanStep<C>) -> bool {
        if self.action != "*" && self.action != step.action {
            return false;
        }
        match &self.args {
            None => true,
            Some(args) => {
                args.len() == step.args.len()
                    && args
                        .iter()
                        .zip(&step.args)
                        .all(|(p, a)| p.as_ref().is_none_or(|p| *p == a.bare()))
            }
        }
    }
}

impl FromStr for StepPattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let Some(open) = s.find('(') else {
            return Ok(StepPattern {
                action: s.to_string(),
                args: None,
            });
        };
        let inner = s[open + 1..]
            .strip_suffix(')')
            .ok_or_else(|| format!("unbalanced parentheses in `{s}`"))?;
        let args = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner
                .split(',')
                .map(|a| match a.trim() {
                    "*" => None,
                    other => Some(other.trim_matches('"').to_string()),
                })
                .collect()
        };
        Ok(StepPattern {
            action: s[..open].trim().to_string(),
            args: Some(args),
        })
    }
}

impl fmt::Display for StepPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.action)?;
        if let Some(args) = &self.args {
            let a: Vec<&str> = args.iter().map(|a| a.as_deref().unwrap_or("*")).collect();
            write!(f, "({})", a.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForbiddenSequence {
    pub scope: Scope,
    pub pattern: Vec<StepPattern>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig<C> {
    pub max_wait: Option<C>,
    pub max_effort_imbalance: Option<C>,
    pub imbalance_mode: ImbalanceMode,
    pub max_intricacy: Option<usize>,
    pub forbidden: Vec<ForbiddenSequence>,
    /// Per-agent multiplier on effort; agents not listed weigh 1.
    pub agent_weights: BTreeMap<String, C>,
}

impl<C> Default for FilterConfig<C> {
    fn default() -> Self {
        FilterConfig {
            max_wait: None,
            max_effort_imbalance: None,
            imbalance_mode: ImbalanceMode::Difference,
            max_intricacy: None,
            forbidden: Vec::new(),
            agent_weights: BTreeMap::new(),
        }
    }
}

fn toml_number<C: Scalar>(v: &toml::Value, what: &str) -> Result<C, SocialError> {
    let r: Rational = match v {
        toml::Value::Integer(n) => Rational::from_integer(*n),
        toml::Value::Float(f) => {
            parse_rational(&f.to_string()).map_err(|e| SocialError::Config(e.to_string()))?
        }
        toml::Value::String(s) => {
            parse_rational(s).map_err(|e| SocialError::Config(e.to_string()))?
        }
        _ => return Err(SocialError::Config(format!("`{what}` must be a number"))),
    };
    C::from_rational(&r).ok_or_else(|| SocialError::Config(format!("`{what}` is out of range")))
}

impl<C: Scalar> FilterConfig<C> {
    pub fn is_empty(&self) -> bool {
        self.max_wait.is_none()
            && self.max_effort_imbalance.is_none()
            && self.max_intricacy.is_none()
            && self.forbidden.is_empty()
    }

    /// Reads the `[filters]` table of a TOML document:
    ///
    /// ```toml
    /// [filters]
    /// max_wait = 4
    /// max_effort_imbalance = "5/2"
    /// imbalance_mode = "ratio"
    /// max_intricacy = 6
    /// agent_weights = { H1 = 0.5 }
    /// [[filters.forbidden]]
    /// scope = "global"
    /// pattern = ["Put(*,C1,*)", "Take(*,C1,*)"]
    /// ```
    pub fn from_toml(text: &str) -> Result<Self, SocialError> {
        let doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| SocialError::Config(e.to_string()))?;
        let Some(f) = doc.get("filters") else {
            return Err(SocialError::Config("missing `[filters]` section".into()));
        };
        let f = f
            .as_table()
            .ok_or_else(|| SocialError::Config("`filters` must be a table".into()))?;
        let mut cfg = FilterConfig::default();
        for (key, v) in f {
            match key.as_str() {
                "max_wait" => cfg.max_wait = Some(toml_number(v, key)?),
                "max_effort_imbalance" => cfg.max_effort_imbalance = Some(toml_number(v, key)?),
                "imbalance_mode" => {
                    cfg.imbalance_mode = match v.as_str() {
                        Some("difference") => ImbalanceMode::Difference,
                        Some("ratio") => ImbalanceMode::Ratio,
                        _ => {
                            return Err(SocialError::Config(
                                "`imbalance_mode` is `difference` or `ratio`".into(),
                            ))
                        }
                    }
                }
                "max_intricacy" => {
                    let n = v.as_integer().filter(|n| *n >= 0);
                    cfg.max_intricacy = Some(n.ok_or_else(|| {
                        SocialError::Config("`max_intricacy` must be a non-negative integer".into())
                    })? as usize);
                }
                "agent_weights" => {
                    let t = v.as_table().ok_or_else(|| {
                        SocialError::Config("`agent_weights` must be a table".into())
                    })?;
                    for (agent, w) in t {
                        cfg.agent_weights
                            .insert(agent.clone(), toml_number(w, agent)?);
                    }
                }
                "forbidden" => {
                    let items = v.as_array().ok_or_else(|| {
                        SocialError::Config("`forbidden` must be an array".into())
                    })?;
                    for item in items {
                        cfg.forbidden.push(forbidden_entry(item)?);
                    }
                }
                other => return Err(SocialError::Config(format!("unknown key `{other}`"))),
            }
        }
        Ok(cfg)
    }
}

fn forbidden_entry(item: &toml::Value) -> Result<ForbiddenSequence, SocialError> {
    let bad = |m: &str| SocialError::Config(format!("forbidden sequence: {m}"));
    let t = item.as_table().ok_or_else(|| bad("expected a table"))?;
    let scope = match t.get("scope").and_then(|s| s.as_str()).unwrap_or("global") {
        "global" => Scope::Global,
        "per_stream" => Scope::PerStream,
        other => return Err(bad(&format!("unknown scope `{other}`"))),
    };
    let pattern = t
        .get("pattern")
        .and_then(|p| p.as_array())
        .ok_or_else(|| bad("`pattern` must be an array of strings"))?
        .iter()
        .map(|p| {
            p.as_str()
                .ok_or_else(|| bad("`pattern` must be an array of strings"))?
                .parse()
                .map_err(|e: String| bad(&e))
        })
        .collect::<Result<Vec<StepPattern>, _>>()?;
    if pattern.is_empty() {
        return Err(bad("`pattern` is empty"));
    }
    Ok(ForbiddenSequence { scope, pattern })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Criterion {
    Wait,
    EffortImbalance,
    Intricacy,
    ForbiddenSequence,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Wait => "wait",
            Criterion::EffortImbalance => "effort-imbalance",
            Criterion::Intricacy => "intricacy",
            Criterion::ForbiddenSequence => "forbidden-sequence",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub criterion: Criterion,
    /// Measured value, e.g. `5` or `R1: 7`.
    pub value: String,
    pub limit: String,
}

/// Where a forbidden sequence matched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceMatch {
    pub pattern: String,
    /// Stream owner for per-stream matches.
    pub agent: Option<String>,
    /// Index of the first matched step in the plan.
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanVerdict<C> {
    pub plan: usize,
    pub accepted: bool,
    pub wait: BTreeMap<String, C>,
    pub effort: BTreeMap<String, C>,
    /// `None` when the ratio is unbounded (some agent has zero effort).
    pub imbalance: Option<C>,
    pub intricacy: usize,
    pub matches: Vec<SequenceMatch>,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport<C> {
    pub verdicts: Vec<PlanVerdict<C>>,
}

/// Effort per stream owner: the weighted sum of the costs of its steps.
pub fn efforts<C: Scalar>(
    plan: &Plan<C>,
    sp: &StreamPlan,
    weights: &BTreeMap<String, C>,
) -> BTreeMap<String, C> {
    sp.streams
        .iter()
        .map(|(agent, steps)| {
            let w = weights.get(agent).cloned().unwrap_or_else(C::one);
            let total = crate::scalar::sum(steps.iter().map(|&i| plan.steps[i].cost.clone()));
            (agent.clone(), total * w)
        })
        .collect()
}

pub fn imbalance<C: Scalar>(efforts: &BTreeMap<String, C>, mode: ImbalanceMode) -> Option<C> {
    let mut vals = efforts.values().cloned();
    let Some(first) = vals.next() else {
        return Some(C::zero());
    };
    let (lo, hi) = vals.fold((first.clone(), first), |(lo, hi), v| {
        let lo = if v < lo { v.clone() } else { lo };
        let hi = if v > hi { v } else { hi };
        (lo, hi)
    });
    match mode {
        ImbalanceMode::Difference => Some(hi - lo),
        ImbalanceMode::Ratio if lo.is_zero() => hi.is_zero().then(C::one),
        ImbalanceMode::Ratio => Some(hi / lo),
    }
}

fn find_run<C>(steps: &[&PlanStep<C>], pattern: &[StepPattern]) -> Option<usize> {
    if pattern.len() > steps.len() {
        return None;
    }
    (0..=steps.len() - pattern.len())
        .find(|&s| pattern.iter().zip(&steps[s..]).all(|(p, st)| p.matches(st)))
}

/// Every contiguous occurrence of the configured forbidden sequences; only
/// the first occurrence per sequence (and per stream) is reported.
pub fn forbidden_matches<C>(
    plan: &Plan<C>,
    sp: &StreamPlan,
    forbidden: &[ForbiddenSequence],
) -> Vec<SequenceMatch> {
    let mut out = Vec::new();
    for f in forbidden {
        let name = f
            .pattern
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(" ; ");
        match f.scope {
            Scope::Global => {
                let steps: Vec<&PlanStep<C>> = plan.steps.iter().collect();
                if let Some(i) = find_run(&steps, &f.pattern) {
                    out.push(SequenceMatch {
                        pattern: name,
                        agent: None,
                        step: i,
                    });
                }
            }
            Scope::PerStream => {
                for (agent, idx) in &sp.streams {
                    let steps: Vec<&PlanStep<C>> = idx.iter().map(|&i| &plan.steps[i]).collect();
                    if let Some(i) = find_run(&steps, &f.pattern) {
                        out.push(SequenceMatch {
                            pattern: name.clone(),
                            agent: Some(agent.clone()),
                            step: idx[i],
                        });
                    }
                }
            }
        }
    }
    out
}

/// Measures one plan against `config`.
pub fn assess<C: Scalar>(
    index: usize,
    plan: &Plan<C>,
    sp: &StreamPlan,
    config: &FilterConfig<C>,
) -> PlanVerdict<C> {
    let sched = schedule(sp, &durations(plan));
    let effort = efforts(plan, sp, &config.agent_weights);
    let imb = imbalance(&effort, config.imbalance_mode);
    let intricacy = sp.causal_links.len();
    let matches = forbidden_matches(plan, sp, &config.forbidden);
    let mut violations = Vec::new();
    if let Some(limit) = &config.max_wait {
        for (agent, w) in &sched.wait {
            if w > limit {
                violations.push(Violation {
                    criterion: Criterion::Wait,
                    value: format!("{agent}: {w}"),
                    limit: limit.to_string(),
                });
            }
        }
    }
    if let Some(limit) = &config.max_effort_imbalance {
        let over = match &imb {
            Some(v) => v > limit,
            None => true,
        };
        if over {
            let value = imb
                .as_ref()
                .map(|v| v.to_string())
                .unwrap_or_else(|| "unbounded".into());
            violations.push(Violation {
                criterion: Criterion::EffortImbalance,
                value,
                limit: limit.to_string(),
            });
        }
    }
    if let Some(limit) = config.max_intricacy {
        if intricacy > limit {
            violations.push(Violation {
                criterion: Criterion::Intricacy,
                value: intricacy.to_string(),
                limit: limit.to_string(),
            });
        }
    }
    for m in &matches {
        let at = match &m.agent {
            Some(a) => format!("{} in stream {a} at step {}", m.pattern, m.step),
            None => format!("{} at step {}", m.pattern, m.step),
        };
        violations.push(Violation {
            criterion: Criterion::ForbiddenSequence,
            value: at,
            limit: "absent".into(),
        });
    }
    PlanVerdict {
        plan: index,
        accepted: violations.is_empty(),
        wait: sched.wait,
        effort,
        imbalance: imb,
        intricacy,
        matches,
        violations,
    }
}

/// Result of [`filter`]: indices of accepted plans plus the report.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome<C> {
    pub accepted: Vec<usize>,
    pub report: FilterReport<C>,
}

/// Keeps the plans that violate no configured criterion.
pub fn filter<C: Scalar>(
    plans: &[Plan<C>],
    config: &FilterConfig<C>,
    domain: &DomainModel,
    s0: &WorldState,
    registry: &Registry<C>,
) -> Result<FilterOutcome<C>, SocialError> {
    if config.is_empty() {
        return Err(SocialError::EmptyConfig);
    }
    let mut verdicts = Vec::with_capacity(plans.len());
    for (i, p) in plans.iter().enumerate() {
        let sp = split(p, s0, domain, registry)?;
        verdicts.push(assess(i, p, &sp, config));
    }
    let accepted = verdicts
        .iter()
        .filter(|v| v.accepted)
        .map(|v| v.plan)
        .collect();
    Ok(FilterOutcome {
        accepted,
        report: FilterReport { verdicts },
    })
}

impl<C: Scalar> FilterReport<C> {
    pub fn to_json(&self) -> serde_json::Value {
        let map = |m: &BTreeMap<String, C>| -> serde_json::Map<String, serde_json::Value> {
            m.iter().map(|(k, v)| (k.clone(), v.to_json())).collect()
        };
        serde_json::json!({
            "plans": self.verdicts.iter().map(|v| serde_json::json!({
                "plan": v.plan,
                "accepted": v.accepted,
                "wait": map(&v.wait),
                "effort": map(&v.effort),
                "imbalance": v.imbalance.as_ref().map(Scalar::to_json).unwrap_or_else(|| "unbounded".into()),
                "intricacy": v.intricacy,
                "matches": v.matches.iter().map(|m| serde_json::json!({
                    "pattern": m.pattern,
                    "agent": m.agent,
                    "step": m.step,
                })).collect::<Vec<_>>(),
                "violations": v.violations.iter().map(|x| serde_json::json!({
                    "criterion": x.criterion.to_string(),
                    "value": x.value,
                    "limit": x.limit,
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }

    /// Fixed-width table, one row per plan.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<5} {:<9} {:>9} {:>9} {:>9}  {}\n",
            "plan", "verdict", "max-wait", "imbalance", "intricacy", "violations"
        );
        for v in &self.verdicts {
            let max_wait = v
                .wait
                .values()
                .cloned()
                .fold(C::zero(), crate::scalar::max_of);
            let imb = v
                .imbalance
                .as_ref()
                .map(|x| x.to_string())
                .unwrap_or_else(|| "inf".into());
            let viol = if v.violations.is_empty() {
                "-".to_string()
            } else {
                v.violations
                    .iter()
                    .map(|x| format!("{} {} > {}", x.criterion, x.value, x.limit))
                    .collect::<Vec<_>>()
                    .join("; ")
            };
            writeln!(
                out,
                "{:<5} {:<9} {:>9} {:>9} {:>9}  {}",
                v.plan,
                if v.accepted { "accepted" } else { "rejected" },
                max_wait.to_string(),
                imb,
                v.intricacy,
                viol
            )
            .unwrap();
        }
        out
    }
}
