//! Text in, artifacts out: the sequence the command-line front-end runs.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::domain::{compile, compile_goal, DomainModel, TaskNetwork};
use crate::dsl::ast::{DomainAst, ProblemAst, Span};
use crate::dsl::{parse_domain, parse_goal, parse_problem, validate_with_goal, Diagnostic, Source};
use crate::planner::{
    plan, replay_validate, Plan, PlanError, PlanResult, ReplayFailure, SearchOptions,
};
use crate::registry::Registry;
use crate::scalar::Scalar;
use crate::social::{filter, FilterConfig, FilterOutcome, SocialError};
use crate::streams::{
    check_linearizations, export_graph, split, LinearizationCheck, StreamError, StreamPlan,
};
use crate::world::{init_state, Schema, WorldState};

/// A validated domain/problem pair ready for search.
pub struct Loaded<C> {
    pub domain_ast: DomainAst,
    pub problem_ast: ProblemAst,
    pub model: DomainModel,
    pub s0: WorldState,
    pub goal: TaskNetwork,
    pub registry: Registry<C>,
}

/// Parses and validates both files. `goal` overrides the problem's goal
/// block. Problem tables are added to `registry`.
pub fn load<C: Scalar>(
    domain_text: &str,
    problem_text: &str,
    goal: Option<&str>,
    mut registry: Registry<C>,
) -> Result<Loaded<C>, Vec<Diagnostic>> {
    let domain_ast = parse_domain(domain_text).map_err(|e| e.0)?;
    let problem_ast = parse_problem(problem_text, &domain_ast).map_err(|e| e.0)?;
    let goal_ast = match goal {
        Some(g) => parse_goal(g).map_err(|e| e.0)?,
        None => problem_ast.goal(),
    };
    let source = if goal.is_some() {
        Source::Goal
    } else {
        Source::Problem
    };
    let diags = validate_with_goal(&domain_ast, &problem_ast, &goal_ast, source, &registry);
    if !diags.is_empty() {
        return Err(diags);
    }
    let schema = Arc::new(Schema::from_ast(&domain_ast).map_err(|d| vec![d])?);
    let s0 = init_state(schema, &problem_ast).map_err(|e| {
        vec![Diagnostic::error(Span::default(), e.to_string()).in_source(Source::Problem)]
    })?;
    registry
        .register_problem_tables(&problem_ast, s0.universe())
        .map_err(|e| {
            vec![Diagnostic::error(Span::default(), e.to_string()).in_source(Source::Problem)]
        })?;
    let model = compile(&domain_ast, s0.universe().clone())?;
    let goal = compile_goal(&model, &goal_ast).map_err(|ds| {
        ds.into_iter()
            .map(|d| d.in_source(source))
            .collect::<Vec<_>>()
    })?;
    Ok(Loaded {
        domain_ast,
        problem_ast,
        model,
        s0,
        goal,
        registry,
    })
}

/// Search and post-processing settings for [`run`].
#[derive(Debug, Clone)]
pub struct RunConfig<C> {
    pub options: SearchOptions,
    pub filters: Option<FilterConfig<C>>,
    /// Seed for sampled linearization checks.
    pub seed: u64,
    pub samples: u64,
}

impl<C> Default for RunConfig<C> {
    fn default() -> Self {
        RunConfig {
            options: SearchOptions::default(),
            filters: None,
            seed: 0,
            samples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Social(#[from] SocialError),
    #[error(transparent)]
    Streams(#[from] StreamError),
    #[error("plan failed replay: {0}")]
    Replay(ReplayFailure),
    #[error("all {0} plans were rejected by the filters")]
    AllRejected(usize),
}

/// Every file name [`RunOutput::artifacts`] can produce.
pub const ARTIFACT_NAMES: [&str; 5] = [
    "plan.json",
    "plans.json",
    "streams.json",
    "streams.graph",
    "filters.json",
];

/// Everything produced for one problem.
#[derive(Debug, Clone)]
pub struct RunOutput<C> {
    pub result: PlanResult<C>,
    /// Index into `result.plans` of the plan the artifacts describe.
    pub selected: usize,
    pub streams: StreamPlan,
    pub check: LinearizationCheck,
    pub filters: Option<FilterOutcome<C>>,
}

impl<C: Scalar> RunOutput<C> {
    pub fn plan(&self) -> &Plan<C> {
        &self.result.plans[self.selected]
    }

    /// File name and contents of each artifact, in a fixed order.
    pub fn artifacts(&self) -> Vec<(&'static str, String)> {
        let pretty = |v: &serde_json::Value| serde_json::to_string_pretty(v).expect("json") + "\n";
        let mut out = vec![(
            "plan.json",
            pretty(&self.plan().to_json(&self.result.stats)),
        )];
        if self.result.plans.len() > 1 {
            let all: Vec<_> = self
                .result
                .plans
                .iter()
                .map(|p| p.to_json(&self.result.stats))
                .collect();
            out.push((
                "plans.json",
                pretty(&serde_json::json!({ "selected": self.selected, "plans": all })),
            ));
        }
        let mut streams = self.streams.to_json();
        streams["linearizationCheck"] = self.check.to_json();
        out.push(("streams.json", pretty(&streams)));
        out.push(("streams.graph", export_graph(&self.streams)));
        if let Some(f) = &self.filters {
            let mut j = f.report.to_json();
            j["accepted"] = f.accepted.clone().into();
            out.push(("filters.json", pretty(&j)));
        }
        out
    }

    /// Writes the artifacts into `dir` and removes artifact files left there
    /// by earlier runs that this run does not produce.
    pub fn write_artifacts(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let artifacts = self.artifacts();
        for name in ARTIFACT_NAMES {
            let path = dir.join(name);
            if !artifacts.iter().any(|(n, _)| *n == name) && path.is_file() {
                std::fs::remove_file(path)?;
            }
        }
        let mut written = Vec::new();
        for (name, text) in artifacts {
            let path = dir.join(name);
            std::fs::write(&path, text)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Output directory used when none is given.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os("HATP_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("hatp-out"))
}

/// Plans, filters, splits into streams and checks the selected plan. With
/// filters the selected plan is the first accepted one, otherwise the first
/// plan found.
pub fn run<C: Scalar>(loaded: &Loaded<C>, config: &RunConfig<C>) -> Result<RunOutput<C>, RunError> {
    let result = plan(
        &loaded.model,
        &loaded.s0,
        &loaded.goal,
        config.options,
        &loaded.registry,
    )?;
    for p in &result.plans {
        replay_validate(p, &loaded.s0, &loaded.model, &loaded.registry)
            .map_err(RunError::Replay)?;
    }
    let filters = match &config.filters {
        Some(cfg) => Some(filter(
            &result.plans,
            cfg,
            &loaded.model,
            &loaded.s0,
            &loaded.registry,
        )?),
        None => None,
    };
    let selected = match &filters {
        Some(f) => *f
            .accepted
            .first()
            .ok_or(RunError::AllRejected(result.plans.len()))?,
        None => 0,
    };
    let p = &result.plans[selected];
    let streams = split(p, &loaded.s0, &loaded.model, &loaded.registry)?;
    let check = check_linearizations(
        &streams,
        p,
        &loaded.s0,
        &loaded.model,
        &loaded.registry,
        config.seed,
        config.samples,
    );
    Ok(RunOutput {
        result,
        selected,
        streams,
        check,
        filters,
    })
}
