//! `hatp` command-line front-end.
//!
//! Exit codes: 0 on success, 1 when no (accepted) plan exists, 2 on input
//! errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hatp::dsl::{Diagnostic, Source};
use hatp::pipeline::{default_out_dir, load, run, Loaded, RunConfig, RunError, RunOutput};
use hatp::planner::{PlanError, SearchMode, SearchOptions};
use hatp::social::SocialError;
use hatp::world::{classical_json, classical_text};
use hatp::{FilterConfig, Rational, Registry};

#[derive(Parser)]
#[command(
    name = "hatp",
    version,
    about = "Total-order HTN planner with agent streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a plan and write its artifacts.
    Plan(PlanArgs),
    /// Parse and check the domain and problem.
    Validate(InputArgs),
    /// Write one export of the problem or its plan.
    Export {
        what: ExportKind,
        #[command(flatten)]
        plan: PlanArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportKind {
    /// Initial state as ground atoms.
    Classical,
    /// Stream graph of the selected plan.
    Graph,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Graph,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    problem: PathBuf,
    /// Goal tasks, e.g. `"Transport(C1, P21); Transport(C2, P22);"`.
    /// Overrides the problem's goal block.
    #[arg(long)]
    goal: Option<String>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Stop at the first plan found (default).
    #[arg(long, group = "mode")]
    first: bool,
    /// Search for a cheapest plan.
    #[arg(long, group = "mode")]
    optimize: bool,
    /// Enumerate up to N distinct plans.
    #[arg(long, group = "mode", value_name = "N", num_args = 0..=1, default_missing_value = "100")]
    all: Option<usize>,
    /// TOML file with a `[filters]` section.
    #[arg(long)]
    filters: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Artifact directory.
    #[arg(long, env = "HATP_OUT_DIR")]
    out: Option<PathBuf>,
    /// Seed for sampled linearization checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Linear extensions sampled for plans too long to check exhaustively.
    #[arg(long, default_value_t = 1000)]
    samples: u64,
    #[arg(long)]
    max_nodes: Option<u64>,
    #[arg(long)]
    max_depth: Option<usize>,
}

/// Failure with its exit code already decided.
struct Failure {
    code: u8,
    lines: Vec<String>,
}

impl Failure {
    fn input(msg: impl Into<String>) -> Self {
        Failure {
            code: 2,
            lines: vec![msg.into()],
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn render(diags: &[Diagnostic], input: &InputArgs) -> Vec<String> {
    diags
        .iter()
        .map(|d| {
            let file = match d.source {
                Source::Domain => input.domain.display().to_string(),
                Source::Problem => input.problem.display().to_string(),
                Source::Goal => "<goal>".to_string(),
            };
            d.render(&file)
        })
        .collect()
}

fn load_inputs(input: &InputArgs) -> Result<Loaded<Rational>, Failure> {
    let domain = read(&input.domain)?;
    let problem = read(&input.problem)?;
    load(&domain, &problem, input.goal.as_deref(), Registry::new()).map_err(|ds| Failure {
        code: 2,
        lines: render(&ds, input),
    })
}

fn run_config(args: &PlanArgs) -> Result<RunConfig<Rational>, Failure> {
    let mode = match (args.optimize, args.all) {
        (true, _) => SearchMode::Optimal,
        (_, Some(n)) => SearchMode::AllSolutions(n),
        _ => SearchMode::FirstSolution,
    };
    let mut options = SearchOptions::with_mode(mode);
    if let Some(n) = args.max_nodes {
        options.max_nodes = n;
    }
    if let Some(d) = args.max_depth {
        options.max_depth = d;
    }
    let filters = match &args.filters {
        Some(p) => Some(
            FilterConfig::from_toml(&read(p)?)
                .map_err(|e| Failure::input(format!("{}: {e}", p.display())))?,
        ),
        None => None,
    };
    Ok(RunConfig {
        options,
        filters,
        seed: args.seed,
        samples: args.samples,
    })
}

fn plan_run(args: &PlanArgs) -> Result<RunOutput<Rational>, Failure> {
    let loaded = load_inputs(&args.input)?;
    let config = run_config(args)?;
    run(&loaded, &config).map_err(|e| match &e {
        RunError::Plan(PlanError::NoSolution { stats, .. }) => Failure {
            code: 1,
            lines: vec![e.to_string(), format!("stats: {}", stats.to_json())],
        },
        RunError::Social(SocialError::EmptyConfig | SocialError::Config(_)) => {
            Failure::input(e.to_string())
        }
        _ => Failure {
            code: 1,
            lines: vec![e.to_string()],
        },
    })
}

fn cmd_plan(args: &PlanArgs) -> Result<(), Failure> {
    let out = plan_run(args)?;
    let dir = args.out.clone().unwrap_or_else(default_out_dir);
    out.write_artifacts(&dir)
        .map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    let artifact = |name: &str| {
        out.artifacts()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| t)
            .unwrap_or_default()
    };
    match args.format {
        Format::Json => print!("{}", artifact("plan.json")),
        Format::Graph => print!("{}", artifact("streams.graph")),
        Format::Text => {
            let plan = out.plan();
            for s in &plan.steps {
                println!("{:>3}  {s}  cost {}", s.index, s.cost);
            }
            println!("totalCost: {}", plan.total_cost);
            println!("stats: {}", out.result.stats.to_json());
            println!(
                "streams: {}",
                out.streams
                    .streams
                    .keys()
                    .cloned()
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            if let Some(f) = &out.filters {
                print!("{}", f.report.to_table());
            }
            println!("artifacts: {}", dir.display());
        }
    }
    Ok(())
}

fn cmd_validate(input: &InputArgs) -> Result<(), Failure> {
    load_inputs(input)?;
    println!("ok");
    Ok(())
}

fn cmd_export(what: ExportKind, args: &PlanArgs) -> Result<(), Failure> {
    let (name, text) = match what {
        ExportKind::Classical => {
            let loaded = load_inputs(&args.input)?;
            if args.format == Format::Json {
                (
                    "state.json",
                    serde_json::to_string_pretty(&classical_json(&loaded.s0)).expect("json") + "\n",
                )
            } else {
                ("state.atoms", classical_text(&loaded.s0))
            }
        }
        ExportKind::Graph => {
            let out = plan_run(args)?;
            ("streams.graph", hatp::streams::export_graph(&out.streams))
        }
    };
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)
                .map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
            let path = dir.join(name);
            fs::write(&path, text)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            println!("{}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan(args) => cmd_plan(args),
        Command::Validate(input) => cmd_validate(input),
        Command::Export { what, plan } => cmd_export(*what, plan),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            for l in &f.lines {
                eprintln!("{l}");
            }
            ExitCode::from(f.code)
        }
    }
}
