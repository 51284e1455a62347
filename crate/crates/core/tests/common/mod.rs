//! Shared fixtures: test data access and a seeded generator of small
//! delivery domains.
#![allow(dead_code)]

pub mod grasp;
pub mod oracle;

use std::fmt::Write;
use std::path::PathBuf;

use hatp::pipeline::{load, Loaded};
use hatp::planner::{execute_step, Plan, ReplayMode, StepTrace};
use hatp::registry::Registry;
use hatp::Rational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

pub fn data(name: &str) -> String {
    std::fs::read_to_string(data_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn load_text(domain: &str, problem: &str) -> Loaded<Rational> {
    load_with(domain, problem, Registry::new())
}

pub fn load_with(domain: &str, problem: &str, registry: Registry<Rational>) -> Loaded<Rational> {
    match load(domain, problem, None, registry) {
        Ok(l) => l,
        Err(ds) => panic!(
            "{}",
            ds.iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join("\n")
        ),
    }
}

pub fn load_data(domain: &str, problem: &str) -> Loaded<Rational> {
    load_text(&data(domain), &data(problem))
}

/// DWR domain with the robot selector of `Transport` replaced by an
/// unordered selector of the given kind (`SELECT` or `SELECTONCE`).
pub fn dwr_with_robot_selector(kind: &str) -> String {
    let src = data("dwr.hatp");
    let ordered = "R = SELECTORDERED(Agent, {R.type == \"ROBOT\";},\n          distance(R.at, S.attached), <);";
    assert!(src.contains(ordered), "robot selector not found");
    src.replace(
        ordered,
        &format!("R = {kind}(Agent, {{R.type == \"ROBOT\";}});"),
    )
}

/// Replays `plan` step by step and returns the number of writes to static
/// slots seen in the traces.
pub fn static_writes(loaded: &Loaded<Rational>, plan: &Plan<Rational>) -> usize {
    let mut state = loaded.s0.clone();
    let mut history = Vec::new();
    let mut count = 0;
    for step in &plan.steps {
        let mut trace = StepTrace::default();
        state = execute_step(
            &loaded.model,
            &loaded.registry,
            &state,
            step,
            &history,
            ReplayMode::Full,
            Some(&mut trace),
        )
        .unwrap_or_else(|e| panic!("{step}: {e}"));
        count += trace
            .writes
            .iter()
            .filter(|(k, _)| state.is_static_slot(&k.entity, k.attr))
            .count();
        history.extend(step.attachment.clone());
    }
    count
}

/// A generated domain/problem pair.
#[derive(Debug, Clone)]
pub struct Micro {
    pub seed: u64,
    pub domain: String,
    pub problem: String,
}

/// Small delivery domain: agents carry items between fully connected
/// places, optionally handing items over at a meeting place. At most four
/// entity types and six entities; no recursive methods, so the search space
/// is finite.
pub fn micro(seed: u64) -> Micro {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_agents = rng.gen_range(1..=3usize);
    let n_places = rng.gen_range(2..=3usize).min(6 - n_agents - 1);
    let n_items = rng
        .gen_range(1..=2usize)
        .min(6 - n_agents - n_places)
        .max(1);
    let agents: Vec<String> = (1..=n_agents).map(|i| format!("R{i}")).collect();
    let places: Vec<String> = (1..=n_places).map(|i| format!("L{i}")).collect();
    let items: Vec<String> = (1..=n_items).map(|i| format!("C{i}")).collect();
    let handoff = n_agents >= 2 && rng.gen_bool(0.6);
    let agent_selector = match rng.gen_range(0..4) {
        0 => "A = SELECTORDERED(Agent, {}, effort(A), >);".to_string(),
        1 => "A = SELECTORDERED(Agent, {}, effort(A), <);".to_string(),
        2 if rng.gen_bool(0.5) => "A = SELECTONCE(Agent, {A.kind == \"HUMAN\";});".to_string(),
        _ => "A = SELECT(Agent, {});".to_string(),
    };

    let mut d = String::new();
    d.push_str(
        "define entityType Place, Item, Marker;\n\n\
         define entityAttributes Agent {\n  static atom string kind;\n  dynamic atom Place at;\n  dynamic set Item holds;\n}\n\n\
         define entityAttributes Place {\n  static set Place next;\n  dynamic atom bool busy;\n  dynamic set Agent visitors;\n}\n\n\
         define entityAttributes Item {\n  static atom string label;\n  dynamic atom Place loc;\n  dynamic atom Agent owner;\n}\n\n",
    );
    writeln!(
        d,
        "method Deliver(Item I, Place T) {{\n  empty{{I.loc == T;}};\n  {{\n    subtasks {{\n      {agent_selector}\n      \
         1: GoTo(A, I.loc);\n      2: Pick(A, I, I.loc)>1;\n      3: GoTo(A, T)>2;\n      4: Drop(A, I, T)>3;\n    }};\n  }};"
    )
    .unwrap();
    if handoff {
        d.push_str(
            "  {\n    preconditions { I.owner == NULL; };\n    subtasks {\n      A = SELECT(Agent, {});\n      B = SELECT(Agent, {B != A;});\n      \
             M = SELECT(Place, {M != T;});\n      1: GoTo(A, I.loc);\n      2: Pick(A, I, I.loc)>1;\n      3: GoTo(A, M)>2;\n      \
             4: GoTo(B, M);\n      5: Hand(A, B, I)>3, 4;\n      6: GoTo(B, T)>5;\n      7: Drop(B, I, T)>6;\n    };\n  };\n",
        );
    }
    d.push_str("}\n\n");
    d.push_str(
        "method Both(Item I, Item J, Place T) {\n  {\n    subtasks {\n      1: Deliver(I, T);\n      2: Deliver(J, T);\n    };\n  };\n}\n\n\
         method GoTo(Agent A, Place T) {\n  empty{A.at == T;};\n  {\n    subtasks {\n      F = SELECT(Place, {A.at == F;});\n      \
         1: Go(A, F, T);\n    };\n  };\n}\n\n\
         action Go(Agent A, Place F, Place T) {\n  preconditions {\n    A.at == F;\n    T >> F.next;\n  };\n  effects {\n    A.at = T;\n    \
         T.visitors <<= A;\n    F.visitors =>> A;\n  };\n  cost{moveCost(F, T)};\n}\n\n\
         action Pick(Agent A, Item I, Place P) {\n  preconditions {\n    A.at == P;\n    I.loc == P;\n    I.owner == NULL;\n  };\n  effects {\n    \
         I.loc = NULL;\n    I.owner = A;\n    A.holds <<= I;\n  };\n  cost{pickCost(A)};\n}\n\n\
         action Drop(Agent A, Item I, Place P) {\n  preconditions {\n    I.owner == A;\n    A.at == P;\n  };\n  effects {\n    I.owner = NULL;\n    \
         I.loc = P;\n    A.holds =>> I;\n    IF{P.busy == false;}{P.busy = true;}\n    FORALL(Agent X, {X.at == P;}, {P.visitors <<= X;});\n  };\n  \
         cost{const_1()};\n}\n\n\
         action Hand(Agent A, Agent B, Item I) {\n  preconditions {\n    I.owner == A;\n    A.at == B.at;\n    A != B;\n  };\n  effects {\n    \
         I.owner = B;\n    A.holds =>> I;\n    B.holds <<= I;\n  };\n  cost{handCost(A, B)};\n}\n",
    );

    let mut p = String::new();
    writeln!(p, "{} = new Agent;", agents.join(", ")).unwrap();
    writeln!(p, "{} = new Place;", places.join(", ")).unwrap();
    writeln!(p, "{} = new Item;\n", items.join(", ")).unwrap();
    for a in &agents {
        let kind = if rng.gen_bool(0.5) { "HUMAN" } else { "ROBOT" };
        writeln!(p, "{a}.kind = \"{kind}\";").unwrap();
        writeln!(p, "{a}.at = {};", places.choose(&mut rng).unwrap()).unwrap();
    }
    for f in &places {
        for t in &places {
            if f != t {
                writeln!(p, "{f}.next <<= {t};").unwrap();
            }
        }
        writeln!(p, "{f}.busy = false;").unwrap();
    }
    for i in &items {
        writeln!(p, "{i}.label = \"{}\";", i.to_lowercase()).unwrap();
        writeln!(p, "{i}.loc = {};", places.choose(&mut rng).unwrap()).unwrap();
    }
    p.push_str("\ntable moveCost(Place, Place) {\n");
    for f in &places {
        for t in &places {
            if f != t {
                writeln!(p, "  ({f}, {t}) = {};", rng.gen_range(1..=6)).unwrap();
            }
        }
    }
    p.push_str("  default = 9;\n}\n\ntable pickCost(Agent) {\n");
    for a in &agents {
        writeln!(p, "  ({a}) = {};", rng.gen_range(0..=3)).unwrap();
    }
    p.push_str("}\n\ntable effort(Agent) {\n");
    for a in &agents {
        writeln!(p, "  ({a}) = {};", rng.gen_range(0..=5)).unwrap();
    }
    p.push_str("}\n\ntable handCost(Agent, Agent) {\n");
    writeln!(p, "  default = {};\n}}\n", rng.gen_range(0..=2)).unwrap();
    p.push_str("goal {\n");
    let target = places.choose(&mut rng).unwrap();
    if items.len() == 2 && rng.gen_bool(0.5) {
        writeln!(p, "  Both(C1, C2, {target});").unwrap();
    } else {
        for i in &items {
            writeln!(p, "  Deliver({i}, {});", places.choose(&mut rng).unwrap()).unwrap();
        }
    }
    p.push_str("}\n");
    Micro {
        seed,
        domain: d,
        problem: p,
    }
}

/// Domain with one method whose body holds `k` unordered primitive subtasks.
pub fn unordered(k: usize) -> (String, String) {
    let mut d = String::from("method Many(Agent A) {\n  {\n    subtasks {\n");
    for i in 1..=k {
        d.push_str(&format!("      {i}: Step{i}(A);\n"));
    }
    d.push_str("    };\n  };\n}\n");
    for i in 1..=k {
        d.push_str(&format!(
            "action Step{i}(Agent A) {{\n  preconditions {{}};\n  effects {{}};\n}}\n"
        ));
    }
    (d, "A1 = new Agent;\ngoal { Many(A1); }\n".to_string())
}
