mod common;

use std::collections::BTreeSet;

use hatp::dsl::ast::{DomainItem, SubtaskDecl};
use hatp::dsl::parse_domain;
use hatp::planner::{
    bound_check, linearizations, plan, replay_validate, Bound, NoSolution, PlanError, Planner,
    SearchMode, SearchNode, SearchOptions,
};
use hatp::world::{Slot, Value};
use hatp::Rational;

fn r(n: i64) -> Rational {
    Rational::from_integer(n)
}

fn run(
    l: &hatp::pipeline::Loaded<Rational>,
    mode: SearchMode,
) -> Result<hatp::PlanResult, PlanError> {
    plan(
        &l.model,
        &l.s0,
        &l.goal,
        SearchOptions::with_mode(mode),
        &l.registry,
    )
}

#[test]
fn dwr_optimal_plan_is_the_eleven_step_ferry() {
    let l = common::load_data("dwr.hatp", "dwr.hatpp");
    let res = run(&l, SearchMode::Optimal).unwrap();
    let p = &res.plans[0];
    let text: Vec<String> = p.steps.iter().map(|s| s.to_string()).collect();
    assert_eq!(
        text,
        [
            "Take(K1,C1,P11)",
            "Load(K1,R1,C1)",
            "Move(R1,L1,L2,L2)",
            "UnloadRobot(K2,R1,C1)",
            "Put(K2,C1,P21)",
            "Move(R1,L2,L1,L1)",
            "Take(K1,C2,P12)",
            "Load(K1,R1,C2)",
            "Move(R1,L1,L2,L2)",
            "UnloadRobot(K2,R1,C2)",
            "Put(K2,C2,P22)",
        ]
    );
    assert_eq!(p.total_cost, r(23));
    let end = replay_validate(p, &l.s0, &l.model, &l.registry).unwrap();
    let c = |n: &str| Value::Entity(l.s0.universe().entity(n).unwrap().clone());
    assert_eq!(end.get("C1", "pile"), Some(&Slot::Atom(c("P21"))));
    assert_eq!(end.get("C2", "pile"), Some(&Slot::Atom(c("P22"))));
}

#[test]
fn first_solution_replays() {
    let l = common::load_data("dwr.hatp", "dwr.hatpp");
    let res = run(&l, SearchMode::FirstSolution).unwrap();
    assert_eq!(res.plans.len(), 1);
    replay_validate(&res.plans[0], &l.s0, &l.model, &l.registry).unwrap();
}

#[test]
fn container_already_in_place_gives_empty_plan() {
    let d = common::data("dwr.hatp");
    let p = common::data("dwr.hatpp").replace(
        "Transport(C1, P21);\n  Transport(C2, P22);",
        "Transport(C1, P11);",
    );
    let l = common::load_text(&d, &p);
    let res = run(&l, SearchMode::Optimal).unwrap();
    assert!(res.plans[0].is_empty());
    assert_eq!(res.plans[0].total_cost, r(0));
}

#[test]
fn unreachable_target_exhausts_search() {
    let l = common::load_data("dwr.hatp", "unsat.hatpp");
    match run(&l, SearchMode::Optimal) {
        Err(
            e @ PlanError::NoSolution {
                reason: NoSolution::Exhausted,
                ..
            },
        ) => {
            assert_eq!(e.to_string(), "no solution (search exhausted)")
        }
        other => panic!("expected exhausted search, got {other:?}"),
    }
}

#[test]
fn node_limit_is_reported() {
    let l = common::load_data("dwr.hatp", "dwr.hatpp");
    let opts = SearchOptions {
        max_nodes: 3,
        ..SearchOptions::with_mode(SearchMode::FirstSolution)
    };
    match plan(&l.model, &l.s0, &l.goal, opts, &l.registry) {
        Err(PlanError::NoSolution {
            reason: NoSolution::LimitHit,
            stats,
        }) => assert!(stats.nodes_expanded <= 3),
        other => panic!("expected limit hit, got {other:?}"),
    }
}

#[test]
fn depth_limit_is_reported() {
    let l = common::load_data("dwr.hatp", "dwr.hatpp");
    let opts = SearchOptions {
        max_depth: 4,
        ..SearchOptions::with_mode(SearchMode::FirstSolution)
    };
    assert!(matches!(
        plan(&l.model, &l.s0, &l.goal, opts, &l.registry),
        Err(PlanError::NoSolution {
            reason: NoSolution::LimitHit,
            ..
        })
    ));
}

#[test]
fn unordered_body_of_k_subtasks_has_k_factorial_children() {
    for k in 1..=5usize {
        let (d, p) = common::unordered(k);
        let l = common::load_text(&d, &p);
        let mut planner = Planner::new(&l.model, &l.registry, SearchOptions::default());
        let root = SearchNode::root(l.s0.clone(), &l.goal);
        let children = planner.decompose_step(&root).unwrap();
        let factorial: usize = (1..=k).product();
        assert_eq!(children.len(), factorial, "k = {k}");
        assert_eq!(planner.stats().linearizations_generated as usize, factorial);
        let orders: BTreeSet<String> = children
            .iter()
            .map(|c| {
                c.network()
                    .iter()
                    .map(|t| hatp::domain::DisplayTask(&l.model, t).to_string())
                    .collect()
            })
            .collect();
        assert_eq!(orders.len(), factorial, "children must be distinct orders");
    }
}

#[test]
fn all_solutions_of_unordered_body_are_the_permutations() {
    let (d, p) = common::unordered(3);
    let l = common::load_text(&d, &p);
    let res = run(&l, SearchMode::AllSolutions(100)).unwrap();
    assert_eq!(res.plans.len(), 6);
    let res = run(&l, SearchMode::AllSolutions(4)).unwrap();
    assert_eq!(res.plans.len(), 4);
}

#[test]
fn chained_transport_body_has_one_order() {
    let ast = parse_domain(&common::data("transport.hatp")).unwrap();
    let body = ast
        .items
        .iter()
        .find_map(|i| match i {
            DomainItem::Method(m) if m.name.name == "Transport" => Some(&m.cases[0].body.subtasks),
            _ => None,
        })
        .unwrap();
    let order: Vec<(u32, Vec<u32>)> = body
        .iter()
        .map(|s: &SubtaskDecl| (s.label, s.predecessors.clone()))
        .collect();
    assert_eq!(linearizations(&order).unwrap().len(), 1);

    let l = common::load_data("dwr.hatp", "dwr.hatpp");
    let mut planner = Planner::new(&l.model, &l.registry, SearchOptions::default());
    let children = planner
        .decompose_step(&SearchNode::root(l.s0.clone(), &l.goal))
        .unwrap();
    assert_eq!(children.len(), 1);
    assert_eq!(planner.stats().linearizations_generated, 1);
}

#[test]
fn optimal_cost_equals_enumerated_minimum() {
    let mut compared = 0;
    for seed in 0..60 {
        let m = common::micro(seed);
        let l = common::load_text(&m.domain, &m.problem);
        let all = run(&l, SearchMode::AllSolutions(500));
        let best = run(&l, SearchMode::Optimal);
        match (all, best) {
            (Ok(all), Ok(best)) => {
                assert!(all.plans.len() < 500, "seed {seed}: enumeration truncated");
                let min = all.plans.iter().map(|p| p.total_cost).min().unwrap();
                assert_eq!(best.plans[0].total_cost, min, "seed {seed}");
                compared += 1;
            }
            (Err(PlanError::NoSolution { .. }), Err(PlanError::NoSolution { .. })) => {}
            (a, b) => panic!("seed {seed}: modes disagree: {a:?} / {b:?}"),
        }
    }
    assert!(compared >= 50, "only {compared} comparable domains");
}

#[test]
fn generated_plans_replay_without_static_writes() {
    let mut checked = 0;
    for seed in 0..200 {
        let m = common::micro(seed);
        let l = common::load_text(&m.domain, &m.problem);
        let Ok(res) = run(&l, SearchMode::AllSolutions(500)) else {
            continue;
        };
        for p in &res.plans {
            replay_validate(p, &l.s0, &l.model, &l.registry)
                .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            assert_eq!(common::static_writes(&l, p), 0);
            checked += 1;
        }
    }
    assert!(checked >= 1000, "only {checked} plans");
}

#[test]
fn all_solutions_are_distinct() {
    for seed in 0..30 {
        let m = common::micro(seed);
        let l = common::load_text(&m.domain, &m.problem);
        if let Ok(res) = run(&l, SearchMode::AllSolutions(500)) {
            let sigs: BTreeSet<_> = res.plans.iter().map(|p| p.signature()).collect();
            assert_eq!(sigs.len(), res.plans.len(), "seed {seed}");
        }
    }
}

#[test]
fn search_is_deterministic() {
    let l = common::load_data("dwr.hatp", "dwr.hatpp");
    let a = run(&l, SearchMode::AllSolutions(10)).unwrap();
    let b = run(&l, SearchMode::AllSolutions(10)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn bound_prunes_only_in_optimal_mode_at_or_above_best() {
    let best = r(10);
    assert_eq!(
        bound_check(SearchMode::Optimal, &r(7), &r(3), Some(&best)),
        Bound::Prune
    );
    assert_eq!(
        bound_check(SearchMode::Optimal, &r(7), &r(2), Some(&best)),
        Bound::Continue
    );
    assert_eq!(
        bound_check(SearchMode::Optimal, &r(70), &r(2), None),
        Bound::Continue
    );
    assert_eq!(
        bound_check(SearchMode::FirstSolution, &r(70), &r(2), Some(&best)),
        Bound::Continue
    );
}

#[test]
fn float_scalars_plan_like_rationals() {
    let l = common::load_data("dwr.hatp", "dwr.hatpp");
    let mut reg = hatp::registry::Registry::<f64>::new();
    reg.register_problem_tables(&l.problem_ast, l.s0.universe())
        .unwrap();
    let res = plan(
        &l.model,
        &l.s0,
        &l.goal,
        SearchOptions::with_mode(SearchMode::Optimal),
        &reg,
    )
    .unwrap();
    assert_eq!(res.plans[0].total_cost, 23.0);
}

#[test]
fn select_once_plans_are_a_subset_of_select_plans() {
    let problem = common::data("dwr3.hatpp");
    let solve = |kind: &str| {
        let l = common::load_text(&common::dwr_with_robot_selector(kind), &problem);
        run(&l, SearchMode::AllSolutions(500)).unwrap()
    };
    let all = solve("SELECT");
    let once = solve("SELECTONCE");
    let sigs =
        |r: &hatp::PlanResult| -> BTreeSet<_> { r.plans.iter().map(|p| p.signature()).collect() };
    assert!(sigs(&once).is_subset(&sigs(&all)));
    assert!(once.plans.len() < all.plans.len());
    assert!(once.stats.nodes_expanded < all.stats.nodes_expanded);
}
