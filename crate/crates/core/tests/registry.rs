mod common;

use common::grasp::{grasp_registry, GRASP_DOMAIN, GRASP_PROBLEM};

use std::sync::Arc;

use hatp::planner::{plan, replay_validate, PlanError, SearchMode, SearchOptions};
use hatp::registry::{
    canned_solutions, Attachment, ExternError, FunctionKind, NumericTable, PredicateQuery, Registry,
};
use hatp::world::Value;
use hatp::Rational;

#[test]
fn retry_walks_solution_indices_in_order() {
    let l = common::load_with(GRASP_DOMAIN, GRASP_PROBLEM, grasp_registry());
    let res = plan(
        &l.model,
        &l.s0,
        &l.goal,
        SearchOptions::default(),
        &l.registry,
    )
    .unwrap();
    let p = &res.plans[0];
    assert_eq!(p.len(), 2);
    assert_eq!(res.stats.external_calls_by_site["Grasp/canGrasp"], 3);
    assert_eq!(res.stats.external_calls_by_site["Place/canPlace"], 3);
    let grasp = p.steps[0].attachment.as_ref().unwrap();
    assert_eq!(
        (grasp.index, grasp.payload.as_slice()),
        (2, b"top".as_slice())
    );
    assert_eq!(p.steps[1].attachment.as_ref().unwrap().payload, b"shelf");
    replay_validate(p, &l.s0, &l.model, &l.registry).unwrap();
}

#[test]
fn replay_rejects_a_forged_attachment() {
    let l = common::load_with(GRASP_DOMAIN, GRASP_PROBLEM, grasp_registry());
    let mut p = plan(
        &l.model,
        &l.s0,
        &l.goal,
        SearchOptions::default(),
        &l.registry,
    )
    .unwrap()
    .plans
    .remove(0);
    p.steps[0].attachment = Some(Attachment {
        predicate: "canGrasp".into(),
        index: 2,
        payload: b"side".to_vec(),
    });
    let err = replay_validate(&p, &l.s0, &l.model, &l.registry).unwrap_err();
    assert_eq!(err.index, 0);
}

#[test]
fn predicate_without_solutions_is_a_dead_end() {
    let mut reg = Registry::new();
    reg.register_predicate("canGrasp", canned_solutions(vec![]))
        .unwrap();
    reg.register_predicate("canPlace", canned_solutions(vec![b"x".to_vec()]))
        .unwrap();
    let l = common::load_with(GRASP_DOMAIN, GRASP_PROBLEM, reg);
    let err = plan(
        &l.model,
        &l.s0,
        &l.goal,
        SearchOptions::default(),
        &l.registry,
    )
    .unwrap_err();
    assert!(matches!(err, PlanError::NoSolution { .. }));
}

#[test]
fn missing_predicate_fails_validation_with_its_name() {
    let ds = hatp::pipeline::load(
        GRASP_DOMAIN,
        GRASP_PROBLEM,
        None,
        Registry::<Rational>::new(),
    )
    .err()
    .unwrap();
    let msgs: Vec<&str> = ds.iter().map(|d| d.message.as_str()).collect();
    assert!(
        msgs.contains(&"evaluable predicate `canGrasp` is not defined"),
        "{msgs:?}"
    );
}

#[test]
fn builtins_cover_numeric_kinds_only() {
    let reg = Registry::<Rational>::new();
    for kind in [
        FunctionKind::Cost,
        FunctionKind::Duration,
        FunctionKind::Ordering,
    ] {
        assert!(reg.resolves(kind, "const_0"));
        assert!(reg.resolves(kind, "const_1"));
    }
    assert!(!reg.resolves(FunctionKind::Evaluable, "const_1"));
    assert!(!reg.resolves(FunctionKind::Cost, "distance"));
}

#[test]
fn duplicate_and_misdirected_registrations_are_rejected() {
    let mut reg = Registry::<Rational>::new();
    let f = |_: &hatp::world::WorldState, _: &[Value]| Ok(Rational::from_integer(2));
    reg.register("two", FunctionKind::Cost, f).unwrap();
    assert_eq!(
        reg.register("two", FunctionKind::Cost, f),
        Err(ExternError::Duplicate {
            kind: FunctionKind::Cost,
            name: "two".into()
        })
    );
    assert!(reg.register("two", FunctionKind::Evaluable, f).is_err());
    reg.register_predicate("p", canned_solutions(vec![]))
        .unwrap();
    assert!(reg
        .register_predicate("p", canned_solutions(vec![]))
        .is_err());
}

#[test]
fn negative_cost_is_inadmissible() {
    let l = common::load_data("dwr.hatp", "dwr.hatpp");
    let mut reg = Registry::<Rational>::new();
    reg.register(
        "costToMove",
        FunctionKind::Cost,
        |_: &hatp::world::WorldState, _: &[Value]| Ok(Rational::from_integer(-1)),
    )
    .unwrap();
    reg.register(
        "distance",
        FunctionKind::Ordering,
        |_: &hatp::world::WorldState, _: &[Value]| Ok(Rational::from_integer(-1)),
    )
    .unwrap();
    assert!(matches!(
        reg.eval_cost("costToMove", &l.s0, &[]),
        Err(ExternError::Inadmissible {
            kind: FunctionKind::Cost,
            ..
        })
    ));
    // Ordering keys are not costs; negative values are fine.
    assert_eq!(
        reg.eval_ordering("distance", &l.s0, &[]).unwrap(),
        Rational::from_integer(-1)
    );
    let err = plan(
        &l.model,
        &l.s0,
        &l.goal,
        SearchOptions::with_mode(SearchMode::Optimal),
        &reg,
    )
    .unwrap_err();
    assert!(
        matches!(err, PlanError::Extern(ExternError::Inadmissible { .. })),
        "{err}"
    );
}

#[test]
fn tables_look_up_entries_then_default() {
    let l = common::load_data("dwr.hatp", "dwr.hatpp");
    let e = |n: &str| Value::Entity(l.s0.universe().entity(n).unwrap().clone());
    let t = l.registry.table("costToMove").unwrap();
    assert_eq!(
        t.lookup(&[e("L1"), e("L2")]).unwrap(),
        Rational::from_integer(5)
    );
    assert_eq!(
        t.lookup(&[e("L1"), e("L1")]).unwrap(),
        Rational::from_integer(100)
    );
    assert!(matches!(
        t.lookup(&[e("L1")]),
        Err(ExternError::Arity {
            expected: 2,
            found: 1,
            ..
        })
    ));
    let d = l.registry.table("distance").unwrap();
    assert!(matches!(
        d.lookup(&[e("L1"), e("P11")]),
        Err(ExternError::MissingKey { .. })
    ));
    assert_eq!(
        l.registry
            .eval_cost("costToMove", &l.s0, &[e("L2"), e("L1")])
            .unwrap(),
        Rational::from_integer(5)
    );
}

#[test]
fn table_backed_predicate_has_n_solutions() {
    let l = common::load_data("dwr.hatp", "dwr.hatpp");
    let mut reg = Registry::<Rational>::new();
    let mut entries = std::collections::BTreeMap::new();
    entries.insert(vec![Value::Int(1)], Rational::from_integer(2));
    reg.register_table(NumericTable {
        name: "slots".into(),
        arity: 1,
        entries,
        default: None,
    })
    .unwrap();
    let ask = |index| {
        reg.eval_predicate(
            "slots",
            &PredicateQuery {
                state: &l.s0,
                args: &[Value::Int(1)],
                index,
                history: &[],
            },
        )
        .unwrap()
    };
    assert_eq!(ask(0).unwrap().payload, b"slots#0");
    assert_eq!(ask(1).unwrap().index, 1);
    assert_eq!(ask(2), None);
}

#[test]
fn attachment_json_is_base64() {
    let a = Attachment {
        predicate: "canGrasp".into(),
        index: 2,
        payload: b"top".to_vec(),
    };
    assert_eq!(
        a.to_json(),
        serde_json::json!({"predicate": "canGrasp", "index": 2, "payload": "dG9w"})
    );
}

#[test]
fn one_registry_serves_concurrent_searches() {
    let l = Arc::new(common::load_with(
        GRASP_DOMAIN,
        GRASP_PROBLEM,
        grasp_registry(),
    ));
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let l = Arc::clone(&l);
            std::thread::spawn(move || {
                plan(
                    &l.model,
                    &l.s0,
                    &l.goal,
                    SearchOptions::default(),
                    &l.registry,
                )
                .unwrap()
            })
        })
        .collect();
    let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert!(results.windows(2).all(|w| w[0] == w[1]));
}
