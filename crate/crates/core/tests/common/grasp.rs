//! A two-step domain whose grasp predicate has three canned solutions.

use hatp::registry::{canned_solutions, PredicateOutcome, PredicateQuery, Registry};
use hatp::Rational;

pub const GRASP_DOMAIN: &str = r#"
define entityType Object;

define entityAttributes Object {
  dynamic atom Agent heldBy;
  dynamic atom bool placed;
}

method Stow(Agent A, Object O) {
  {
    subtasks {
      1: Grasp(A, O);
      2: Place(A, O)>1;
    };
  };
}

action Grasp(Agent A, Object O) {
  preconditions {
    O.heldBy == NULL;
    canGrasp(A, O);
  };
  effects { O.heldBy = A; };
  cost{const_1()};
}

action Place(Agent A, Object O) {
  preconditions {
    O.heldBy == A;
    canPlace(A, O);
  };
  effects {
    O.heldBy = NULL;
    O.placed = true;
  };
  cost{const_1()};
}
"#;

pub const GRASP_PROBLEM: &str = "R1 = new Agent;\nO1 = new Object;\ngoal { Stow(R1, O1); }\n";

/// Three grasp solutions; placing only works after the grasp at index 2.
pub fn grasp_registry() -> Registry<Rational> {
    let mut reg = Registry::new();
    reg.register_predicate(
        "canGrasp",
        canned_solutions(vec![b"low".to_vec(), b"side".to_vec(), b"top".to_vec()]),
    )
    .unwrap();
    reg.register_predicate("canPlace", |q: &PredicateQuery<'_>| {
        let grasp = q.history.iter().rev().find(|a| a.predicate == "canGrasp");
        match (q.index, grasp) {
            (0, Some(a)) if a.index == 2 => PredicateOutcome::Solution(b"shelf".to_vec()),
            _ => PredicateOutcome::NoMoreSolutions,
        }
    })
    .unwrap();
    reg
}
