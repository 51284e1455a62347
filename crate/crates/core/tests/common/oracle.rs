//! Independent filter checker: recomputes every measure from a plan and
//! its stream decomposition without the library's scheduling or matching
//! code.

use std::collections::BTreeMap;

use hatp::planner::{plan, Plan, SearchMode, SearchOptions};
use hatp::social::{filter, FilterConfig, ForbiddenSequence, ImbalanceMode, Scope, StepPattern};
use hatp::streams::{split, StreamPlan};
use hatp::Rational;

fn r(n: i64) -> Rational {
    Rational::from_integer(n)
}

/// Measures recomputed from scratch for one plan.
pub struct Measures {
    pub wait: BTreeMap<String, Rational>,
    pub effort: BTreeMap<String, Rational>,
    pub links: usize,
    pub labels: Vec<String>,
    pub stream_labels: BTreeMap<String, Vec<String>>,
}

pub fn measure(
    p: &Plan<Rational>,
    sp: &StreamPlan,
    weights: &BTreeMap<String, Rational>,
) -> Measures {
    let n = p.len();
    let dur: Vec<Rational> = p
        .steps
        .iter()
        .map(|s| s.duration.unwrap_or(s.cost))
        .collect();
    let mut members: Vec<Vec<String>> = p
        .steps
        .iter()
        .map(|s| vec![s.args[0].to_string()])
        .collect();
    for g in &sp.joint_groups {
        for &i in &g.steps {
            members[i] = g.agents.clone();
        }
    }
    let mut edges = Vec::new();
    let agents: Vec<String> = sp.streams.keys().cloned().collect();
    for a in &agents {
        let mine: Vec<usize> = (0..n).filter(|&i| members[i].contains(a)).collect();
        edges.extend(mine.windows(2).map(|w| (w[0], w[1])));
    }
    edges.extend(sp.causal_links.iter().map(|k| (k.producer, k.consumer)));
    // Longest paths by relaxation until nothing changes.
    let mut start = vec![r(0); n];
    loop {
        let mut changed = false;
        for &(a, b) in &edges {
            if start[a] + dur[a] > start[b] {
                start[b] = start[a] + dur[a];
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut wait = BTreeMap::new();
    for a in &agents {
        let mine: Vec<usize> = (0..n).filter(|&i| members[i].contains(a)).collect();
        let busy: Rational = mine.iter().map(|&i| dur[i]).sum();
        let span = match (mine.first(), mine.last()) {
            (Some(&f), Some(&l)) => start[l] + dur[l] - start[f],
            _ => r(0),
        };
        wait.insert(a.clone(), span - busy);
    }
    let effort = sp
        .streams
        .iter()
        .map(|(a, steps)| {
            let total: Rational = steps.iter().map(|&i| p.steps[i].cost).sum();
            (a.clone(), total * weights.get(a).copied().unwrap_or(r(1)))
        })
        .collect();
    let labels: Vec<String> = p.steps.iter().map(|s| s.to_string()).collect();
    let stream_labels = sp
        .streams
        .iter()
        .map(|(a, s)| (a.clone(), s.iter().map(|&i| labels[i].clone()).collect()))
        .collect();
    Measures {
        wait,
        effort,
        links: sp.causal_links.len(),
        labels,
        stream_labels,
    }
}

fn label_matches(pattern: &str, label: &str) -> bool {
    let (pname, pargs) = match pattern.split_once('(') {
        Some((n, rest)) => (n, Some(rest.trim_end_matches(')'))),
        None => (pattern, None),
    };
    let (lname, rest) = label.split_once('(').unwrap();
    let largs: Vec<&str> = rest
        .trim_end_matches(')')
        .split(',')
        .filter(|a| !a.is_empty())
        .collect();
    if pname != "*" && pname != lname {
        return false;
    }
    match pargs {
        None => true,
        Some(a) => {
            let pargs: Vec<&str> = a.split(',').filter(|a| !a.is_empty()).collect();
            pargs.len() == largs.len() && pargs.iter().zip(&largs).all(|(p, l)| *p == "*" || p == l)
        }
    }
}

fn contains_run(labels: &[String], pattern: &[&str]) -> bool {
    labels
        .windows(pattern.len())
        .any(|w| w.iter().zip(pattern).all(|(l, p)| label_matches(p, l)))
}

#[derive(Clone, Default)]
pub struct Thresholds {
    pub wait: Option<i64>,
    pub imbalance: Option<(i64, ImbalanceMode)>,
    pub intricacy: Option<usize>,
    pub forbidden: Option<(Scope, Vec<&'static str>)>,
}

pub fn verdict(m: &Measures, t: &Thresholds) -> bool {
    if let Some(w) = t.wait {
        if m.wait.values().any(|v| *v > r(w)) {
            return false;
        }
    }
    if let Some((limit, mode)) = t.imbalance {
        let hi = m.effort.values().max().copied().unwrap_or(r(0));
        let lo = m.effort.values().min().copied().unwrap_or(r(0));
        let over = match mode {
            ImbalanceMode::Difference => hi - lo > r(limit),
            ImbalanceMode::Ratio if lo == r(0) => hi != r(0) || r(1) > r(limit),
            ImbalanceMode::Ratio => hi / lo > r(limit),
        };
        if over {
            return false;
        }
    }
    if let Some(limit) = t.intricacy {
        if m.links > limit {
            return false;
        }
    }
    if let Some((scope, pattern)) = &t.forbidden {
        let hit = match scope {
            Scope::Global => contains_run(&m.labels, pattern),
            Scope::PerStream => m.stream_labels.values().any(|ls| contains_run(ls, pattern)),
        };
        if hit {
            return false;
        }
    }
    true
}

pub fn config(t: &Thresholds, weights: &BTreeMap<String, Rational>) -> FilterConfig<Rational> {
    FilterConfig {
        max_wait: t.wait.map(r),
        max_effort_imbalance: t.imbalance.map(|(l, _)| r(l)),
        imbalance_mode: t.imbalance.map(|(_, m)| m).unwrap_or_default(),
        max_intricacy: t.intricacy,
        forbidden: t
            .forbidden
            .iter()
            .map(|(scope, pat)| ForbiddenSequence {
                scope: *scope,
                pattern: pat
                    .iter()
                    .map(|p| p.parse::<StepPattern>().unwrap())
                    .collect(),
            })
            .collect(),
        agent_weights: weights.clone(),
    }
}

pub fn sweeps() -> Vec<Thresholds> {
    let waits = [0, 1, 2, 5, 10];
    let imbalances = [
        (0, ImbalanceMode::Difference),
        (2, ImbalanceMode::Difference),
        (6, ImbalanceMode::Difference),
        (2, ImbalanceMode::Ratio),
        (4, ImbalanceMode::Ratio),
    ];
    let intricacies = [0, 1, 2, 4, 8];
    let forbidden: [(Scope, Vec<&'static str>); 5] = [
        (Scope::Global, vec!["Go"]),
        (Scope::PerStream, vec!["Pick(*,*,*)", "Go"]),
        (Scope::Global, vec!["Drop", "Pick"]),
        (Scope::PerStream, vec!["Hand"]),
        (Scope::Global, vec!["Go(*,L1,*)", "*"]),
    ];
    let mut out = Vec::new();
    for i in 0..5 {
        out.push(Thresholds {
            wait: Some(waits[i]),
            ..Thresholds::default()
        });
        out.push(Thresholds {
            imbalance: Some(imbalances[i]),
            ..Thresholds::default()
        });
        out.push(Thresholds {
            intricacy: Some(intricacies[i]),
            ..Thresholds::default()
        });
        out.push(Thresholds {
            forbidden: Some(forbidden[i].clone()),
            ..Thresholds::default()
        });
        out.push(Thresholds {
            wait: Some(waits[i]),
            imbalance: Some(imbalances[(i + 2) % 5]),
            intricacy: Some(intricacies[4 - i]),
            forbidden: Some(forbidden[(i + 1) % 5].clone()),
        });
    }
    out
}

/// Runs `filter` and the checker over every threshold sweep on the
/// enumerated plans of each seed's micro domain and asserts they agree.
/// Returns the number of plans, and accepted and rejected verdicts.
pub fn agreement(seeds: std::ops::Range<u64>) -> (usize, usize, usize) {
    let mut plans_checked = 0;
    let mut accepted = 0;
    let mut rejected = 0;
    for seed in seeds {
        let m = super::micro(seed);
        let l = super::load_text(&m.domain, &m.problem);
        let opts = SearchOptions::with_mode(SearchMode::AllSolutions(500));
        let Ok(res) = plan(&l.model, &l.s0, &l.goal, opts, &l.registry) else {
            continue;
        };
        let weights: BTreeMap<String, Rational> = if seed % 3 == 0 {
            [("R1".to_string(), Rational::new(1, 2))].into()
        } else {
            BTreeMap::new()
        };
        let measures: Vec<Measures> = res
            .plans
            .iter()
            .map(|p| {
                measure(
                    p,
                    &split(p, &l.s0, &l.model, &l.registry).unwrap(),
                    &weights,
                )
            })
            .collect();
        for t in sweeps() {
            let out = filter(
                &res.plans,
                &config(&t, &weights),
                &l.model,
                &l.s0,
                &l.registry,
            )
            .unwrap();
            let expected: Vec<usize> = (0..res.plans.len())
                .filter(|&i| verdict(&measures[i], &t))
                .collect();
            assert_eq!(out.accepted, expected, "seed {seed}");
            for (v, m) in out.report.verdicts.iter().zip(&measures) {
                assert_eq!(v.wait, m.wait, "seed {seed}");
                assert_eq!(v.effort, m.effort, "seed {seed}");
                assert_eq!(v.intricacy, m.links, "seed {seed}");
            }
            accepted += expected.len();
            rejected += res.plans.len() - expected.len();
        }
        plans_checked += res.plans.len();
    }
    (plans_checked, accepted, rejected)
}
