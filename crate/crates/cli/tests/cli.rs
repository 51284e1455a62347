use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data")
        .join(name)
}

fn hatp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hatp"))
        .args(args)
        .env_remove("HATP_OUT_DIR")
        .output()
        .unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn plan_args<'a>(problem: &'a Path, out: &'a Path, extra: &[&'a str]) -> Vec<String> {
    let mut args = vec![
        "plan".to_string(),
        "--domain".into(),
        data("dwr.hatp").display().to_string(),
        "--problem".into(),
        problem.display().to_string(),
        "--out".into(),
        out.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    args
}

fn hatp_owned(args: &[String]) -> Output {
    hatp(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn optimize_writes_artifacts_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = hatp_owned(&plan_args(&data("dwr.hatpp"), dir.path(), &["--optimize"]));
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("totalCost: 23"), "{stdout}");
    assert!(stdout.contains("streams: K1, K2, R1"), "{stdout}");
    for f in ["plan.json", "streams.json", "streams.graph"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    assert!(!dir.path().join("filters.json").exists());
    let plan: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("plan.json")).unwrap())
            .unwrap();
    assert_eq!(plan["steps"].as_array().unwrap().len(), 11);
}

#[test]
fn json_and_graph_formats_print_the_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = hatp_owned(&plan_args(
        &data("dwr.hatpp"),
        dir.path(),
        &["--optimize", "--format", "json"],
    ));
    assert_eq!(
        text(&out.stdout),
        std::fs::read_to_string(dir.path().join("plan.json")).unwrap()
    );
    let out = hatp_owned(&plan_args(
        &data("dwr.hatpp"),
        dir.path(),
        &["--optimize", "--format", "graph"],
    ));
    assert_eq!(
        text(&out.stdout),
        std::fs::read_to_string(data("dwr_optimal.graph")).unwrap()
    );
}

#[test]
fn no_solution_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = hatp_owned(&plan_args(
        &data("unsat.hatpp"),
        dir.path(),
        &["--optimize"],
    ));
    assert_eq!(out.status.code(), Some(1));
    let stderr = text(&out.stderr);
    assert!(
        stderr.starts_with("no solution (search exhausted)\nstats: "),
        "{stderr}"
    );
}

#[test]
fn node_limit_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = hatp_owned(&plan_args(
        &data("dwr.hatpp"),
        dir.path(),
        &["--max-nodes", "2"],
    ));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.hatpp");
    let out = hatp_owned(&plan_args(&missing, dir.path(), &[]));
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("missing.hatpp"));

    let bad = dir.path().join("bad.hatpp");
    std::fs::write(&bad, "R1 = new Robot;\n").unwrap();
    let out = hatp_owned(&plan_args(&bad, dir.path(), &[]));
    assert_eq!(out.status.code(), Some(2));
    assert!(
        text(&out.stderr).starts_with(&format!("{}:1:", bad.display())),
        "{}",
        text(&out.stderr)
    );

    let cfg = dir.path().join("f.toml");
    std::fs::write(&cfg, "[filters]\nmax_wiat = 1\n").unwrap();
    let out = hatp_owned(&plan_args(
        &data("dwr.hatpp"),
        dir.path(),
        &["--filters", cfg.to_str().unwrap()],
    ));
    assert_eq!(out.status.code(), Some(2));

    let out = hatp(&["plan", "--first", "--optimize"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_reports_goal_errors_against_the_goal() {
    let domain = data("dwr.hatp");
    let problem = data("dwr.hatpp");
    let args = [
        "validate",
        "--domain",
        domain.to_str().unwrap(),
        "--problem",
        problem.to_str().unwrap(),
    ];
    let out = hatp(&args);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(text(&out.stdout), "ok\n");
    let out = hatp(&[&args[..], &["--goal", "Foo(C1);"]].concat());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(
        text(&out.stderr).lines().next().unwrap(),
        "<goal>:1:1: error: undefined task `Foo`"
    );
}

#[test]
fn filters_that_reject_every_plan_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("f.toml");
    std::fs::write(&cfg, "[filters]\nmax_intricacy = 0\n").unwrap();
    let out = hatp_owned(&plan_args(
        &data("dwr.hatpp"),
        dir.path(),
        &["--all", "--filters", cfg.to_str().unwrap()],
    ));
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("rejected by the filters"));

    std::fs::write(&cfg, "[filters]\nmax_intricacy = 100\n").unwrap();
    let out = hatp_owned(&plan_args(
        &data("dwr.hatpp"),
        dir.path(),
        &["--all=5", "--filters", cfg.to_str().unwrap()],
    ));
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("accepted"));
    assert!(dir.path().join("filters.json").is_file());
    assert!(dir.path().join("plans.json").is_file());
}

#[test]
fn stale_artifacts_are_removed() {
    let dir = tempfile::tempdir().unwrap();
    hatp_owned(&plan_args(&data("dwr.hatpp"), dir.path(), &["--all=5"]));
    assert!(dir.path().join("plans.json").is_file());
    hatp_owned(&plan_args(&data("dwr.hatpp"), dir.path(), &["--optimize"]));
    assert!(!dir.path().join("plans.json").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = hatp_owned(&plan_args(
            &data("dwr3.hatpp"),
            dir.path(),
            &["--all=10", "--seed", "5"],
        ));
        assert_eq!(out.status.code(), Some(0));
    }
    for f in ["plan.json", "plans.json", "streams.json", "streams.graph"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn out_dir_defaults_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hatp"))
        .args(["plan", "--domain", data("dwr.hatp").to_str().unwrap()])
        .args(["--problem", data("dwr.hatpp").to_str().unwrap()])
        .env("HATP_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("plan.json").is_file());
}

#[test]
fn classical_export_prints_atoms() {
    let domain = data("entities.hatp");
    let problem = data("state.hatpp");
    let out = hatp(&[
        "export",
        "classical",
        "--domain",
        domain.to_str().unwrap(),
        "--problem",
        problem.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        text(&out.stdout),
        std::fs::read_to_string(data("state.atoms")).unwrap()
    );
    assert!(text(&out.stdout).lines().any(|l| l == "attached(K1,L1)"));

    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.hatpp");
    std::fs::write(&empty, "").unwrap();
    let out = hatp(&[
        "export",
        "classical",
        "--domain",
        domain.to_str().unwrap(),
        "--problem",
        empty.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(text(&out.stdout), "");

    let args = [
        "export",
        "classical",
        "--format",
        "json",
        "--out",
        dir.path().to_str().unwrap(),
    ];
    let out = hatp(
        &[
            &args[..],
            &[
                "--domain",
                domain.to_str().unwrap(),
                "--problem",
                problem.to_str().unwrap(),
            ],
        ]
        .concat(),
    );
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("state.json")).unwrap())
            .unwrap();
    assert_eq!(json["atoms"].as_array().unwrap().len(), 19);
}

#[test]
fn graph_export_has_one_cluster_per_stream() {
    let domain = data("dwr.hatp");
    let problem = data("dwr.hatpp");
    let out = hatp(&[
        "export",
        "graph",
        "--optimize",
        "--domain",
        domain.to_str().unwrap(),
        "--problem",
        problem.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(text(&out.stdout).matches("subgraph cluster_").count(), 3);
}
