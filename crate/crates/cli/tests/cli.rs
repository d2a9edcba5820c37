use std::path::Path;
use std::process::Command;

use qmx_cli::{emit, load_scenario, parse_scenario, run, scenarios_dir, to_json, CliError, Format, TaskStatus};

const MINIMAL_F2: &str = r#"{
  "name": "f2",
  "group": { "type": "free", "generators": ["a", "b"] },
  "quasimorphisms": [{ "name": "brooks_ab", "kind": "brooks", "domain": "G", "pattern": "a b" }],
  "tasks": [],
  "budgets": { "max_ball_elements": 100000, "max_candidates": 100000 },
  "seed": 1
}"#;

fn qmx() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qmx"))
}

fn schema_path(e: CliError) -> String {
    match e {
        CliError::Schema { path, .. } => path,
        other => panic!("expected a schema error, got {other}"),
    }
}

#[test]
fn invalid_fixtures_report_paths() {
    let dir = scenarios_dir().join("invalid");
    let e = load_scenario(&dir.join("lambda_too_large.json")).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert_eq!(schema_path(e), "group.lambda");
    let e = load_scenario(&dir.join("missing_k_pool.json")).unwrap_err();
    assert_eq!(schema_path(e), "relative.K_pool");
}

#[test]
fn empty_task_list_echoes_scenario() {
    let sc = parse_scenario(MINIMAL_F2).unwrap();
    let report = run(&sc, None).unwrap();
    assert!(report.tasks.is_empty());
    assert_eq!(report.exit_code(), 0);
    assert_eq!(report.seed, 1);
    assert_eq!(report.scenario["name"], "f2");
}

#[test]
fn seed_override_changes_only_the_seed() {
    let sc = parse_scenario(MINIMAL_F2).unwrap();
    let a = run(&sc, Some(99)).unwrap();
    assert_eq!(a.seed, 99);
    assert_eq!(to_json(&a), to_json(&run(&sc, Some(99)).unwrap()));
}

#[test]
fn csv_bundle_has_one_file_per_task() {
    let text = MINIMAL_F2.replace(
        r#""tasks": []"#,
        r#""tasks": [
            { "name": "scl-bounds", "params": { "elements": ["[a,b]"], "ns": [1], "q": 1, "radius": 2, "family": ["brooks_ab"] } },
            { "name": "small-cancellation-search", "params": { "syllable_pairs": 8, "lambda": "1/6", "attempts": 200, "conjugate_products": 5 } }
        ]"#,
    );
    let sc = parse_scenario(&text).unwrap();
    let report = run(&sc, None).unwrap();
    assert!(report.all_ok(), "{:?}", report.tasks.iter().map(|t| &t.error).collect::<Vec<_>>());
    let dir = tempfile::tempdir().unwrap();
    let files = emit(&report, Format::Csv, dir.path()).unwrap();
    let names: Vec<String> = files.iter().map(|f| f.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["00_scl-bounds.csv", "01_small-cancellation-search.csv"]);
    let first = std::fs::read_to_string(&files[0]).unwrap();
    assert!(first.lines().count() >= 2);

    let files = emit(&report, Format::Json, dir.path()).unwrap();
    let json = std::fs::read_to_string(&files[0]).unwrap();
    assert_eq!(json, to_json(&report));
    assert!(json.ends_with('\n'));
}

#[test]
fn unknown_task_is_a_schema_error() {
    let text = MINIMAL_F2.replace(r#""tasks": []"#, r#""tasks": [{ "name": "frobnicate", "params": {} }]"#);
    let e = parse_scenario(&text).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.json", MINIMAL_F2);
    let out = dir.path().join("out");
    let s = qmx().args(["run", &ok, "--out"]).arg(&out).status().unwrap();
    assert_eq!(s.code(), Some(0));
    assert!(out.join("report.json").exists());

    let s = qmx().args(["validate", &ok]).status().unwrap();
    assert_eq!(s.code(), Some(0));

    let broken = write(dir.path(), "broken.json", "{ not json");
    assert_eq!(qmx().args(["validate", &broken]).status().unwrap().code(), Some(2));

    let invalid = scenarios_dir().join("invalid").join("lambda_too_large.json");
    assert_eq!(qmx().arg("validate").arg(&invalid).status().unwrap().code(), Some(2));

    let tight = MINIMAL_F2
        .replace(r#""max_ball_elements": 100000"#, r#""max_ball_elements": 10"#)
        .replace(
            r#""tasks": []"#,
            r#""tasks": [{ "name": "scl-bounds", "params": { "elements": ["[a,b]"], "ns": [1], "q": 1, "radius": 3, "family": ["brooks_ab"] } }]"#,
        );
    let tight = write(dir.path(), "tight.json", &tight);
    let s = qmx().args(["run", &tight, "--out"]).arg(&out).status().unwrap();
    assert_eq!(s.code(), Some(4));

    let list = qmx().args(["scenarios", "list"]).output().unwrap();
    let names = String::from_utf8(list.stdout).unwrap();
    assert!(names.lines().any(|l| l == "scenario_A"));
}

#[test]
fn budget_exceeded_is_reported_per_task() {
    let text = MINIMAL_F2.replace(r#""max_ball_elements": 100000"#, r#""max_ball_elements": 10"#).replace(
        r#""tasks": []"#,
        r#""tasks": [{ "name": "scl-bounds", "params": { "elements": ["[a,b]"], "ns": [1], "q": 1, "radius": 3, "family": ["brooks_ab"] } }]"#,
    );
    let report = run(&parse_scenario(&text).unwrap(), None).unwrap();
    assert_eq!(report.tasks[0].status, TaskStatus::BudgetExceeded);
    assert_eq!(report.exit_code(), 4);
}
