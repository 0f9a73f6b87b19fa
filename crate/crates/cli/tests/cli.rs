use std::process::{Command, Output};

use serde_json::Value;

fn repairopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repairopt"))
        .args(args)
        .env_remove("REPAIROPT_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

const GRID: [&str; 10] = ["--topology", "grid", "--rows", "2", "--cols", "3", "--k", "4", "--M", "8"];
const TANDEM: [&str; 8] = ["--topology", "tandem", "--n", "4", "--k", "2", "--M", "4"];

fn with<'a>(head: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    head.iter().chain(tail).copied().collect()
}

#[test]
fn verify_grid_integral_point() {
    let out = repairopt(&with(&["verify"], &with(&GRID, &["--z", "0,1,0,1,1,2,2"])));
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["feasible"], true);
    assert_eq!(v["cost"], "7");
}

#[test]
fn verify_rejects_zero_vector() {
    let out = repairopt(&with(&["verify"], &with(&TANDEM, &["--z", "0,0,0"])));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["feasible"], false);
}

#[test]
fn verify_named_links() {
    let out = repairopt(&with(&["verify"], &with(&TANDEM, &["--z", "2->3=2, 3->4=2"])));
    assert!(out.status.success());
    assert_eq!(json(&out)["cost"], "4");
    let bad = repairopt(&with(&["verify"], &with(&TANDEM, &["--z", "4->1=2"])));
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn solve_emits_value_vertex_and_dual() {
    let out = repairopt(&with(&["solve"], &with(&TANDEM, &["--granularity", "1"])));
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["status"], "optimal");
    assert_eq!(v["value"], "4");
    assert_eq!(v["z"]["2->3"], "2");
    assert_eq!(v["z"]["3->4"], "2");
    assert_eq!(v["dual_ok"], true);
    assert_eq!(v["brute_force"], "4");
}

#[test]
fn solve_with_k_zero_is_config_error() {
    let out = repairopt(&["solve", "--topology", "tandem", "--n", "4", "--k", "0", "--M", "4", "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.json");
    std::fs::write(&path, r#"{"n":0,"k":0,"alpha":"1","M":"1","failed":1,"cost":[]}"#).unwrap();
    let out = repairopt(&["solve", "--spec", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_rational_is_config_error() {
    let out = repairopt(&["solve", "--topology", "tandem", "--n", "4", "--k", "2", "--M", "four"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--M"));
}

#[test]
fn generated_spec_round_trips_through_file() {
    let gen = repairopt(&with(&["topology", "gen"], &GRID));
    assert!(gen.status.success());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.json");
    std::fs::write(&path, &gen.stdout).unwrap();
    let from_file = json(&repairopt(&["solve", "--spec", path.to_str().unwrap()]));
    let from_flags = json(&repairopt(&with(&["solve"], &GRID)));
    assert_eq!(from_file, from_flags);
    assert_eq!(from_flags["value"], "20/3");
}

#[test]
fn constraints_json_shape() {
    let v = json(&repairopt(&with(&["constraints"], &with(&TANDEM, &["--level", "nontrivial"]))));
    let edges = v["edge_index"].as_array().unwrap();
    let rows = v["L"].as_array().unwrap();
    assert_eq!(edges.len(), 3);
    assert_eq!(rows.len(), v["b"].as_array().unwrap().len());
    assert!(rows.iter().all(|r| r.as_array().unwrap().len() == edges.len()));
    let counts = &v["counts"];
    assert!(counts["raw"].as_u64() >= counts["nontrivial"].as_u64());
    assert!(counts["nontrivial"].as_u64() >= counts["reduced"].as_u64());
}

#[test]
fn code_report_is_reproducible_from_seed() {
    let args = with(&["code", "--seed", "9"], &GRID);
    let a = repairopt(&args);
    let b = repairopt(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["seed"], 9);
    assert_eq!(v["achieved_cost"], v["lp_value"]);
    assert_eq!(v["rcp_ok"], true);
    assert!(v.get("wall_time_ms").is_none());
}

#[test]
fn seed_falls_back_to_environment() {
    let flag = repairopt(&with(&["simulate", "--seed", "5", "--stages", "3"], &TANDEM));
    let env = Command::new(env!("CARGO_BIN_EXE_repairopt"))
        .args(with(&["simulate", "--stages", "3"], &TANDEM))
        .env("REPAIROPT_SEED", "5")
        .output()
        .unwrap();
    assert_eq!(flag.stdout, env.stdout);
    let v = json(&flag);
    assert_eq!(v["seed"], 5);
    let stages = v["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 3);
    for s in stages {
        for key in ["stage", "failed", "lp_value", "achieved_cost", "q", "n_nc", "d0", "rcp_ok", "seed"] {
            assert!(s.get(key).is_some(), "missing {key}");
        }
        assert_eq!(s["rcp_ok"], true);
    }
}

#[test]
fn timing_is_opt_in() {
    let v = json(&repairopt(&with(&["code", "--timing"], &TANDEM)));
    assert!(v["wall_time_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn simulate_many_runs() {
    let out = repairopt(&with(&["simulate", "--stages", "4", "--runs", "5", "--format", "csv"], &TANDEM));
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "seed,q,stages,all_ok,aborted");
    assert_eq!(lines.len(), 6);
    assert!(lines[1..].iter().all(|l| l.contains(",true,")));
}

#[test]
fn exact_repair_transcript() {
    let out = repairopt(&["exact-repair", "--n", "6", "--k", "3", "--q", "7", "--t", "3", "--k1", "1", "--k2", "2", "--trials", "100"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["repair"]["exact"], true);
    assert_eq!(v["repair"]["cost"], 3);
    assert_eq!(v["repair"]["hops"].as_array().unwrap().len(), 3);
    assert_eq!(v["trials"]["exact"], 100);
}

#[test]
fn bounds_csv_table() {
    let out = repairopt(&["bounds", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("topology,n,k,M,alpha,lp,closed_form,baseline,gain_published,gain_computed"));
    assert!(text.contains("tandem,4,2,4,2,4,4,6,5/2,3/2"));
    assert!(text.contains("star,6,3,9,3,7,7,9,9/7,9/7"));
}

#[test]
fn fixtures_table_reports_each_row() {
    let out = repairopt(&["fixtures", "--format", "text"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("name"));
    for name in ["tandem", "grid", "complete-3", "star-n6"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
    let failing = text.lines().any(|l| l.ends_with("FAIL"));
    assert_eq!(out.status.code(), Some(if failing { 1 } else { 0 }));
}

#[test]
fn out_dir_receives_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("reports");
    let out = repairopt(&with(&["solve", "--out", target.to_str().unwrap()], &TANDEM));
    assert!(out.status.success());
    let written = std::fs::read(target.join("solve.json")).unwrap();
    assert_eq!(written, out.stdout);
    let leftovers: Vec<_> = std::fs::read_dir(&target).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(leftovers.len(), 1);
}
