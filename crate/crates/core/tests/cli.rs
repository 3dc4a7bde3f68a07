use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cmpnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmpnet")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Root 100 above hub 50, which has eight children, each with one leaf.
fn hub_graph(dir: &Path) -> std::path::PathBuf {
    let mut text = String::from("100 50\n");
    for c in 1..=8 {
        text += &format!("50 {c}\n{c} {}\n", c + 10);
    }
    let p = dir.join("hub.txt");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn query_ht_worked_example() {
    let o = cmpnet(&["query-ht", "0", "0", "12"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["leaf_parent"]["label"], 0);
    assert_eq!(v["nonleaf_parent"]["label"], 1);
    assert_eq!(v["nonleaf_left"]["kind"], "Leaf");
}

#[test]
fn query_ht_last_value_is_leaf_only() {
    let o = cmpnet(&["query-ht", "12", "0", "12"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert!(v["nonleaf_parent"].is_null() && v["nonleaf_left"].is_null() && v["nonleaf_right"].is_null());
}

#[test]
fn query_ht_out_of_range_is_a_usage_error() {
    let o = cmpnet(&["query-ht", "13", "0", "12"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(code(&cmpnet(&["preprocess", "--policy", "sideways"])), 2);
    assert_eq!(code(&cmpnet(&["frobnicate"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let g = hub_graph(dir.path());
    // one-round wills need node-chosen reads
    assert_eq!(code(&cmpnet(&["preprocess", "--graph", path_str(&g), "--policy", "rand:1"])), 2);
    assert_eq!(code(&cmpnet(&["preprocess", "--graph", path_str(&g), "--b", "1"])), 2);
}

#[test]
fn missing_or_bad_graph_files_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cmpnet(&["preprocess", "--graph", "/nonexistent/g.txt"])), 2);
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1 2\n3 3\n").unwrap();
    let o = cmpnet(&["preprocess", "--graph", path_str(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn gen_preprocess_route() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    let snap = dir.path().join("snap.json");
    let report = dir.path().join("report.json");
    let csv = dir.path().join("report.csv");
    let o = cmpnet(&["gen", "gnp-connected", "--n", "40", "--p", "0.1", "--seed", "3", "--out", path_str(&g)]);
    assert_eq!(code(&o), 0);
    let o = cmpnet(&[
        "preprocess",
        "--graph",
        path_str(&g),
        "--snapshot",
        path_str(&snap),
        "--out",
        path_str(&report),
        "--csv",
        path_str(&csv),
        "--labels",
        "small",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("PASS compact_ftz"));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["graph"]["n"], 40);
    assert!(r["audit"].as_array().unwrap().is_empty());
    assert!(std::fs::read_to_string(&csv).unwrap().lines().count() > 5);

    let o = cmpnet(&["route", "--snapshot", path_str(&snap), "5", "5"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["packet"]["hop_count"], 0);
    let o = cmpnet(&["route", "--snapshot", path_str(&snap), "0", "39"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["delivered"], true);
    assert_eq!(code(&cmpnet(&["route", "--snapshot", path_str(&snap), "0", "999"])), 2);
    assert_eq!(code(&cmpnet(&["route", "--snapshot", path_str(&snap), "--max-hops", "0", "0", "39"])), 1);
}

#[test]
fn adversarial_preprocess_passes() {
    let dir = tempfile::tempdir().unwrap();
    let g = hub_graph(dir.path());
    let o = cmpnet(&["preprocess", "--graph", path_str(&g), "--policy", "strong", "--wills", "adversarial"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = stdout_json(&o);
    let names: Vec<&str> = r["stages"].as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"wills_adversarial"));
}

#[test]
fn failing_bounds_exit_with_a_fault() {
    let dir = tempfile::tempdir().unwrap();
    let g = hub_graph(dir.path());
    let bounds = dir.path().join("bounds.toml");
    std::fs::write(&bounds, "slack = 0.0\n[tz_big]\nrounds = 0.01\nmessages = 0.01\n").unwrap();
    let o = cmpnet(&["preprocess", "--graph", path_str(&g), "--bounds", path_str(&bounds)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL tz_big"));
}

#[test]
fn delete_then_route_across_the_hole() {
    let dir = tempfile::tempdir().unwrap();
    let g = hub_graph(dir.path());
    let snap = dir.path().join("snap.json");
    let healed = dir.path().join("healed.json");
    assert_eq!(code(&cmpnet(&["preprocess", "--graph", path_str(&g), "--snapshot", path_str(&snap)])), 0);

    let o = cmpnet(&["delete", "--snapshot", path_str(&snap), "50", "--out", path_str(&healed)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let h = stdout_json(&o);
    assert_eq!(h["delta"], 8);
    assert_eq!(h["virtual_nodes"], 7);

    let mut crossed_virtual = false;
    for s in 11..=18 {
        for t in 11..=18 {
            let o = cmpnet(&["route", "--snapshot", path_str(&healed), &s.to_string(), &t.to_string()]);
            assert_eq!(code(&o), 0, "{s} -> {t}");
            crossed_virtual |= String::from_utf8_lossy(&o.stdout).contains("Virtual");
        }
    }
    assert!(crossed_virtual);
    assert_eq!(code(&cmpnet(&["route", "--snapshot", path_str(&healed), "11", "100"])), 0);
    // the deleted node is gone
    assert_eq!(code(&cmpnet(&["route", "--snapshot", path_str(&healed), "11", "50"])), 2);
}

#[test]
fn unsupported_deletions_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let g = hub_graph(dir.path());
    let snap = dir.path().join("snap.json");
    let healed = dir.path().join("healed.json");
    assert_eq!(code(&cmpnet(&["preprocess", "--graph", path_str(&g), "--snapshot", path_str(&snap)])), 0);
    assert_eq!(code(&cmpnet(&["delete", "--snapshot", path_str(&snap), "100"])), 3);
    assert_eq!(code(&cmpnet(&["delete", "--snapshot", path_str(&snap), "11"])), 3);
    assert_eq!(code(&cmpnet(&["delete", "--snapshot", path_str(&snap), "50", "--out", path_str(&healed)])), 0);
    assert_eq!(code(&cmpnet(&["delete", "--snapshot", path_str(&healed), "3"])), 3);
}

#[test]
fn sweep_writes_one_header() {
    let o = cmpnet(&["sweep", "--kind", "random-tree", "--sizes", "16,32", "--seeds", "1,2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let rows = rd.records().count();
    assert_eq!(text.lines().filter(|l| l.starts_with("n,")).count(), 1);
    assert_eq!(rows, 4 * 7);
}
