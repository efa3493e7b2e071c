use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tangentscope_core::dyadic::DyadicStep2D;
use tangentscope_core::{ArcSet, GridFunction};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tangentscope")).args(args).output().expect("binary runs")
}

fn run_in(out: &Path, args: &[&str]) -> Output {
    let mut all = vec!["--out", out.to_str().unwrap()];
    all.extend_from_slice(args);
    run(&all)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn plain_region_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["pi", "--functional", "plain", "--kernel", "poisson", "--curve", "nontangential:c=1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "delta,r,value");
    assert_eq!(rows.len(), 21);
    assert!(rows[1..].iter().all(|r| r.starts_with(',')));
    let s = json(&dir.path().join("summary.json"));
    assert!((s["estimate"].as_f64().unwrap() - 1.0 / std::f64::consts::PI).abs() < 1e-3);
    assert_eq!(s["context"]["eps"].as_array().unwrap().len(), 20);
    assert!(dir.path().join("run.json").exists());
}

#[test]
fn window_functional_table_has_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["pi", "--functional", "star", "--rmax-exponent", "12", "--deltas", "4"]);
    assert_eq!(code(&o), 0);
    let table = fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 4 * 12);
    assert!(table.lines().nth(1).unwrap().starts_with("0.5,"));
}

#[test]
fn nontangential_littlewood_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["counterexample", "littlewood", "--curve", "nontangential:c=1", "--depth", "2"]);
    assert_eq!(code(&o), 2);
    let d = json(&dir.path().join("diagnostic.json"));
    assert_eq!(d["code"], "condition_failed");
    assert!(d["details"]["pi_star"].as_f64().unwrap() <= 0.5);
    let stderr: Value = serde_json::from_slice(o.stderr.trim_ascii()).expect("stderr carries the diagnostic as JSON");
    assert_eq!(stderr, d);
    assert!(!dir.path().join("E.csv").exists());
}

#[test]
fn saks_beyond_one_stage_is_refused_with_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["dyadic", "saks", "--delta", "1,2,3,100", "--K", "2"]);
    assert_eq!(code(&o), 2);
    let d = json(&dir.path().join("diagnostic.json"));
    assert_eq!(d["code"], "resolution_cap");
    assert_eq!(d["stage"], 2);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(dir.path(), &["pi", "--functional", "nope"])), 1);
    assert_eq!(code(&run(&["pi", "--functional", "plain"])), 1, "missing --out");
    assert_eq!(code(&run_in(dir.path(), &["dyadic", "saks", "--delta", "3,2"])), 1);
    assert_eq!(code(&run_in(dir.path(), &["dyadic", "l4", "--L", "1"])), 1);
    assert_eq!(code(&run_in(dir.path(), &["converge", "--preset", "step", "--kernel", "gauss"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&run(&["--config", missing.to_str().unwrap()])), 1);
}

#[test]
fn l4_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let o = run_in(&first, &["dyadic", "l4", "--L", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let w = json(&first.join("witnesses.json"));
    assert_eq!(w["holds"], true);
    assert_eq!(w["audit"]["params"]["alpha"], 68);

    // replay into a fresh directory, then in place
    let second = dir.path().join("second");
    let cfg = first.join("run.json");
    assert_eq!(code(&run(&["--config", cfg.to_str().unwrap(), "--out", second.to_str().unwrap()])), 0);
    for name in ["f.csv", "witnesses.json"] {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
    let before: Vec<Vec<u8>> =
        ["f.csv", "witnesses.json", "run.json"].iter().map(|n| fs::read(first.join(n)).unwrap()).collect();
    assert_eq!(code(&run(&["--config", cfg.to_str().unwrap()])), 0);
    let after: Vec<Vec<u8>> =
        ["f.csv", "witnesses.json", "run.json"].iter().map(|n| fs::read(first.join(n)).unwrap()).collect();
    assert_eq!(before, after);

    let f = DyadicStep2D::read_node_csv(BufReader::new(fs::File::open(first.join("f.csv")).unwrap())).unwrap();
    assert_eq!(f.resolution(), 68);
    assert!(f.marginals_vanish());
}

#[test]
fn config_and_subcommand_are_exclusive() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(dir.path(), &["dyadic", "l4", "--L", "2"])), 0);
    let cfg = dir.path().join("run.json");
    let o = run(&["--config", cfg.to_str().unwrap(), "dyadic", "l4", "--L", "2"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn cover_sweep_reports_every_rectangle() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["dyadic", "cover", "--delta", "2,4,6,8,10", "--count", "200"]);
    assert_eq!(code(&o), 0);
    let covers = fs::read_to_string(dir.path().join("covers.csv")).unwrap();
    assert_eq!(covers.lines().count(), 201);
    assert!(covers.lines().skip(1).all(|l| l.ends_with(",true")));
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["failures"], 0);
    assert_eq!(s["gamma"], 2);
}

#[test]
fn quasi_search_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let found = dir.path().join("found");
    let o = run_in(&found, &["dyadic", "quasi", "--rect", "1,1,3,5", "--pieces", "evens:10", "--c", "4"]);
    assert_eq!(code(&o), 0);
    let c = json(&found.join("certificate.json"));
    assert_eq!(c["result"]["outcome"], "found");
    assert_eq!(c["validated"], true);

    let missing = dir.path().join("missing");
    let o = run_in(&missing, &["dyadic", "quasi", "--rect", "1,1,1,12", "--pieces", "squares", "--c", "2"]);
    assert_eq!(code(&o), 0, "a bounded search failure is a result, not a refusal");
    let c = json(&missing.join("certificate.json"));
    assert_eq!(c["result"]["outcome"], "not_found_within_bounds");
    assert!(c["validated"].is_null());
}

#[test]
fn signal_files_round_trip_through_converge_and_maximal() {
    let dir = tempfile::tempdir().unwrap();
    let f = GridFunction::indicator(&ArcSet::arc(0.0, std::f64::consts::PI), 512).unwrap();
    let path = dir.path().join("step.csv");
    f.write_csv(fs::File::create(&path).unwrap()).unwrap();

    let conv = dir.path().join("conv");
    let o = run_in(&conv, &["converge", "--f", path.to_str().unwrap(), "--rmax-exponent", "10", "--fejer-orders", "64"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&conv.join("summary.json"));
    assert_eq!(s["f_x"], 1.0);
    assert!(s["final_max_error"].as_f64().unwrap() < 0.05);
    assert_eq!(s["fejer"]["errors"].as_array().unwrap().len(), 1);

    let max = dir.path().join("max");
    let o = run_in(&max, &["maximal", "--f", path.to_str().unwrap(), "--rmax-exponent", "8"]);
    assert_eq!(code(&o), 0);
    let values = GridFunction::read_csv(fs::File::open(max.join("values.csv")).unwrap()).unwrap();
    assert_eq!(values.n(), 512);
    // away from the jumps the finest radius already recovers f, so Mf ≥ 0.9|f| there
    let n = 512usize;
    let flat = |i: usize| (0..=8).all(|d| f.samples()[(i + n + d - 4) % n] == f.samples()[i]);
    assert!((0..n).filter(|&i| flat(i)).all(|i| values.samples()[i] >= 0.9 * f.samples()[i]));
    let s = json(&max.join("summary.json"));
    assert!(s["best_constant"].as_f64().unwrap() > 0.0);
    assert!(s["max_ratio"].as_f64().unwrap().is_finite());
}

#[test]
fn arcs_and_presets_drive_oscillation() {
    let dir = tempfile::tempdir().unwrap();
    let arcs = dir.path().join("arcs.csv");
    ArcSet::from_arcs([(0.5, 1.0), (2.0, 4.0)]).write_csv(fs::File::create(&arcs).unwrap()).unwrap();
    let out = dir.path().join("osc");
    let o = run_in(&out, &["osc", "--arcs", arcs.to_str().unwrap(), "--samples", "8", "--grid", "1024"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&out.join("summary.json"));
    let q = &s["quantiles"];
    assert!(q["min"].as_f64().unwrap() <= q["median"].as_f64().unwrap());
    assert!(q["median"].as_f64().unwrap() <= q["max"].as_f64().unwrap());
    assert_eq!(fs::read_to_string(out.join("osc.csv")).unwrap().lines().count(), 9);

    // a constant has no oscillation at all
    let out = dir.path().join("const");
    assert_eq!(code(&run_in(&out, &["osc", "--preset", "const", "--samples", "4", "--grid", "256"])), 0);
    assert!(json(&out.join("summary.json"))["quantiles"]["max"].as_f64().unwrap() < 1e-9);
    // signal sources are mutually exclusive
    assert_eq!(code(&run_in(&out, &["osc", "--preset", "const", "--arcs", arcs.to_str().unwrap()])), 1);
}

#[test]
fn blaschke_writes_boundary_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        &["counterexample", "blaschke", "--curve", "power:c=1,alpha=0.5", "--depth", "2", "--samples", "16", "--grid", "1024"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let b = fs::read_to_string(dir.path().join("B.csv")).unwrap();
    assert_eq!(b.lines().count(), 1025);
    let s = json(&dir.path().join("stages.json"));
    assert_eq!(s["stages"].as_array().unwrap().len(), 2);
    assert_eq!(s["context"]["grid"], 1024);
    assert!(s["unimodularity_drift"].as_f64().unwrap() < 1e-9);
}
