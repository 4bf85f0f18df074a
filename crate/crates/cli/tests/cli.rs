use std::path::Path;
use std::process::{Command, Output};

use qpath_core::harness::config::RunConfig;
use qpath_core::harness::report::parse_report;
use qpath_core::harness::{generate_instance, instance::simulate_point};
use serde_json::{json, Value};

fn qpath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpath"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, config: &Value) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn small(out: &Path) -> Value {
    json!({
        "schema": 1,
        "instance": {"kind": "maxcut-ring", "size": 4, "seed": 5},
        "training": {"samples": 40, "seed": 6},
        "output": {"dir": out}
    })
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn unknown_field_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &json!({"schema": 1, "kernal": {}}));
    let o = qpath(&["determine-state", "--config", &cfg, "--quiet"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn out_of_range_size_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &json!({"schema": 1, "instance": {"size": 40}}));
    assert_eq!(code(&qpath(&["full", "--config", &cfg, "--quiet"])), 2);
}

#[test]
fn missing_config_file_is_config_error() {
    assert_eq!(code(&qpath(&["validate", "--config", "/nonexistent/qpath.json"])), 2);
}

#[test]
fn single_sample_fit_at_origin_is_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(&dir.path().join("out"));
    c["state"] = json!({"theta0": {"kind": "zero"}, "method": "min-norm-single"});
    let cfg = write_config(dir.path(), &c);
    let o = qpath(&["determine-state", "--config", &cfg, "--quiet"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn corrupted_centering_fails_validate() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(&dir.path().join("out"));
    c["debug"] = json!({"corrupt_centering": true});
    let cfg = write_config(dir.path(), &c);
    let o = qpath(&["validate", "--config", &cfg, "--quiet"]);
    assert_eq!(code(&o), 1);
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.lines().any(|l| l.starts_with("FAIL") && l.contains("rows sum to zero")), "{table}");
}

#[test]
fn full_run_writes_consistent_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), &small(&out));
    let o = qpath(&["full", "--config", &cfg, "--format", "both", "--quiet"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let report = parse_report(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let pathway = report.pathway.as_ref().expect("full run has a pathway");
    assert!(out.join("timings.json").exists());

    let trace = std::fs::read_to_string(out.join("preimage_trace.csv")).unwrap();
    assert_eq!(trace.lines().count() - 1, pathway.preimage.iterations_used);

    let edges = std::fs::read_to_string(out.join("edge_comparison.csv")).unwrap();
    assert_eq!(edges.lines().count() - 1, pathway.comparison.len());
    for (line, c) in edges.lines().skip(1).zip(&pathway.comparison) {
        let star: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(star, c.omega_star);
    }

    let ratio = std::fs::read_to_string(out.join("ratio_test.csv")).unwrap();
    let rows = &report.state.ratio_test.as_ref().unwrap().rows;
    assert_eq!(ratio.lines().count() - 1, rows.len());
}

#[test]
fn gap_recomputes_from_serialized_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), &small(&out));
    assert_eq!(code(&qpath(&["determine-state", "--config", &cfg, "--quiet"])), 0);
    let report = parse_report(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let instance = generate_instance(&report.config.instance, &report.config.circuit).unwrap();
    let (f, _) = simulate_point(&instance, &report.state.theta_star).unwrap();
    // edge-sum vs full-objective evaluation may differ in the last bit
    assert!((f - report.state.f_sim).abs() <= 1e-12);
    assert!(((f - report.state.f_star).abs() - report.state.gap).abs() <= 1e-12);
}

#[test]
fn generated_graph_round_trips_as_file_instance() {
    let dir = tempfile::tempdir().unwrap();
    let gen_out = dir.path().join("gen");
    let mut c = small(&gen_out);
    c["instance"] = json!({"kind": "maxcut-random", "size": 5, "seed": 21});
    let cfg = write_config(dir.path(), &c);
    assert_eq!(code(&qpath(&["gen-instance", "--config", &cfg, "--quiet"])), 0);
    let graph = gen_out.join("graph.json");
    assert!(graph.exists());

    let run = |instance: Value, name: &str| {
        let out = dir.path().join(name);
        let mut c = small(&out);
        c["instance"] = instance;
        let sub = dir.path().join(format!("{name}-cfg"));
        std::fs::create_dir_all(&sub).unwrap();
        let cfg = write_config(&sub, &c);
        assert_eq!(code(&qpath(&["determine-state", "--config", &cfg, "--quiet"])), 0);
        parse_report(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
    };
    let generated = run(json!({"kind": "maxcut-random", "size": 5, "seed": 21}), "a");
    let from_file = run(json!({"kind": "file", "path": graph}), "b");
    assert_eq!(generated.state.theta_star, from_file.state.theta_star);
    assert_eq!(generated.state.f_sim, from_file.state.f_sim);
}

#[test]
fn seed_flag_replaces_config_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = qpath(&["determine-state", "--seed", seed, "--out", out.to_str().unwrap(), "--quiet"]);
        assert_eq!(code(&o), 0);
        std::fs::read_to_string(out.join("report.json")).unwrap()
    };
    let a: RunConfig = parse_report(&run("40", "a")).unwrap().config;
    assert_eq!(a.instance.seed, 40);
    assert_eq!(a.training.seed, 41);
    assert_eq!(a.preimage.seed, 42);
    let b = parse_report(&run("40", "b")).unwrap();
    let c = parse_report(&run("77", "c")).unwrap();
    let a = parse_report(&run("40", "a")).unwrap();
    assert_eq!(a.state.theta_star, b.state.theta_star);
    assert_ne!(a.state.theta_star, c.state.theta_star);
}
