//! End-to-end checks of the `laminar` binary: exit codes, artifact emission,
//! JSON validity, and byte-level determinism of CSV outputs.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_laminar"))
}

fn write(dir: &Path, name: &str, contents: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn run_ok(output: Output) -> String {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).unwrap()
}

const WORKED_GRAPHS: &str = r#"[
    {"layer1_size":30,"layer2_size":30,"preset":"diffusion"},
    {"layer1_size":30,"layer2_size":30,"preset":"contact"}]"#;

#[test]
fn graph_subcommand_emits_edges_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "graph.json",
        r#"{"layer1_size":10,"layer2_size":10,"preset":"contact"}"#,
    );
    let out = tmp.path().join("artifacts");
    let stdout = run_ok(
        bin()
            .args(["graph", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap(),
    );
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["vertices"], 20);
    assert_eq!(report["connected"], true);
    assert_eq!(report["semi_regular"], true);
    assert_eq!(report["bipartite"], false);

    let edges = std::fs::read_to_string(out.join("edges.csv")).unwrap();
    assert!(edges.starts_with("u,v\n"));
    // 10 cells/layer with degree (2+2): 2*10 ring edges + 2*10 cross edges
    assert_eq!(edges.lines().count() - 1, 40);
}

#[test]
fn bad_config_exits_with_code_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.json", r#"{"layer1_size":10,"bogus":true}"#);
    let output = bin()
        .args(["graph", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));

    let missing = bin().args(["graph"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn hss_defaults_report_steady_state_and_sign_class() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = run_ok(bin().args(["hss", "--out"]).arg(tmp.path()).output().unwrap());
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let x = report["x"].as_array().unwrap();
    assert!((x[0].as_f64().unwrap() - 0.18).abs() < 0.01);
    assert!((x[1].as_f64().unwrap() - 0.03).abs() < 0.01);
    assert!((x[2].as_f64().unwrap() - 0.05).abs() < 0.01);
    assert_eq!(report["sign_class"], "S1");
    assert!(report["max_real_part"].as_f64().unwrap() < 0.0);
}

#[test]
fn spectrum_flags_lambda2_at_the_minimum_for_strong_polarity() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "spec.json",
        r#"{"graph":{"layer1_size":30,"layer2_size":30,"preset":"contact"},
            "weights":{"w1":0.1,"w2":1.0}}"#,
    );
    let stdout = run_ok(
        bin()
            .args(["spectrum", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(tmp.path())
            .output()
            .unwrap(),
    );
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["index"], 1);
    assert_eq!(report["is_min"], true);

    let csv = std::fs::read_to_string(tmp.path().join("spectrum.csv")).unwrap();
    let first_row = csv.lines().nth(1).unwrap();
    assert!(first_row.starts_with("1,"));
    assert!(first_row.ends_with(",1"));
    assert_eq!(csv.lines().count() - 1, 60);
}

#[test]
fn quotient_reports_closed_form_values() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "quot.json",
        r#"{"graph":{"layer1_size":30,"layer2_size":30,"preset":"diffusion"},
            "weights":{"w1":0.6,"w2":1.0}}"#,
    );
    let stdout = run_ok(
        bin()
            .args(["quotient", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(tmp.path())
            .output()
            .unwrap(),
    );
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!((report["a"].as_f64().unwrap() - 1.2 / 5.2).abs() < 1e-10);
    assert!((report["lambda2"].as_f64().unwrap() + 0.538461538462).abs() < 1e-9);
    assert!(report["intertwining_residual"].as_f64().unwrap() <= 1e-12);
    let lifted = report["lifted_eigenvector"].as_array().unwrap();
    assert_eq!(lifted.len(), 60);
    assert!(lifted[0].as_f64().unwrap() > 0.0);
    assert!(lifted[59].as_f64().unwrap() < 0.0);
}

#[test]
fn stability_verdict_matches_region_membership() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "stab.json",
        &format!(r#"{{"graphs":{WORKED_GRAPHS},"w1":[0.4,0.1]}}"#),
    );
    let stdout = run_ok(
        bin()
            .args(["stability", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(tmp.path())
            .output()
            .unwrap(),
    );
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["unstable"], true);
    assert_eq!(report["monotone_polarity_ok"], true);
    assert_eq!(report["lambda2_is_min"][0], true);
    assert_eq!(report["lambda2_is_min"][1], true);
    assert_eq!(report["type_k_ok"], true);
}

#[test]
fn quotient_simulation_is_deterministic_and_laminar() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "sim.json",
        &format!(
            r#"{{"graphs":{WORKED_GRAPHS},"w1":[0.6,0.02],"quotient":true,"seed":7}}"#
        ),
    );
    let out1 = tmp.path().join("run1");
    let out2 = tmp.path().join("run2");
    let stdout1 = run_ok(
        bin()
            .args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out1)
            .output()
            .unwrap(),
    );
    let report: serde_json::Value = serde_json::from_str(&stdout1).unwrap();
    assert_eq!(report["class"], "laminar");
    assert_eq!(report["converged"], true);

    run_ok(
        bin()
            .args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out2)
            .output()
            .unwrap(),
    );
    // identical config and seed reproduce byte-identical artifacts
    for name in ["trajectory.csv", "snapshot.csv", "snapshot.svg"] {
        let a = std::fs::read(out1.join(name)).unwrap();
        let b = std::fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    let svg = std::fs::read_to_string(out1.join("snapshot.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));

    // a different seed moves the trajectory artifact
    let out3 = tmp.path().join("run3");
    run_ok(
        bin()
            .args(["simulate", "--seed", "8", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out3)
            .output()
            .unwrap(),
    );
    let a = std::fs::read(out1.join("trajectory.csv")).unwrap();
    let c = std::fs::read(out3.join("trajectory.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn sweep_emits_regions_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "sweep.json",
        &format!(
            r#"{{"graphs":{WORKED_GRAPHS},"grid":{{"n1":6,"n2":6,"min":0.02,"max":1.6}}}}"#
        ),
    );
    let out1 = tmp.path().join("s1");
    let out2 = tmp.path().join("s2");
    let stdout = run_ok(
        bin()
            .args(["sweep", "--threads", "3", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out1)
            .output()
            .unwrap(),
    );
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["cells"], 36);
    assert_eq!(report["failed"], 0);
    assert!(report["exists"].as_u64().unwrap() > 0);
    assert!(report["converges"].as_u64().unwrap() > 0);

    run_ok(
        bin()
            .args(["sweep", "--threads", "1", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out2)
            .output()
            .unwrap(),
    );
    // thread count must not affect the artifact bytes
    assert_eq!(
        std::fs::read(out1.join("sweep.csv")).unwrap(),
        std::fs::read(out2.join("sweep.csv")).unwrap()
    );
    let svg = std::fs::read_to_string(out1.join("regions.svg")).unwrap();
    assert!(svg.contains("#57b560"), "convergence fill present");
    assert!(svg.contains("#b0b0b0"), "existence fill present");

    // grid override through the flag
    let out4 = tmp.path().join("s4");
    let stdout = run_ok(
        bin()
            .args(["sweep", "--grid", "3x2", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out4)
            .output()
            .unwrap(),
    );
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["cells"], 6);
}

#[test]
fn sweep_csv_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "sweep.json",
        &format!(
            r#"{{"graphs":{WORKED_GRAPHS},"grid":{{"n1":4,"n2":3,"min":0.05,"max":1.0}}}}"#
        ),
    );
    run_ok(
        bin()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(tmp.path())
            .output()
            .unwrap(),
    );
    let text = std::fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    let rows = laminar::stability::parse_sweep_csv(&text).unwrap();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r.0 > 0.0 && r.1 > 0.0));
}

#[test]
fn verbose_logging_goes_to_stderr() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "sim.json",
        &format!(r#"{{"graphs":{WORKED_GRAPHS},"w1":[0.6,0.02],"quotient":true}}"#),
    );
    let output = bin()
        .env("LAMINAR_LOG", "1")
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("[laminar]"), "stderr: {stderr}");
    // quiet by default
    let output = bin()
        .env_remove("LAMINAR_LOG")
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&output.stderr).is_empty());
}

#[test]
fn numerical_failures_exit_with_code_two() {
    // perturbation magnitude outside the admissible range is caught at run
    // time, after configuration parsing
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "sim.json",
        &format!(
            r#"{{"graphs":{WORKED_GRAPHS},"w1":[0.6,0.02],"quotient":true,"magnitude":0.5}}"#
        ),
    );
    let output = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("magnitude"), "stderr: {stderr}");
}

#[test]
fn verify_prints_one_line_per_identity_and_succeeds() {
    let output = bin().args(["verify", "--seed", "99"]).output().unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    let pass_lines = stdout.lines().filter(|l| l.starts_with("PASS")).count();
    assert_eq!(pass_lines, 11);
    assert!(!stdout.contains("FAIL"));
}
