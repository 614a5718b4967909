use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driftlimit")).current_dir(dir).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL_CYCLE: &str = r#"{"field":{"builtin":"corollary","alpha":0.5},"c":"x1^2","a_list":[5,10],"n":33}"#;

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn config_errors_exit_four() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(run(dir.path(), &["sweep", "--config", missing.to_str().unwrap()]).status.code(), Some(4));
    let bad = write_config(dir.path(), "bad.json", r#"{"field":{"builtin":"corollary","alpha":0.5},"c":"x1^^2"}"#);
    assert_eq!(run(dir.path(), &["analyze", "--config", &bad]).status.code(), Some(4));
    let unknown = write_config(dir.path(), "unknown.json", r#"{"field":{"builtin":"corollary","alpha":0.5},"c":"1","grid":3}"#);
    assert_eq!(run(dir.path(), &["analyze", "--config", &unknown]).status.code(), Some(4));
    assert_eq!(run(dir.path(), &["frobnicate"]).status.code(), Some(4));
}

#[test]
fn heteroclinic_saddles_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "pendulum.json",
        r#"{"field":{"b1":"x2","b2":"-sin(x1)"},"domain":{"kind":"rect","lo":[-4,-3],"hi":[4,3]},"c":"x1^2"}"#,
    );
    assert_eq!(run(dir.path(), &["analyze", "--config", &cfg]).status.code(), Some(3));
}

#[test]
fn analyze_writes_components_and_portrait() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cycle.json", SMALL_CYCLE);
    let out = dir.path().join("out");
    let o = run(dir.path(), &["analyze", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let comps: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("components.json")).unwrap()).unwrap();
    assert!(comps.is_object());
    let svg = fs::read_to_string(out.join("phase.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains(r#"width="800""#) && svg.contains(r#"height="800""#));
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn sweep_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cycle.json", SMALL_CYCLE);
    let out = dir.path().join("out");
    let o = run(dir.path(), &["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--jobs", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("A,lambda,residual,iters,gap"));
    assert_eq!(lines.count(), 2);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["predicted"].as_f64().is_some());

    // a bound no desk-scale sweep meets turns into a numerical failure
    let o = run(dir.path(), &["report", "--config", &cfg, "--out", out.to_str().unwrap(), "--tol", "1e-9"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn reduce_writes_weights() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rot.json", r#"{"field":{"builtin":"rotation"},"c":"x1^2","n":33,"family_stations":33}"#);
    let out = dir.path().join("out");
    let o = run(dir.path(), &["reduce", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let w = fs::read_to_string(out.join("weights.csv")).unwrap();
    assert!(w.lines().count() > 10);
}
