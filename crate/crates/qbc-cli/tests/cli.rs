use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qbc(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qbc"));
    cmd.args(args).env_remove("QBC_OUT_DIR");
    if let Some(d) = out_dir {
        cmd.env("QBC_OUT_DIR", d);
    }
    cmd.output().expect("qbc runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const SWEEP: &str = r#"{
  "name": "parity",
  "config": {
    "base": {"protocol": "QBC4", "n": 2, "n0": 1, "epsilon1": 0.25},
    "axes": {"n": [2, 3, 4]}
  },
  "strategies": {"adam": "Honest", "babe": "Honest"},
  "mode": "MonteCarlo",
  "trials": 300,
  "seed": 11,
  "outputs": ["reports/parity.csv", "reports/parity.json"]
}"#;

#[test]
fn protocol_verb_writes_csv_to_stdout() {
    let o = qbc(&["qbc4", "--trials", "50", "--seed", "1"], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("protocol,n,n0,m,epsilon1"));
    assert!(lines.next().unwrap().starts_with("QBC4,"));
    assert!(lines.next().is_none());
}

#[test]
fn reruns_are_byte_identical() {
    for verb in ["qbc1", "qbc2a", "qbc4", "qbcp2"] {
        let a = qbc(&[verb, "--trials", "40", "--seed", "9", "--format", "json"], None);
        let b = qbc(&[verb, "--trials", "40", "--seed", "9", "--format", "json"], None);
        assert_eq!(code(&a), 0, "{verb}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{verb}");
    }
}

#[test]
fn sweep_writes_spec_outputs_under_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, SWEEP).unwrap();
    let o = qbc(&["sweep", "--config", spec.to_str().unwrap()], Some(dir.path()));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let csv = fs::read_to_string(dir.path().join("reports/parity.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("reports/parity.json")).unwrap()).unwrap();
    assert_eq!(json["schemaVersion"], 1);
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn out_flag_wins_and_infers_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = qbc(&["qbcp2", "--trials", "0", "--out", out.to_str().unwrap()], Some(dir.path()));
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["rows"][0]["report"]["method"], "Exact");
    assert!(!dir.path().join("qbcp2.csv").exists());
}

#[test]
fn out_dir_default_file_name() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbc(&["qbc1", "--trials", "0"], Some(dir.path()));
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("qbc1.csv").exists());
}

#[test]
fn transcript_is_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t/run.jsonl");
    let o = qbc(&["qbc2a", "--trials", "0", "--seed", "4", "--transcript", t.to_str().unwrap()], None);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&t).unwrap();
    assert!(text.lines().count() > 1);
    for line in text.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
}

#[test]
fn spec_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"protocol": "QBC1", "bogus": 1}"#).unwrap();
    assert_eq!(code(&qbc(&["qbc1", "--config", bad.to_str().unwrap()], None)), 2);

    let mut spec: serde_json::Value = serde_json::from_str(SWEEP).unwrap();
    spec["config"]["axes"]["n"] = serde_json::json!([]);
    fs::write(&bad, spec.to_string()).unwrap();
    assert_eq!(code(&qbc(&["sweep", "--config", bad.to_str().unwrap()], None)), 2);

    assert_eq!(code(&qbc(&["sweep"], None)), 2);
    assert_eq!(code(&qbc(&["qbc4", "--config", "/nonexistent/c.json"], None)), 2);

    fs::write(&bad, r#"{"protocol": "QBC4", "n": 4, "n0": 2}"#).unwrap();
    assert_eq!(code(&qbc(&["qbc1", "--config", bad.to_str().unwrap()], None)), 2);
}

#[test]
fn cap_exceeded_exits_4_but_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("big.json");
    fs::write(
        &spec,
        r#"{"name": "big", "config": {"protocol": "QBC4", "n": 8, "n0": 4, "epsilon1": 0.25},
            "strategies": {"adam": {"party": "Adam", "kind": "EPRCommit"}, "babe": "Honest"},
            "trials": 10, "seed": 1}"#,
    )
    .unwrap();
    let o = qbc(&["sweep", "--config", spec.to_str().unwrap()], None);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with(",cap"));
}

#[test]
fn verify_passes() {
    let o = qbc(&["verify", "--seed", "2", "--trials", "300"], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn shipped_specs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let name = path.file_name().unwrap().to_str().unwrap();
        if name.starts_with("protocol_") {
            qbc_core::protocol::ProtocolConfig::from_json(&text).unwrap();
        } else {
            let spec = qbc_core::harness::ExperimentSpec::from_json(&text).unwrap();
            assert!(!spec.grid().unwrap().is_empty(), "{name}");
        }
        seen += 1;
    }
    assert!(seen >= 5);
}
