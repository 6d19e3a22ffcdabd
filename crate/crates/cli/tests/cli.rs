use std::path::Path;
use std::process::{Command, Output};

fn randisc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randisc")).args(args).current_dir(cwd).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_reproducible_outputs_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"kind": "tsparse-disc", "m": 4, "t": 2, "n": 50, "trials": 3, "seed": 1}"#).unwrap();
    for (out, workers) in [("a", "1"), ("b", "3")] {
        let o = randisc(
            &["run", "c.json", "--seed", "9", "--trials", "12", "--out", out, "--workers", workers, "--subsample-check", "0.5"],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["report.json", "records.csv"] {
        assert_eq!(std::fs::read(dir.path().join("a").join(f)).unwrap(), std::fs::read(dir.path().join("b").join(f)).unwrap());
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["seed"], 9);
    assert_eq!(report["config"]["subsample_check"], 0.5);
    assert_eq!(report["records"].as_array().unwrap().len(), 12);
    let csv = std::fs::read_to_string(dir.path().join("a/records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn run_without_output_prints_the_report() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.json"), r#"{"kind": "mixing", "m": 3, "t": 1, "n_grid": [3, 5, 7], "seed": 0}"#).unwrap();
    let o = randisc(&["run", "m.json"], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["kind"], "mixing");
    assert!(v["verdicts"].as_array().unwrap().iter().all(|x| x["pass"] == true));
}

#[test]
fn summarize_pools_reports() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"kind": "tsparse-disc", "m": 4, "t": 2, "n": 40, "trials": 5, "seed": 1}"#)
        .unwrap();
    for (seed, out) in [("1", "r1"), ("2", "r2")] {
        assert!(randisc(&["run", "c.json", "--seed", seed, "--out", out], dir.path()).status.success());
    }
    let o = randisc(&["summarize", "r1/report.json", "r2/report.json"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("m,t,n,trials,certified,count_0"));
    assert!(lines.next().unwrap().starts_with("4,2,40,10,10,"));
}

#[test]
fn bad_config_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\n  \"kind\": \"unit-disc\",\n  \"m\": 3,\n  \"seed\": 1,\n  \"n_grid\": [5, 5]\n}")
        .unwrap();
    let o = randisc(&["run", "bad.json"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 5"));
}

#[test]
fn disc_of_a_csv_matrix() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.csv"), "5,2\n").unwrap();
    let o = randisc(&["disc", "m.csv"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["value"], 3.0);
    assert_eq!(v["method"], "gray_code");
}
