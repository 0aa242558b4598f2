use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_agsplab"));
    c.env_remove("AGSPLAB_OUT");
    c
}

fn run_in(out: &Path, args: &[&str]) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn runs(out: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn manifest(run: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn dl_check_on_commuting_chain() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["dl-check", "--model", "product_parent", "--n", "6"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let run = &runs(dir.path())[0];
    let rec: Value = serde_json::from_str(&fs::read_to_string(run.join("records/0000.json")).unwrap()).unwrap();
    assert_eq!(rec["body"]["metrics"]["measured_delta_evenodd"], 0.0);
    assert_eq!(rec["body"]["exit_code"], 0);
    assert!(run.join("tables/dl.csv").exists());
    assert_eq!(manifest(run)["pass_rate"], 1.0);
}

#[test]
fn cheb_and_plan_examples_pass() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(dir.path(), &["cheb-check", "--m", "36"])), 0);
    assert_eq!(code(&run_in(dir.path(), &["plan", "--epsilon", "1", "--d", "2"])), 0);
    assert_eq!(code(&run_in(dir.path(), &["plan", "--x", "64", "--boundary", "16"])), 0);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing_schema = write_config(dir.path(), "a.json", r#"{"model": {"kind": "aklt", "n": 4}}"#);
    let o = bin().arg("model").arg("--config").arg(&missing_schema).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema"));

    assert_eq!(code(&run_in(dir.path(), &["plan"])), 2);
    assert_eq!(code(&run_in(dir.path(), &["spectrum"])), 2);
    assert_eq!(code(&run_in(dir.path(), &["no-such-command"])), 2);
    // Unpinned AKLT has a four-fold ground space.
    assert_eq!(code(&run_in(dir.path(), &["model", "--model", "aklt", "--n", "4"])), 2);
    assert_eq!(code(&run_in(dir.path(), &["model", "--model", "aklt", "--n", "12", "--pin"])), 2);
}

#[test]
fn output_root_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let env_root = dir.path().join("env");
    let cfg_root = dir.path().join("cfg");
    let flag_root = dir.path().join("flag");
    let cfg = write_config(
        dir.path(),
        "c.json",
        &format!(r#"{{"schema": 1, "plan": {{"epsilon": 1}}, "out": {:?}}}"#, cfg_root.display().to_string()),
    );
    let plain = write_config(dir.path(), "p.json", r#"{"schema": 1, "plan": {"epsilon": 1}}"#);

    let o = bin().args(["plan", "--config"]).arg(&plain).env("AGSPLAB_OUT", &env_root).output().unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(runs(&env_root).len(), 1);

    let o = bin().args(["plan", "--config"]).arg(&cfg).env("AGSPLAB_OUT", &env_root).output().unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(runs(&cfg_root).len(), 1);

    let o = bin().args(["plan", "--config"]).arg(&cfg).arg("--out").arg(&flag_root).output().unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(runs(&flag_root).len(), 1);
    assert_eq!(runs(&env_root).len(), 1);
}

#[test]
fn sweep_records_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        r#"{"schema": 1, "sweep": {"subcommand": "plan",
            "axes": {"plan.X": [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024]}}}"#,
    );
    let o = bin().arg("sweep").arg("--config").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let run = runs(&dir.path().join("o")).remove(0);
    assert_eq!(fs::read_dir(run.join("records")).unwrap().count(), 11);
    let m = manifest(&run);
    assert_eq!(m["points"], 11);
    assert_eq!(m["passed"], 11);
    let summary = fs::read_to_string(run.join("tables/sweep_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 12);

    let o = bin().args(["report", "--replay", "--run"]).arg(&run).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(run.join("report/logd_vs_x.csv").exists());

    // A tampered record no longer replays.
    let rec_path = run.join("records/0003.json");
    let mut rec: Value = serde_json::from_str(&fs::read_to_string(&rec_path).unwrap()).unwrap();
    rec["body"]["metrics"]["q"] = Value::from(1.0);
    fs::write(&rec_path, serde_json::to_string_pretty(&rec).unwrap()).unwrap();
    let o = bin().args(["report", "--replay", "--run"]).arg(&run).output().unwrap();
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("records/0003.json MISMATCH"));
}

#[test]
fn empty_sweep_is_one_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        r#"{"schema": 1, "plan": {"epsilon": 1}, "sweep": {"subcommand": "plan", "axes": {}}}"#,
    );
    let o = bin().arg("sweep").arg("--config").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(code(&o), 0);
    let run = runs(&dir.path().join("o")).remove(0);
    assert_eq!(manifest(&run)["points"], 1);
}

#[test]
fn oversized_or_mistyped_sweeps_fail_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let big = write_config(
        dir.path(),
        "big.json",
        r#"{"schema": 1, "sweep": {"subcommand": "plan", "limit": 4, "axes": {"plan.X": [1, 2, 3, 4, 5]}}}"#,
    );
    let bad = write_config(
        dir.path(),
        "bad.json",
        r#"{"schema": 1, "sweep": {"subcommand": "plan", "axes": {"plan.d": ["two"]}}}"#,
    );
    for cfg in [big, bad] {
        let out = dir.path().join("o");
        let o = bin().arg("sweep").arg("--config").arg(&cfg).arg("--out").arg(&out).output().unwrap();
        assert_eq!(code(&o), 2);
        assert!(!out.exists());
    }
}

#[test]
fn sweep_with_a_failing_point_reports_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        r#"{"schema": 1, "sweep": {"subcommand": "plan", "axes": {"plan.epsilon": [1, -1]}}}"#,
    );
    let o = bin().arg("sweep").arg("--config").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(code(&o), 2);
    let run = runs(&dir.path().join("o")).remove(0);
    let m = manifest(&run);
    assert_eq!(m["passed"], 1);
    assert_eq!(m["pass_rate"], 0.5);
}

#[test]
fn seeds_change_amplify_inputs_but_not_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["amplify", "--model", "aklt", "--n", "5", "--pin", "--initial-states", "3"];
    let read_mus = |out: &Path| -> Value {
        let run = runs(out).remove(0);
        let rec: Value = serde_json::from_str(&fs::read_to_string(run.join("records/0000.json")).unwrap()).unwrap();
        rec["body"]["results"]["states"].clone()
    };
    for (i, seed) in ["1", "1", "2"].iter().enumerate() {
        let o = bin().args(args).args(["--seed", seed]).arg("--out").arg(dir.path().join(i.to_string())).output().unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b, c) = (read_mus(&dir.path().join("0")), read_mus(&dir.path().join("1")), read_mus(&dir.path().join("2")));
    assert_eq!(a, b);
    assert_ne!(a, c);
}
