use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walsh-helson"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn build(dir: &Path) {
    let out = run(
        dir,
        &["build-walsh-measure", "--stages", "3", "--seed", "9"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn build_writes_measure_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    build(dir.path());
    let measure = fs::read_to_string(dir.path().join("measure.csv")).unwrap();
    assert!(measure.starts_with("n,coeff\n0,1\n"));
    assert_eq!(measure.lines().count(), 13);
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["stages"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["run"]["seed"], 9);
}

#[test]
fn default_seed_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["build-walsh-measure", "--stages", "1"]);
    assert_eq!(code(&out), 0);
    assert!(
        stderr(&out).contains("seed: 1592598532"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn quadratic_gauge_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["build-walsh-measure", "--psi", "preset:quadratic"],
    );
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("measure.csv").exists());
}

#[test]
fn past_the_cap_needs_allow_sampled() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["build-walsh-measure", "--stages", "3", "--cap", "2"],
    );
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    let out = run(
        dir.path(),
        &[
            "build-walsh-measure",
            "--stages",
            "3",
            "--cap",
            "2",
            "--allow-sampled",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("cfg.json"),
        r#"{"stages": 1, "out": "from_config.csv"}"#,
    )
    .unwrap();
    let out = run(
        dir.path(),
        &[
            "build-walsh-measure",
            "--config",
            "cfg.json",
            "--stages",
            "2",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["stages"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("from_config.csv").exists());
}

#[test]
fn verify_accepts_builder_output() {
    let dir = tempfile::tempdir().unwrap();
    build(dir.path());
    let out = run(dir.path(), &["verify", "--in", "measure.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["allPrefixesNonneg"], true);
    assert_eq!(report["inequality2Holds"], true);
}

#[test]
fn verify_reports_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.csv"), "n,coeff\n0,1\n1,-1.5\n2,0\n3,0\n").unwrap();
    let out = run(dir.path(), &["theorem1-check", "--in", "s.csv"]);
    assert_eq!(code(&out), 1);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["allPrefixesNonneg"], false);
    assert_eq!(report["witnesses"]["prefix"]["order"], 2);
    assert_eq!(report["witnesses"]["prefix"]["atom"], 0);
    assert_eq!(report["witnesses"]["prefix"]["value"], -0.5);
}

#[test]
fn input_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.csv"), "").unwrap();
    let out = run(dir.path(), &["verify", "--in", "empty.csv"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));

    let out = run(dir.path(), &["verify", "--in", "missing.csv"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("missing.csv"));

    let out = run(dir.path(), &["no-such-command"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn singularity_report_has_a_row_per_stage() {
    let dir = tempfile::tempdir().unwrap();
    build(dir.path());
    let out = run(
        dir.path(),
        &["singularity-report", "--state", "manifest.json"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,H_k,conc50,conc90,conc99"));
    assert_eq!(
        lines.next().unwrap().split(',').take(2).collect::<Vec<_>>(),
        ["0", "1"]
    );
    assert_eq!(lines.count(), 3);
}

#[test]
fn report_writes_plot_tables() {
    let dir = tempfile::tempdir().unwrap();
    build(dir.path());
    let out = run(dir.path(), &["report", "--out-dir", "plots"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = |name: &str| {
        fs::read_to_string(dir.path().join("plots").join(name))
            .unwrap()
            .lines()
            .count()
            - 1
    };
    assert_eq!(rows("hellinger.csv"), 4);
    assert_eq!(rows("concentration.csv"), 4);
    assert_eq!(rows("psi_terms.csv"), 3);
    assert!(rows("envelope.csv") >= 1);
}

#[test]
fn report_rejects_a_foreign_measure() {
    let dir = tempfile::tempdir().unwrap();
    build(dir.path());
    fs::write(dir.path().join("other.csv"), "n,coeff\n0,1\n1,0.1\n").unwrap();
    let out = run(dir.path(), &["report", "--measure", "other.csv"]);
    assert_ne!(code(&out), 0);
}

#[test]
fn trig_build_and_rs_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "build-trig-measure",
            "--stages",
            "2",
            "--grid-oversample",
            "16",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let trig = fs::read_to_string(dir.path().join("trig.csv")).unwrap();
    assert!(trig.starts_with("frequency,coeff\n0,1\n"));

    let out = run(dir.path(), &["rs-pair", "--level", "2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "index,p,q\n0,1,1\n1,1,1\n2,1,-1\n3,-1,1\n"
    );
}

#[test]
fn thread_count_does_not_change_output() {
    let read = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = Command::new(env!("CARGO_BIN_EXE_walsh-helson"))
            .current_dir(dir.path())
            .env("WALSH_HELSON_THREADS", threads)
            .args(["build-walsh-measure", "--stages", "3"])
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        fs::read(dir.path().join("measure.csv")).unwrap()
    };
    assert_eq!(read("1"), read("4"));
}
