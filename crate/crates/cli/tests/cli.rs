use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use conjheat_cli::checks;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_conjheat"));
    c.env_remove("CONJHEAT_OUT");
    c
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn small(tolerance: f64) -> String {
    format!(
        r#"
name = "small"
final_time = 0.05

[backend]
kind = "torus"
lengths = [6.283185307179586]
sizes = [32]

[terminal]
kind = "expression"
name = "exp-cos"
amplitude = 0.5

[solver]
steps = 16

[[checks]]
name = "conservation"

[[checks]]
name = "lemma33"
times = [0.025]
tolerance = {tolerance:e}
order = 1.8
"#
    )
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_checks_prints_the_registry() {
    let o = bin().arg("list-checks").output().unwrap();
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for name in checks::names() {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(name)), "{name} missing");
    }
}

#[test]
fn unknown_check_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.toml", &small(1.0).replace("\"lemma33\"", "\"lemma99\""));
    let o = bin().arg("--out").arg(dir.path().join("o")).arg("run").arg(&p).output().unwrap();
    assert_eq!(code(&o), 2);
    let e = stderr(&o);
    assert!(e.contains("checks[1].name"), "{e}");
    assert!(e.contains("lemma99") && e.contains("lemma33"), "{e}");
}

#[test]
fn unknown_fields_and_params_are_rejected() {
    let a = small(1.0).replace("final_time = 0.05", "final_time = 0.05\nfinal_tme = 1.0");
    assert!(conjheat_cli::ScenarioConfig::from_toml(&a, "a").is_err());
    let b = small(1.0).replace("name = \"conservation\"", "name = \"conservation\"\nwidth = 3");
    let e = conjheat_cli::ScenarioConfig::from_toml(&b, "b").unwrap_err().to_string();
    assert!(e.contains("checks[0].width"), "{e}");
}

#[test]
fn two_levels_are_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "s.toml", &small(1.0));
    let o = bin().arg("--out").arg(dir.path().join("o")).args(["study", "--levels", "2"]).arg(&p).output().unwrap();
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("at least 3 levels"));
}

#[test]
fn run_writes_report_tables_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "s.toml", &small(1.0));
    let out = dir.path().join("o");
    let o = bin().arg("--out").arg(&out).arg("run").arg(&p).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["report.json", "metadata.json", "conservation.csv", "lemma33.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let table = std::fs::read_to_string(out.join("lemma33.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("t,tau,quantity,sup,argmax_node,bound,margin"));
    let row: Vec<&str> = table.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row.len(), 7);
    // 17 significant digits.
    assert_eq!(row[0], "2.5000000000000001e-2");

    let text = std::fs::read_to_string(out.join("report.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["status"], "completed");
    assert_eq!(report["passed"], true);
    let line = text.lines().find(|l| l.trim_start().starts_with("\"mass_drift\"")).unwrap();
    let drift = line.split(": ").nth(1).unwrap().trim_end_matches(',');
    assert!(drift.contains('e') && drift.split('e').next().unwrap().len() == 18, "{drift}");
    let meta = std::fs::read_to_string(out.join("metadata.json")).unwrap();
    assert!(meta.contains("stages") && !table.contains("stages"));
}

#[test]
fn failing_tolerance_sets_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "s.toml", &small(1e-300));
    let o = bin().arg("--out").arg(dir.path().join("o")).arg("run").arg(&p).output().unwrap();
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("lemma33              FAIL"));
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "s.toml", &small(1.0));
    let out = dir.path().join("env-out");
    let o = bin().env("CONJHEAT_OUT", &out).arg("run").arg(&p).output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(out.join("report.json").exists());
}

#[test]
fn runtime_failure_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
name = "late"
final_time = 0.5

[backend]
kind = "shrinking-sphere"
dim = 2
extinction = 0.5
grid = 32

[terminal]
kind = "constant"
value = 1.0

[solver]
steps = 16

[[checks]]
name = "conservation"
"#;
    let p = write(dir.path(), "late.toml", text);
    let out = dir.path().join("o");
    let o = bin().arg("--out").arg(&out).arg("run").arg(&p).output().unwrap();
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "failed");
    assert!(report["error"].as_str().unwrap().contains("extinction"));
}

#[test]
fn study_writes_levels_and_orders() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "s.toml", &small(1.0));
    let out = dir.path().join("o");
    let o = bin().arg("--out").arg(&out).args(["--threads", "1", "study"]).arg(&p).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    for k in 0..3 {
        assert!(out.join(format!("level-{k}")).join("report.json").exists());
    }
    let orders = std::fs::read_to_string(out.join("orders.csv")).unwrap();
    let row = orders.lines().find(|l| l.starts_with("lemma33,")).unwrap();
    let order: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!(order >= 1.8, "{order}");
}

#[test]
fn plot_renders_svg_per_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = bin().arg("--out").arg(&out).arg("run").arg(scenario("soliton-entropy")).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let o = bin().arg("plot").arg(&out).output().unwrap();
    assert_eq!(code(&o), 0);
    for f in ["entropy.svg", "entropy-trace.svg", "conservation.svg"] {
        let s = std::fs::read_to_string(out.join(f)).unwrap();
        assert!(s.starts_with("<svg") && s.contains("</svg>"), "{f}");
    }
}

#[test]
fn every_shipped_scenario_validates() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            conjheat_cli::ScenarioConfig::from_path(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert_eq!(n, 10);
}
