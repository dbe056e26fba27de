//! Acceptance criteria 1 to 10. Every test writes one `criterion N: PASS|FAIL`
//! line straight to stdout, so the lines show up even when libtest captures
//! output.

use std::io::Write;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use conjheat_cli::checks::CheckOutcome;
use conjheat_cli::report::{write_run, Metadata, RunReport, RunStatus};
use conjheat_cli::runner::OrderRow;
use conjheat_cli::{execute, study, RunOptions, ScenarioConfig, StudyReport};

const SCENARIOS: [&str; 10] = [
    "circle-gaussian",
    "circle-identities",
    "torus-identities",
    "sphere-identities",
    "soliton-entropy",
    "circle-entropy",
    "circle-constant-entropy",
    "rotsym-curvature",
    "rotsym-round",
    "sphere-cube",
];

fn scenario(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../cli/scenarios").join(format!("{name}.toml"));
    ScenarioConfig::from_path(&path).unwrap()
}

struct Study {
    report: StudyReport,
    runs: Vec<(RunReport, Metadata)>,
    elapsed: Duration,
}

impl Study {
    fn finest(&self) -> &RunReport {
        &self.runs.last().unwrap().0
    }

    fn order(&self, check: &str) -> Vec<&OrderRow> {
        self.report.orders.iter().filter(|o| o.check == check).collect()
    }
}

fn run_study(name: &str, levels: usize) -> Study {
    let clock = Instant::now();
    let (report, runs) = study(&scenario(name), levels, &RunOptions::default()).unwrap();
    Study { report, runs, elapsed: clock.elapsed() }
}

fn gaussian() -> &'static Study {
    static S: OnceLock<Study> = OnceLock::new();
    S.get_or_init(|| run_study("circle-gaussian", 4))
}

fn identity_studies() -> &'static [(&'static str, Study)] {
    static S: OnceLock<Vec<(&'static str, Study)>> = OnceLock::new();
    S.get_or_init(|| {
        ["circle-identities", "torus-identities", "sphere-identities"]
            .into_iter()
            .map(|n| (n, run_study(n, 3)))
            .collect()
    })
}

fn entropy_study() -> &'static Study {
    static S: OnceLock<Study> = OnceLock::new();
    S.get_or_init(|| run_study("circle-entropy", 3))
}

fn curvature_study() -> &'static Study {
    static S: OnceLock<Study> = OnceLock::new();
    S.get_or_init(|| run_study("rotsym-curvature", 3))
}

fn single(name: &str) -> RunReport {
    let (r, _) = execute(&scenario(name), &RunOptions::default());
    assert_eq!(r.status, RunStatus::Completed, "{name}: {:?}", r.error);
    r
}

fn check<'a>(r: &'a RunReport, name: &str) -> Vec<&'a CheckOutcome> {
    r.checks.iter().filter(|c| c.check == name).collect()
}

fn metric(c: &CheckOutcome, key: &str) -> f64 {
    *c.metrics.get(key).unwrap_or_else(|| panic!("{} has no metric {key}", c.check))
}

fn verdict(n: u32, passed: bool, detail: String) {
    let line = format!("criterion {n}: {} {detail}\n", if passed { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(passed, "criterion {n} failed: {detail}");
}

#[test]
fn criterion_01_oracle_equivalence() {
    let s = gaussian();
    let row = s.order("oracle")[0];
    let order = row.order.unwrap_or(f64::NAN);
    let finest = row.errors.last().copied().flatten().unwrap_or(f64::NAN);
    let secs = s.elapsed.as_secs_f64();
    let passed = order >= 1.8 && finest <= 1e-6 && secs <= 10.0 && s.report.h.len() == 4;
    verdict(1, passed, format!("order {order:.3}, finest error {finest:.3e}, study {secs:.1} s"));
}

#[test]
fn criterion_02_conservation_and_positivity() {
    let mut reports: Vec<(String, RunReport)> = Vec::new();
    for s in [gaussian(), entropy_study(), curvature_study()] {
        reports.extend(s.runs.iter().map(|(r, _)| (r.scenario.clone(), r.clone())));
    }
    for (n, s) in identity_studies() {
        reports.extend(s.runs.iter().map(|(r, _)| (n.to_string(), r.clone())));
    }
    for n in ["soliton-entropy", "circle-constant-entropy", "rotsym-round", "sphere-cube"] {
        reports.push((n.to_string(), single(n)));
    }
    let mut worst_drift: f64 = 0.0;
    let mut worst_min = f64::INFINITY;
    let mut bad = Vec::new();
    for (n, r) in &reports {
        let Some(meta) = &r.solver else {
            bad.push(format!("{n}: {}", r.error.clone().unwrap_or_default()));
            continue;
        };
        worst_drift = worst_drift.max(meta.mass_drift);
        worst_min = worst_min.min(meta.min_value);
        if !(meta.mass_drift <= 1e-8 && meta.min_value > 0.0) {
            bad.push(n.clone());
        }
    }
    verdict(
        2,
        bad.is_empty(),
        format!("{} runs, worst drift {worst_drift:.3e}, smallest min u {worst_min:.3e} {bad:?}", reports.len()),
    );
}

#[test]
fn criterion_03_li_yau_leading_constant() {
    let s = gaussian();
    let finest = check(s.finest(), "gradient")[0];
    let limit = metric(finest, "limit_value");
    let tau = metric(finest, "limit_tau");
    let ceiling = s
        .runs
        .iter()
        .map(|(r, _)| metric(check(r, "gradient")[0], "max_scaled"))
        .fold(f64::NEG_INFINITY, f64::max);
    let leading = metric(finest, "leading_term");
    let approaches = (limit - 1.0).abs() <= 0.05;
    let below = ceiling <= leading;
    verdict(
        3,
        approaches && below,
        format!(
            "tau sup = {limit:.6} at tau = {tau:.3e} (target 1 within 5%: {}), max over sampled tau {ceiling:.6} <= {leading} ({}), age-corrected {:.6}",
            if approaches { "ok" } else { "missed" },
            if below { "ok" } else { "exceeded" },
            metric(finest, "age_corrected_limit"),
        ),
    );
}

#[test]
fn criterion_04_hessian_ratio() {
    let s = gaussian();
    let values: Vec<f64> = s.runs.iter().map(|(r, _)| metric(check(r, "hessian")[0], "max_eigen_ratio")).collect();
    let n = values.len();
    let change = ((values[n - 1] - values[n - 2]) / values[n - 2]).abs();
    let passed = values.iter().all(|v| *v <= 18.0) && change <= 0.1;
    verdict(4, passed, format!("ratios {values:.4?}, change between finest levels {:.2}%", 100.0 * change));
}

#[test]
fn criterion_05_identity_residuals() {
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, s) in identity_studies() {
        let flat = *name != "sphere-identities";
        for check in ["lemma21", "lemma31", "bochner", "lemma33", "lemma34"] {
            let row = s.order(check)[0];
            let order = row.order.unwrap_or(f64::NAN);
            let finest = row.errors.last().copied().flatten().unwrap_or(f64::NAN);
            let need_order = if flat { 1.8 } else { 1.5 };
            let limit = match (flat, check) {
                (true, _) => Some(1e-4),
                (false, "lemma21" | "lemma31" | "bochner") => Some(1e-3),
                _ => None,
            };
            let ok = order >= need_order && limit.is_none_or(|l| finest <= l);
            passed &= ok;
            parts.push(format!("{name}/{check} {order:.2} {finest:.1e}{}", if ok { "" } else { " !" }));
        }
    }
    verdict(5, passed, parts.join(", "));
}

#[test]
fn criterion_06_soliton_entropy() {
    let r = single("soliton-entropy");
    let e = check(&r, "entropy")[0];
    let integrand = metric(e, "max_integrand");
    let spread = metric(e, "w_spread");
    verdict(6, integrand <= 1e-8 && spread <= 1e-6, format!("max integrand {integrand:.3e}, W spread {spread:.3e}"));
}

#[test]
fn criterion_07_monotonicity_formula() {
    let s = entropy_study();
    let row = s.order("entropy")[0];
    let order = row.order.unwrap_or(f64::NAN);
    let min_dw = s.runs.iter().map(|(r, _)| metric(check(r, "entropy")[0], "min_dw_dt")).fold(f64::INFINITY, f64::min);
    let c = single("circle-constant-entropy");
    let constant = metric(check(&c, "entropy")[0], "constant_density_error");
    let passed = order >= 1.0 && min_dw >= -1e-6 && constant <= 1e-6;
    verdict(7, passed, format!("order {order:.3}, min dW/dt {min_dw:.3e}, constant-density relative error {constant:.3e}"));
}

#[test]
fn criterion_08_curvature_evolution() {
    let s = curvature_study();
    let order = s.order("curvature-evolution")[0].order.unwrap_or(f64::NAN);
    let round = single("rotsym-round");
    let err = check(&round, "round-reference")[0].error.unwrap_or(f64::NAN);
    verdict(8, order >= 1.0 && err <= 1e-4, format!("order {order:.3}, round metric relative error {err:.3e}"));
}

#[test]
fn criterion_09_cube_localization() {
    let r = single("sphere-cube");
    let cube = check(&r, "cube");
    let test = cube.iter().find(|c| c.metrics.contains_key("cube_0_cell")).expect("colatitude cube check");
    let err = test.error.unwrap_or(f64::NAN);
    let cell = metric(test, "cube_0_cell").min(metric(test, "cube_1_cell"));
    verdict(9, test.passed && err <= cell, format!("worst deviation {err:.3e}, one cell {cell:.3e}"));
}

#[test]
fn criterion_10_determinism() {
    let root = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    for name in SCENARIOS {
        let config = scenario(name);
        let dirs: Vec<PathBuf> = (0..2)
            .map(|i| {
                let dir = root.path().join(format!("{name}-{i}"));
                let (r, m) = execute(&config, &RunOptions::default());
                write_run(&dir, &r, &m).unwrap();
                dir
            })
            .collect();
        let mut files: Vec<_> = std::fs::read_dir(&dirs[0])
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .filter(|f| f != "metadata.json")
            .collect();
        files.sort();
        for f in files {
            let a = std::fs::read(dirs[0].join(&f)).unwrap();
            let b = std::fs::read(dirs[1].join(&f)).unwrap_or_default();
            if a != b {
                differing.push(format!("{name}/{}", f.to_string_lossy()));
            }
        }
    }
    verdict(10, differing.is_empty(), format!("{} scenarios run twice, differing files {differing:?}", SCENARIOS.len()));
}
