//! Scenario runs and refinement studies.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context as _};
use conjheat::order::fit_order;
use conjheat::profiles::terminal_field;
use conjheat::solver::{solve_conjugate_with, step_rule, SolveOptions};
use rayon::prelude::*;
use serde::Serialize;

use crate::checks::{self, CheckOutcome, Context};
use crate::config::ScenarioConfig;
use crate::report::{fmt, table_names, to_json, write_run, Metadata, RunReport, RunStatus};

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub strict_normalization: bool,
}

fn failed(config: &ScenarioConfig, err: impl std::fmt::Display) -> RunReport {
    RunReport {
        scenario: config.name.clone(),
        status: RunStatus::Failed,
        passed: false,
        error: Some(err.to_string()),
        solver: None,
        checks: Vec::new(),
        tables: Vec::new(),
        config: config.clone(),
    }
}

/// Build the flow, solve, and run every configured check. Runtime failures
/// end up in the report rather than as errors.
pub fn execute(config: &ScenarioConfig, opts: &RunOptions) -> (RunReport, Metadata) {
    let mut meta = Metadata {
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads: rayon::current_num_threads(),
        stages: BTreeMap::new(),
    };
    let clock = Instant::now();
    let traj = match config.backend.build(config.final_time) {
        Ok(t) => t,
        Err(e) => return (failed(config, e), meta),
    };
    meta.stages.insert("flow".into(), clock.elapsed().as_secs_f64());

    let clock = Instant::now();
    let rule = step_rule(&config.solver.rule).expect("validated rule");
    let hist = terminal_field(&config.terminal, &traj).and_then(|terminal| {
        let so = SolveOptions::new(config.solver.steps)
            .with_rule(rule)
            .with_spatial(config.solver.spatial)
            .with_stride(config.solver.save_stride);
        solve_conjugate_with(&traj, &terminal, &so)
    });
    let hist = match hist {
        Ok(h) => h.with_label(config.terminal.label()),
        Err(e) => return (failed(config, e), meta),
    };
    meta.stages.insert("solve".into(), clock.elapsed().as_secs_f64());

    let ctx = Context { config, traj: &traj, hist: &hist, strict_normalization: opts.strict_normalization };
    let timed: Vec<(CheckOutcome, f64)> = config
        .checks
        .par_iter()
        .map(|spec| {
            let clock = Instant::now();
            let check = checks::get(&spec.name).expect("validated check");
            let out = check.run(&ctx, spec).unwrap_or_else(|e| CheckOutcome::errored(&spec.name, &e));
            (out, clock.elapsed().as_secs_f64())
        })
        .collect();
    let mut outcomes = Vec::with_capacity(timed.len());
    for (i, (out, secs)) in timed.into_iter().enumerate() {
        meta.stages.insert(format!("check-{i}-{}", out.check), secs);
        outcomes.push(out);
    }
    let tables = table_names(&outcomes);
    let report = RunReport {
        scenario: config.name.clone(),
        status: RunStatus::Completed,
        passed: outcomes.iter().all(|o| o.passed),
        error: None,
        solver: Some(hist.meta.clone()),
        checks: outcomes,
        tables,
        config: config.clone(),
    };
    (report, meta)
}

/// Run a scenario and write its report files into `out`.
pub fn run_scenario(config_path: &Path, out: &Path, opts: &RunOptions) -> anyhow::Result<RunReport> {
    let config = ScenarioConfig::from_path(config_path)?;
    let (report, meta) = execute(&config, opts);
    write_run(out, &report, &meta).with_context(|| format!("writing {}", out.display()))?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderRow {
    pub check: String,
    pub position: usize,
    pub errors: Vec<Option<f64>>,
    pub order: Option<f64>,
    pub exact: bool,
    pub target: Option<f64>,
    /// Relative change of the error between the two finest levels.
    pub change: Option<f64>,
    pub stability: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StudyReport {
    pub scenario: String,
    pub levels: usize,
    pub h: Vec<f64>,
    pub orders: Vec<OrderRow>,
    pub finest_passed: bool,
    pub passed: bool,
}

fn order_row(position: usize, config: &ScenarioConfig, hs: &[f64], reports: &[RunReport]) -> OrderRow {
    let spec = &config.checks[position];
    let errors: Vec<Option<f64>> = reports.iter().map(|r| r.checks.get(position).and_then(|c| c.error)).collect();
    let mut row = OrderRow {
        check: spec.name.clone(),
        position,
        errors: errors.clone(),
        order: None,
        exact: false,
        target: spec.order,
        change: None,
        stability: spec.stability,
        passed: true,
    };
    let known: Option<Vec<f64>> = errors.iter().copied().collect();
    if let Some(target) = spec.order {
        match known.as_ref().map(|e| fit_order(hs, e)) {
            Some(Ok(fit)) => {
                row.order = fit.order;
                row.exact = fit.exact;
                row.passed &= fit.meets(target);
            }
            _ => row.passed = false,
        }
    }
    if let Some(limit) = spec.stability {
        let n = errors.len();
        match (errors[n - 2], errors[n - 1]) {
            (Some(a), Some(b)) => {
                let change = ((b - a) / a).abs();
                row.change = Some(change);
                row.passed &= change <= limit;
            }
            _ => row.passed = false,
        }
    }
    row
}

pub fn orders_csv(study: &StudyReport) -> String {
    let mut s = String::from("check,position,order,target,exact,change,stability,passed");
    for k in 0..study.levels {
        let _ = write!(s, ",error_{k}");
    }
    s.push('\n');
    let o = |x: Option<f64>| x.map(fmt).unwrap_or_default();
    for r in &study.orders {
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.check,
            r.position,
            o(r.order),
            o(r.target),
            r.exact,
            o(r.change),
            o(r.stability),
            r.passed
        );
        for e in &r.errors {
            let _ = write!(s, ",{}", o(*e));
        }
        s.push('\n');
    }
    s
}

/// Refinement study in memory: level reports plus fitted orders.
pub fn study(config: &ScenarioConfig, levels: usize, opts: &RunOptions) -> anyhow::Result<(StudyReport, Vec<(RunReport, Metadata)>)> {
    if levels < 3 {
        bail!("a refinement study needs at least 3 levels, got {levels}");
    }
    if !config.study.refine_space && config.study.time_factor < 2 {
        bail!("study: nothing is refined (refine_space = false and time_factor = {})", config.study.time_factor);
    }
    let configs: Vec<ScenarioConfig> = (0..levels).map(|k| config.level(k)).collect();
    let runs: Vec<(RunReport, Metadata)> = configs.par_iter().map(|c| execute(c, opts)).collect();
    let hs: Vec<f64> = (0..levels).map(|k| config.level_h(k)).collect();
    let reports: Vec<RunReport> = runs.iter().map(|(r, _)| r.clone()).collect();
    let orders: Vec<OrderRow> = (0..config.checks.len())
        .filter(|&i| config.checks[i].order.is_some() || config.checks[i].stability.is_some())
        .map(|i| order_row(i, config, &hs, &reports))
        .collect();
    let finest_passed = reports.last().is_some_and(|r| r.passed);
    let passed = finest_passed && reports.iter().all(|r| r.status == RunStatus::Completed) && orders.iter().all(|o| o.passed);
    let report = StudyReport { scenario: config.name.clone(), levels, h: hs, orders, finest_passed, passed };
    Ok((report, runs))
}

/// Run a study and write `level-k/` reports, `study.json` and `orders.csv`.
pub fn convergence_study(config_path: &Path, levels: usize, out: &Path, opts: &RunOptions) -> anyhow::Result<StudyReport> {
    let config = ScenarioConfig::from_path(config_path)?;
    let (report, runs) = study(&config, levels, opts)?;
    for (k, (r, m)) in runs.iter().enumerate() {
        write_run(&out.join(format!("level-{k}")), r, m)?;
    }
    std::fs::write(out.join("study.json"), to_json(&report)?)?;
    std::fs::write(out.join("orders.csv"), orders_csv(&report))?;
    Ok(report)
}
