//! Report files. Floats are written with 17 significant digits so that
//! parsed values round-trip bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use conjheat::entropy::EntropyTrace;
use conjheat::solver::SolverMetadata;
use serde::Serialize;
use serde_json::Value;

use crate::checks::{CheckOutcome, Row};
use crate::config::ScenarioConfig;

pub const TABLE_HEADER: &str = "t,tau,quantity,sup,argmax_node,bound,margin";
pub const ENTROPY_HEADER: &str = "t,tau,w,dw_dt,production,residual,max_integrand,normalization";

pub fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

pub fn table_csv(rows: &[Row]) -> String {
    let mut s = String::from(TABLE_HEADER);
    s.push('\n');
    for r in rows {
        let node = r.argmax_node.map(|n| n.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{node},{},{}", fmt(r.t), fmt(r.tau), r.quantity, fmt(r.sup), opt(r.bound), opt(r.margin));
    }
    s
}

pub fn entropy_csv(trace: &EntropyTrace) -> String {
    let mut s = String::from(ENTROPY_HEADER);
    s.push('\n');
    for e in &trace.samples {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            fmt(e.t),
            fmt(e.tau),
            fmt(e.w),
            opt(e.dw_dt),
            fmt(e.production),
            opt(e.residual),
            fmt(e.max_integrand),
            fmt(e.normalization)
        );
    }
    s
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Number(n) if n.is_f64() => out.push_str(&n.as_f64().map(fmt).unwrap_or_else(|| n.to_string())),
        Value::Array(a) if !a.is_empty() => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, x, depth + 1);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(o) if !o.is_empty() => {
            out.push_str("{\n");
            for (i, (k, x)) in o.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, x, depth + 1);
                out.push_str(if i + 1 < o.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// Pretty JSON with every float at 17 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    let mut s = String::new();
    write_value(&mut s, &v, 0);
    s.push('\n');
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    /// The run stopped before the checks (bad geometry, positivity loss, blow-up).
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub status: RunStatus,
    pub passed: bool,
    pub error: Option<String>,
    pub solver: Option<SolverMetadata>,
    pub checks: Vec<CheckOutcome>,
    /// Table file written for each check, by position.
    pub tables: Vec<String>,
    pub config: ScenarioConfig,
}

/// Wall-clock and environment, kept apart from the data for determinism.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Metadata {
    pub version: String,
    pub threads: usize,
    pub stages: BTreeMap<String, f64>,
}

pub(crate) fn table_names(checks: &[CheckOutcome]) -> Vec<String> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    checks
        .iter()
        .map(|c| {
            let n = seen.entry(&c.check).or_insert(0);
            *n += 1;
            if *n == 1 {
                format!("{}.csv", c.check)
            } else {
                format!("{}-{}.csv", c.check, n)
            }
        })
        .collect()
}

pub fn write_run(dir: &Path, report: &RunReport, meta: &Metadata) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (c, name) in report.checks.iter().zip(&report.tables) {
        std::fs::write(dir.join(name), table_csv(&c.rows))?;
        if let Some(trace) = &c.entropy {
            std::fs::write(dir.join(name.replace(".csv", "-trace.csv")), entropy_csv(trace))?;
        }
    }
    std::fs::write(dir.join("report.json"), to_json(report).map_err(std::io::Error::other)?)?;
    std::fs::write(dir.join("metadata.json"), to_json(meta).map_err(std::io::Error::other)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(fmt(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt(0.1).parse::<f64>().unwrap(), 0.1);
        let j = to_json(&serde_json::json!({"x": 0.1, "n": 3})).unwrap();
        assert!(j.contains("1.0000000000000001e-1"), "{j}");
        assert!(j.contains("\"n\": 3"));
        let nested = to_json(&serde_json::json!({"a": [1.5, {"b": []}], "s": "q\""})).unwrap();
        let back: Value = serde_json::from_str(&nested).unwrap();
        assert_eq!(back, serde_json::json!({"a": [1.5, {"b": []}], "s": "q\""}));
    }

    #[test]
    fn table_has_the_fixed_header() {
        let rows = vec![Row::new(0.0, 1.0, "q", 2.5, Some(3)).bounded(4.0)];
        let csv = table_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(TABLE_HEADER));
        assert_eq!(
            lines.next(),
            Some("0.0000000000000000e0,1.0000000000000000e0,q,2.5000000000000000e0,3,4.0000000000000000e0,1.5000000000000000e0")
        );
    }
}
