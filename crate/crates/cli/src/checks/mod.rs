//! Named checks run against a solved scenario.

mod entropy;
mod estimates;
mod identities;
mod solution;

use std::collections::BTreeMap;
use std::sync::LazyLock;

use conjheat::entropy::EntropyTrace;
use conjheat::geometry::{Backend, FlowTrajectory};
use conjheat::solver::SolutionHistory;
use conjheat::{Error, Result};
use serde::Serialize;

use crate::config::{CheckSpec, ScenarioConfig};

/// Everything a check may look at.
pub struct Context<'a> {
    pub config: &'a ScenarioConfig,
    pub traj: &'a FlowTrajectory,
    pub hist: &'a SolutionHistory,
    pub strict_normalization: bool,
}

impl Context<'_> {
    /// Requested times, or every stored time whose index passes `keep`.
    pub fn times(&self, spec: &CheckSpec, keep: impl Fn(usize) -> bool) -> Result<Vec<f64>> {
        match &spec.times {
            Some(ts) => {
                for &t in ts {
                    let k = self.hist.sample_index(t)?;
                    if !keep(k) {
                        return Err(Error::InvalidInput(format!("{}: t = {t} is not admissible here", spec.name)));
                    }
                }
                Ok(ts.clone())
            }
            None => Ok((0..self.hist.len()).filter(|&k| keep(k)).map(|k| self.hist.times[k]).collect()),
        }
    }

    pub fn interior(&self, spec: &CheckSpec) -> Result<Vec<f64>> {
        let n = self.hist.len();
        self.times(spec, |k| k > 0 && k + 1 < n)
    }

    pub fn before_final(&self, spec: &CheckSpec) -> Result<Vec<f64>> {
        let n = self.hist.len();
        self.times(spec, |k| k + 1 < n)
    }

    pub fn tau(&self, t: f64) -> f64 {
        self.hist.final_time - t
    }
}

/// One line of a data table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub t: f64,
    pub tau: f64,
    pub quantity: String,
    pub sup: f64,
    pub argmax_node: Option<usize>,
    pub bound: Option<f64>,
    pub margin: Option<f64>,
}

impl Row {
    pub fn new(t: f64, tau: f64, quantity: impl Into<String>, sup: f64, argmax_node: Option<usize>) -> Self {
        Self { t, tau, quantity: quantity.into(), sup, argmax_node, bound: None, margin: None }
    }

    pub fn bounded(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self.margin = Some(bound - self.sup);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub check: String,
    pub passed: bool,
    /// The measure refinement studies fit orders to.
    pub error: Option<f64>,
    pub metrics: BTreeMap<String, f64>,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Row>,
    #[serde(skip)]
    pub entropy: Option<EntropyTrace>,
}

impl CheckOutcome {
    pub fn new(check: &str) -> Self {
        Self {
            check: check.to_string(),
            passed: true,
            error: None,
            metrics: BTreeMap::new(),
            failures: Vec::new(),
            notes: Vec::new(),
            rows: Vec::new(),
            entropy: None,
        }
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    pub fn fail(&mut self, message: impl Into<String>) {
        self.passed = false;
        self.failures.push(message.into());
    }

    /// Record `error` and compare it with the spec tolerance.
    pub fn with_error(mut self, spec: &CheckSpec, error: f64) -> Self {
        self.error = Some(error);
        if let Some(tol) = spec.tolerance {
            if !(error <= tol) {
                self.fail(format!("error {error:.3e} exceeds tolerance {tol:.3e}"));
            }
        }
        self
    }

    /// Outcome of a check that could not run.
    pub fn errored(check: &str, err: &Error) -> Self {
        let mut o = Self::new(check);
        o.fail(err.to_string());
        o
    }
}

pub trait Check: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn supports(&self, backend: Backend) -> bool;
    /// Extra keys accepted in the check's config table.
    fn params(&self) -> &'static [&'static str] {
        &[]
    }
    fn run(&self, ctx: &Context, spec: &CheckSpec) -> Result<CheckOutcome>;
}

static REGISTRY: LazyLock<Vec<Box<dyn Check>>> = LazyLock::new(|| {
    let mut v: Vec<Box<dyn Check>> = Vec::new();
    solution::register(&mut v);
    estimates::register(&mut v);
    identities::register(&mut v);
    entropy::register(&mut v);
    v
});

pub fn all() -> &'static [Box<dyn Check>] {
    &REGISTRY
}

pub fn get(name: &str) -> Option<&'static dyn Check> {
    REGISTRY.iter().find(|c| c.name() == name).map(|c| c.as_ref())
}

pub fn names() -> Vec<&'static str> {
    REGISTRY.iter().map(|c| c.name()).collect()
}

fn any(_: Backend) -> bool {
    true
}
