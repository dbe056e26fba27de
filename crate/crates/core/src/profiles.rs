//! Terminal data for the conjugate heat equation.
//!
//! Closed-form expressions are looked up by name in a registry, so new
//! profiles can be added without touching the scenario plumbing.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::ScalarField;
use crate::geometry::{Backend, FlowTrajectory};
use crate::grid::Grid;
use crate::kernel::{GaussianMixture, PeriodicGaussian};

/// Parameters shared by the registered expressions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpressionParams {
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Integer wave numbers per axis; missing axes default to 1.
    #[serde(default)]
    pub modes: Vec<u32>,
}

fn one() -> f64 {
    1.0
}

impl Default for ExpressionParams {
    fn default() -> Self {
        Self { scale: 1.0, amplitude: 1.0, modes: Vec::new() }
    }
}

impl ExpressionParams {
    fn mode(&self, axis: usize) -> f64 {
        self.modes.get(axis).copied().unwrap_or(1) as f64
    }
}

pub trait Expression: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn supports(&self, backend: Backend) -> bool;
    /// Value at node coordinates `x` (angles for the colatitude grid).
    fn eval(&self, grid: &Grid, x: &[f64], p: &ExpressionParams) -> f64;
}

/// Phase `2 pi m x / L` along each periodic axis, or the colatitude itself.
fn phases(grid: &Grid, x: &[f64], p: &ExpressionParams) -> Vec<f64> {
    match *grid {
        Grid::Periodic1d { length, .. } => vec![2.0 * PI * p.mode(0) * x[0] / length],
        Grid::Periodic2d { lx, ly, .. } => {
            vec![2.0 * PI * p.mode(0) * x[0] / lx, 2.0 * PI * p.mode(1) * x[1] / ly]
        }
        Grid::Colatitude { .. } => vec![p.mode(0) * x[0]],
    }
}

struct ExpCos;

impl Expression for ExpCos {
    fn name(&self) -> &'static str {
        "exp-cos"
    }
    fn description(&self) -> &'static str {
        "scale * prod_a exp(-amplitude * (1 - cos(2 pi m_a x_a / L_a)))"
    }
    fn supports(&self, backend: Backend) -> bool {
        backend.is_flat()
    }
    fn eval(&self, grid: &Grid, x: &[f64], p: &ExpressionParams) -> f64 {
        let s: f64 = phases(grid, x, p).iter().map(|q| 1.0 - q.cos()).sum();
        p.scale * (-p.amplitude * s).exp()
    }
}

struct Cosine;

impl Expression for Cosine {
    fn name(&self) -> &'static str {
        "cosine"
    }
    fn description(&self) -> &'static str {
        "scale * (1 + amplitude * prod_a cos(phase_a)); phase is m theta on sphere backends"
    }
    fn supports(&self, _backend: Backend) -> bool {
        true
    }
    fn eval(&self, grid: &Grid, x: &[f64], p: &ExpressionParams) -> f64 {
        let c: f64 = phases(grid, x, p).iter().map(|q| q.cos()).product();
        p.scale * (1.0 + p.amplitude * c)
    }
}

static EXPRESSIONS: LazyLock<Vec<Box<dyn Expression>>> =
    LazyLock::new(|| vec![Box::new(ExpCos), Box::new(Cosine)]);

static INDEX: LazyLock<HashMap<&'static str, usize>> =
    LazyLock::new(|| EXPRESSIONS.iter().enumerate().map(|(i, e)| (e.name(), i)).collect());

pub fn all_expressions() -> &'static [Box<dyn Expression>] {
    &EXPRESSIONS
}

pub fn get_expression(name: &str) -> Option<&'static dyn Expression> {
    INDEX.get(name).map(|&i| EXPRESSIONS[i].as_ref())
}

/// One periodized Gaussian summand. `center` holds one coordinate per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub center: Vec<f64>,
    pub variance: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TerminalSpec {
    Constant {
        value: f64,
    },
    /// `value` chosen so that the total mass is one at `t = T`.
    NormalizedConstant,
    PeriodizedGaussian(GaussianSpec),
    GaussianSum {
        components: Vec<GaussianSpec>,
    },
    Expression {
        name: String,
        #[serde(flatten)]
        params: ExpressionParams,
    },
}

impl TerminalSpec {
    pub fn label(&self) -> String {
        match self {
            TerminalSpec::Constant { value } => format!("constant({value})"),
            TerminalSpec::NormalizedConstant => "normalized-constant".into(),
            TerminalSpec::PeriodizedGaussian(g) => format!("periodized-gaussian(variance {})", g.variance),
            TerminalSpec::GaussianSum { components } => format!("gaussian-sum({} parts)", components.len()),
            TerminalSpec::Expression { name, .. } => format!("expression({name})"),
        }
    }

    fn gaussians(&self) -> Option<Vec<GaussianSpec>> {
        match self {
            TerminalSpec::PeriodizedGaussian(g) => Some(vec![g.clone()]),
            TerminalSpec::GaussianSum { components } => Some(components.clone()),
            _ => None,
        }
    }

    /// Exact solution on the flat circle, when the data is Gaussian.
    pub fn circle_oracle(&self, traj: &FlowTrajectory) -> Option<GaussianMixture> {
        let Grid::Periodic1d { length, .. } = traj.grid else { return None };
        let parts = self.gaussians()?;
        Some(GaussianMixture {
            parts: parts
                .iter()
                .map(|g| PeriodicGaussian { period: length, center: g.center[0], variance: g.variance, weight: g.weight })
                .collect(),
        })
    }
}

/// Sample the terminal data on the trajectory's grid at `t = T`.
pub fn terminal_field(spec: &TerminalSpec, traj: &FlowTrajectory) -> Result<ScalarField> {
    let grid = &traj.grid;
    let t = traj.final_time;
    let field = match spec {
        TerminalSpec::Constant { value } => ScalarField::constant(grid, t, *value),
        TerminalSpec::NormalizedConstant => {
            let s = crate::geometry::snapshot_at(traj, t)?;
            ScalarField::constant(grid, t, 1.0 / s.volume())
        }
        TerminalSpec::PeriodizedGaussian(_) | TerminalSpec::GaussianSum { .. } => {
            let parts = spec.gaussians().unwrap_or_default();
            let periods: Vec<f64> = match *grid {
                Grid::Periodic1d { length, .. } => vec![length],
                Grid::Periodic2d { lx, ly, .. } => vec![lx, ly],
                Grid::Colatitude { .. } => {
                    return Err(Error::Unsupported("Gaussian terminal data needs a torus".into()))
                }
            };
            let hmin = grid.spacing().into_iter().fold(f64::INFINITY, f64::min);
            for g in &parts {
                if g.center.len() != periods.len() {
                    return Err(invalid("Gaussian center needs one coordinate per axis"));
                }
                if !(g.variance >= 4.0 * hmin * hmin) {
                    return Err(invalid(format!(
                        "Gaussian variance {} is under-resolved (needs at least 4 h^2 = {})",
                        g.variance,
                        4.0 * hmin * hmin
                    )));
                }
                if !(g.weight > 0.0) {
                    return Err(invalid("Gaussian weights must be positive"));
                }
            }
            ScalarField::from_fn(grid, t, |x| {
                parts
                    .iter()
                    .map(|g| {
                        let mut v = g.weight;
                        for a in 0..periods.len() {
                            v *= PeriodicGaussian::new(periods[a], g.center[a], g.variance).value(x[a]);
                        }
                        v
                    })
                    .sum()
            })
        }
        TerminalSpec::Expression { name, params } => {
            let e = get_expression(name)
                .ok_or_else(|| invalid(format!("unknown terminal expression '{name}'")))?;
            if !e.supports(traj.backend) {
                return Err(Error::Unsupported(format!("expression '{name}' on {}", traj.backend.as_str())));
            }
            ScalarField::from_fn(grid, t, |x| e.eval(grid, x, params))
        }
    };
    if let Some(bad) = field.values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(invalid(format!("terminal data must be strictly positive, found {bad}")));
    }
    Ok(field)
}
