//! Scenario files.

use std::collections::BTreeMap;
use std::path::Path;

use conjheat::analysis::Window;
use conjheat::entropy::Normalization;
use conjheat::geometry::{evolve_rotsym_surface, make_shrinking_sphere, make_torus, Anchor, Backend, FlowTrajectory};
use conjheat::profiles::TerminalSpec;
use conjheat::solver::SpatialScheme;
use conjheat::{Grid, ScalarField};
use serde::{Deserialize, Serialize};

use crate::checks;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn bad(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), message: message.into() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub final_time: f64,
    pub backend: BackendSpec,
    pub terminal: TerminalSpec,
    pub solver: SolverSpec,
    #[serde(default)]
    pub estimate: EstimateSpec,
    #[serde(default)]
    pub policy: ConstantPolicy,
    #[serde(default)]
    pub regions: Vec<CubeSpec>,
    #[serde(default)]
    pub study: StudySpec,
    /// Recorded in the report; no stage draws random numbers.
    #[serde(default)]
    pub seed: u64,
    pub checks: Vec<CheckSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BackendSpec {
    Torus {
        lengths: Vec<f64>,
        sizes: Vec<usize>,
    },
    ShrinkingSphere {
        dim: usize,
        /// Initial radius. Leave out and give `extinction` for the soliton
        /// radius `sqrt(2 (dim - 1) extinction)`.
        #[serde(default)]
        r0: Option<f64>,
        #[serde(default)]
        extinction: Option<f64>,
        grid: usize,
    },
    RotsymSurface {
        grid: usize,
        flow_steps: usize,
        #[serde(default)]
        phi0: Phi0Spec,
    },
}

/// `phi(θ, 0) = amplitude cos(mode θ)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phi0Spec {
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "one_u32")]
    pub mode: u32,
}

fn one_u32() -> u32 {
    1
}

impl BackendSpec {
    pub fn backend(&self) -> Backend {
        match self {
            BackendSpec::Torus { lengths, .. } if lengths.len() == 2 => Backend::Torus2d,
            BackendSpec::Torus { .. } => Backend::Torus1d,
            BackendSpec::ShrinkingSphere { .. } => Backend::ShrinkingSphere,
            BackendSpec::RotsymSurface { .. } => Backend::RotsymSurface,
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match self {
            BackendSpec::ShrinkingSphere { dim, r0, extinction, .. } => {
                r0.or_else(|| extinction.map(|e| (2.0 * (*dim as f64 - 1.0) * e).sqrt()))
            }
            _ => None,
        }
    }

    pub fn build(&self, final_time: f64) -> conjheat::Result<FlowTrajectory> {
        match self {
            BackendSpec::Torus { lengths, sizes } => make_torus(lengths.len(), lengths, sizes, final_time),
            BackendSpec::ShrinkingSphere { dim, grid, .. } => {
                make_shrinking_sphere(*dim, self.radius().unwrap_or(f64::NAN), final_time, *grid)
            }
            BackendSpec::RotsymSurface { grid, flow_steps, phi0 } => {
                let g = Grid::Colatitude { n: *grid };
                let m = phi0.mode as f64;
                let phi = ScalarField::from_fn(&g, 0.0, |x| phi0.amplitude * (m * x[0]).cos());
                evolve_rotsym_surface(&phi, final_time, *flow_steps)
            }
        }
    }

    /// The same backend with grids multiplied by `space` and flow steps by `time`.
    pub fn refined(&self, space: usize, time: usize) -> Self {
        match self.clone() {
            BackendSpec::Torus { lengths, sizes } => {
                BackendSpec::Torus { lengths, sizes: sizes.iter().map(|s| s * space).collect() }
            }
            BackendSpec::ShrinkingSphere { dim, r0, extinction, grid } => {
                BackendSpec::ShrinkingSphere { dim, r0, extinction, grid: grid * space }
            }
            BackendSpec::RotsymSurface { grid, flow_steps, phi0 } => {
                BackendSpec::RotsymSurface { grid: grid * space, flow_steps: flow_steps * time, phi0 }
            }
        }
    }

    /// Largest spacing of the computational grid.
    pub fn spacing(&self) -> f64 {
        match self {
            BackendSpec::Torus { lengths, sizes } => {
                lengths.iter().zip(sizes).map(|(l, n)| l / *n as f64).fold(0.0, f64::max)
            }
            BackendSpec::ShrinkingSphere { grid, .. } | BackendSpec::RotsymSurface { grid, .. } => {
                std::f64::consts::PI / *grid as f64
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub steps: usize,
    #[serde(default = "default_rule")]
    pub rule: String,
    #[serde(default)]
    pub spatial: SpatialScheme,
    #[serde(default = "one_usize")]
    pub save_stride: usize,
}

fn default_rule() -> String {
    "crank-nicolson".into()
}

fn one_usize() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSpec {
    #[serde(default = "two")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub eps: f64,
    /// Time where the entropy scale `τ` vanishes; defaults to `final_time`.
    #[serde(default)]
    pub tau_origin: Option<f64>,
    #[serde(default)]
    pub tau_floor: f64,
    #[serde(default)]
    pub normalization: Normalization,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

impl Default for EstimateSpec {
    fn default() -> Self {
        Self { alpha: 2.0, eps: 1.0, tau_origin: None, tau_floor: 0.0, normalization: Normalization::Rescale }
    }
}

/// How the unknown constants in the estimates are treated.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConstantPolicy {
    /// Report the measured quantities and the smallest constants that work.
    #[default]
    ReportOnly,
    /// Fail when a quantity exceeds its bound with these constants.
    Assert { constants: BTreeMap<String, f64> },
}

impl ConstantPolicy {
    pub fn constant(&self, name: &str) -> Option<f64> {
        match self {
            ConstantPolicy::ReportOnly => None,
            ConstantPolicy::Assert { constants } => constants.get(name).copied(),
        }
    }

    pub fn asserts(&self) -> bool {
        matches!(self, ConstantPolicy::Assert { .. })
    }
}

/// Parabolic cube `Q_{r,T'}(x0, t0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeSpec {
    pub anchor: Anchor,
    pub r: f64,
    pub t0: f64,
    pub t_prime: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    /// Factor applied to every step count per level.
    #[serde(default = "two_usize")]
    pub time_factor: usize,
    /// Halve the grid spacing per level; otherwise only time is refined.
    #[serde(default = "yes")]
    pub refine_space: bool,
}

fn two_usize() -> usize {
    2
}

fn yes() -> bool {
    true
}

impl Default for StudySpec {
    fn default() -> Self {
        Self { time_factor: 2, refine_space: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSpec {
    pub name: String,
    /// Evaluation times; every admissible stored time when absent.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    /// Largest acceptable value of the check's error measure.
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Refinement order a study must reach.
    #[serde(default)]
    pub order: Option<f64>,
    /// Largest relative change of the error measure between the two finest
    /// study levels.
    #[serde(default)]
    pub stability: Option<f64>,
    #[serde(default)]
    pub window: Window,
    #[serde(flatten)]
    pub params: BTreeMap<String, toml::Value>,
}

impl CheckSpec {
    pub fn number(&self, key: &str) -> Option<f64> {
        match self.params.get(key)? {
            toml::Value::Float(x) => Some(*x),
            toml::Value::Integer(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        self.params.get(key)?.as_str()
    }

    pub fn flag(&self, key: &str) -> bool {
        self.params.get(key).and_then(|v| v.as_bool()).unwrap_or(false)
    }
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.to_string(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(bad("final_time", "must be positive"));
        }
        match &self.backend {
            BackendSpec::Torus { lengths, sizes } => {
                if lengths.is_empty() || lengths.len() > 2 || lengths.len() != sizes.len() {
                    return Err(bad("backend.lengths", "one or two edge lengths with one size each"));
                }
            }
            BackendSpec::ShrinkingSphere { r0, extinction, .. } => {
                if r0.is_some() == extinction.is_some() {
                    return Err(bad("backend", "give exactly one of r0 and extinction"));
                }
            }
            BackendSpec::RotsymSurface { flow_steps, .. } => {
                if *flow_steps == 0 {
                    return Err(bad("backend.flow_steps", "must be positive"));
                }
            }
        }
        if conjheat::solver::step_rule(&self.solver.rule).is_none() {
            return Err(bad("solver.rule", format!("unknown step rule '{}'", self.solver.rule)));
        }
        if self.solver.save_stride == 0 || self.solver.steps % self.solver.save_stride != 0 {
            return Err(bad("solver.save_stride", "must divide solver.steps"));
        }
        if self.study.time_factor == 0 {
            return Err(bad("study.time_factor", "must be positive"));
        }
        if self.checks.is_empty() {
            return Err(bad("checks", "at least one check"));
        }
        let backend = self.backend.backend();
        for (i, spec) in self.checks.iter().enumerate() {
            let field = format!("checks[{i}].name");
            let check = checks::get(&spec.name).ok_or_else(|| {
                bad(&field, format!("unknown check '{}'; known: {}", spec.name, checks::names().join(", ")))
            })?;
            if !check.supports(backend) {
                return Err(bad(&field, format!("check '{}' does not support {}", spec.name, backend.as_str())));
            }
            for key in spec.params.keys() {
                if !check.params().contains(&key.as_str()) {
                    return Err(bad(format!("checks[{i}].{key}"), format!("not a parameter of '{}'", spec.name)));
                }
            }
            if spec.name == "cube" && self.regions.is_empty() {
                return Err(bad(&field, "the cube check needs [[regions]]"));
            }
        }
        Ok(())
    }

    /// Configuration of refinement level `k`.
    pub fn level(&self, k: usize) -> Self {
        let mut c = self.clone();
        let time = self.study.time_factor.pow(k as u32);
        let space = if self.study.refine_space { 1usize << k } else { 1 };
        c.backend = self.backend.refined(space, time);
        c.solver.steps *= time;
        c
    }

    /// Refinement parameter of level `k`: grid spacing, or the time step
    /// when only time is refined.
    pub fn level_h(&self, k: usize) -> f64 {
        let c = self.level(k);
        if self.study.refine_space {
            c.backend.spacing()
        } else {
            self.final_time / c.solver.steps as f64
        }
    }
}
