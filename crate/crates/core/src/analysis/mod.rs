//! Estimate quantities, explicit bounds, identity residuals and
//! cube-localized suprema.
//!
//! Pointwise quantities are only trusted where `u >= 1e-12 A`; elsewhere
//! the logarithmic weights amplify roundoff and the nodes are masked out.

mod bounds;
mod identities;
mod quantities;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use bounds::{gradient_bound, hessian_bound_constant, smallest_gradient_constant, GradientBoundForm};
pub use identities::{
    bochner_residual, curvature_evolution_residual, lemma21_deltaf_residual, lemma31_component_residuals,
    lemma33_residual, lemma34_residual, HessianSign,
};
pub use quantities::{
    gradient_quantity, hessian_quantity_f1, theorem_hessian_ratio, v_tensor, w_tensor, HessianRatios, QuantityField,
    HESSIAN_FORM_COEFFICIENT,
};

use crate::error::{invalid, Error, Result};
use crate::field::{FrameTensorField, FrameVectorField, MaskedField, ScalarField};
use crate::geometry::{
    gradient, hessian_frame, laplace_beltrami, snapshot_at, Anchor, FlowTrajectory, GeometrySnapshot, Region,
};
use crate::grid::Grid;
use crate::solver::{u_time_derivative, SolutionHistory};

/// Derived fields of the solution at one stored level.
pub(crate) struct Level {
    pub t: f64,
    pub tau: f64,
    pub snap: GeometrySnapshot,
    pub u: ScalarField,
    pub grad: FrameVectorField,
    pub hess: FrameTensorField,
    pub ut: ScalarField,
}

impl Level {
    pub fn new(traj: &FlowTrajectory, hist: &SolutionHistory, k: usize) -> Result<Self> {
        let t = hist.times[k];
        let snap = snapshot_at(traj, t)?;
        let u = hist.field(k);
        let grad = gradient(&snap, &u)?;
        let hess = hessian_frame(&snap, &u)?;
        let ut = u_time_derivative(traj, hist, t)?.pde;
        Ok(Self { t, tau: hist.final_time - t, snap, u, grad, hess, ut })
    }

    pub fn n(&self) -> usize {
        self.u.values.len()
    }

    pub fn scalar(&self, values: Vec<f64>) -> ScalarField {
        ScalarField { grid: self.u.grid.clone(), time: self.t, values }
    }

    pub fn lap(&self, f: &ScalarField) -> Result<ScalarField> {
        laplace_beltrami(&self.snap, f)
    }
}

/// Stored level at `t` with neighbours on both sides.
pub(crate) fn interior_index(hist: &SolutionHistory, t: f64) -> Result<usize> {
    let k = hist.sample_index(t)?;
    if k == 0 || k + 1 >= hist.len() {
        return Err(invalid(format!("t = {t} is an endpoint; residuals need neighbouring levels")));
    }
    Ok(k)
}

pub(crate) fn strict_future(hist: &SolutionHistory, t: f64) -> Result<usize> {
    let k = hist.sample_index(t)?;
    if hist.final_time - hist.times[k] <= 0.0 {
        return Err(invalid("estimate quantities need t < T"));
    }
    Ok(k)
}

/// Nodes restricted to a colatitude band, or every node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Window {
    #[default]
    All,
    /// `lo <= theta <= hi` in radians; ignored on periodic grids.
    Colatitude { lo: f64, hi: f64 },
}

impl Window {
    pub fn mask(&self, grid: &Grid) -> Vec<bool> {
        match (*self, grid) {
            (Window::Colatitude { lo, hi }, Grid::Colatitude { .. }) => {
                grid.colatitudes().iter().map(|t| *t >= lo && *t <= hi).collect()
            }
            _ => vec![true; grid.len()],
        }
    }
}

/// Where a supremum was taken.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RegionDescriptor {
    Whole,
    Cube { anchor: Anchor, r: f64, t0: f64, t_prime: f64 },
}

/// A measured supremum against a bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub quantity: String,
    pub region: RegionDescriptor,
    pub time: f64,
    pub tau: f64,
    pub sup: f64,
    pub argmax_node: usize,
    pub argmax_time: f64,
    pub bound: Option<f64>,
    pub constants: BTreeMap<String, f64>,
    /// `bound - sup`; negative values are violations and are kept as data.
    pub margin: Option<f64>,
}

impl BoundReport {
    pub fn from_masked(quantity: &str, field: &MaskedField, final_time: f64) -> Result<Self> {
        let (sup, node) = field.sup().ok_or(Error::EmptyRegion)?;
        let t = field.field.time;
        Ok(Self {
            quantity: quantity.to_string(),
            region: RegionDescriptor::Whole,
            time: t,
            tau: final_time - t,
            sup,
            argmax_node: node,
            argmax_time: t,
            bound: None,
            constants: BTreeMap::new(),
            margin: None,
        })
    }

    pub fn with_bound(mut self, bound: f64, constants: &[(&str, f64)]) -> Self {
        self.bound = Some(bound);
        self.margin = Some(bound - self.sup);
        self.constants.extend(constants.iter().map(|(k, v)| (k.to_string(), *v)));
        self
    }
}

/// Supremum of a space-time quantity over `Q_{r,T'}(x0, t0)`: nodes with
/// `d(x, x0, t) <= r` at times `t0 - T' <= t <= t0`. Membership is
/// recomputed with the metric at every sample. Ties go to the lowest node,
/// then the earliest time.
pub fn cube_sup(
    traj: &FlowTrajectory,
    field_over_time: &[MaskedField],
    x0: Anchor,
    r: f64,
    t0: f64,
    t_prime: f64,
) -> Result<BoundReport> {
    if !(t_prime >= 0.0) || t0 - t_prime < -1e-12 || t0 > traj.final_time + 1e-12 {
        return Err(invalid(format!("cube times [{} , {t0}] leave [0, T]", t0 - t_prime)));
    }
    let region = Region::Ball { anchor: x0, radius: r };
    let tol = 1e-12 * traj.final_time.max(1.0);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut samples: Vec<&MaskedField> = field_over_time
        .iter()
        .filter(|f| f.field.time >= t0 - t_prime - tol && f.field.time <= t0 + tol)
        .collect();
    samples.sort_by(|a, b| a.field.time.total_cmp(&b.field.time));
    for f in samples {
        let s = snapshot_at(traj, f.field.time)?;
        for i in region.members(&s)? {
            if !f.trusted[i] {
                continue;
            }
            let v = f.field.values[i];
            let better = match best {
                None => true,
                Some((b, bi, _)) => v > b || (v == b && i < bi),
            };
            if better {
                best = Some((v, i, f.field.time));
            }
        }
    }
    let (sup, node, time) = best.ok_or(Error::EmptyRegion)?;
    Ok(BoundReport {
        quantity: String::new(),
        region: RegionDescriptor::Cube { anchor: x0, r, t0, t_prime },
        time: t0,
        tau: traj.final_time - t0,
        sup,
        argmax_node: node,
        argmax_time: time,
        bound: None,
        constants: BTreeMap::new(),
        margin: None,
    })
}
