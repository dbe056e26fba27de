//! Curvature fields and their suprema over space-time regions.

use serde::{Deserialize, Serialize};

use super::ops::{geodesic_distance, gradient, hessian_frame, laplace_beltrami, Anchor};
use super::rotsym::laplace0;
use super::{snapshot_at, FlowTrajectory, GeometrySnapshot, Metric};
use crate::error::{Error, Result};
use crate::field::{FrameTensorField, ScalarField};

/// Curvature of one snapshot. Norms use the convention documented on the
/// geometry module.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureData {
    pub scalar: ScalarField,
    pub ricci: FrameTensorField,
    /// Sectional curvature; every backend here is pointwise isotropic.
    pub sectional: ScalarField,
    pub norm_rm: ScalarField,
    pub grad_r_norm: ScalarField,
    pub lap_r: ScalarField,
    pub norm_grad_rm: ScalarField,
    pub norm_hess_r: ScalarField,
}

pub(super) fn compute(s: &GeometrySnapshot) -> CurvatureData {
    let grid = &s.grid;
    let zero = ScalarField::constant(grid, s.time, 0.0);
    let shape = s.frame_shape();
    match &s.metric {
        Metric::Flat { .. } => CurvatureData {
            scalar: zero.clone(),
            ricci: FrameTensorField::zeros(grid, s.time, shape),
            sectional: zero.clone(),
            norm_rm: zero.clone(),
            grad_r_norm: zero.clone(),
            lap_r: zero.clone(),
            norm_grad_rm: zero.clone(),
            norm_hess_r: zero,
        },
        Metric::Round { dim, radius } => {
            let n = *dim as f64;
            let k = 1.0 / (radius * radius);
            let ricci = FrameTensorField::identity(grid, s.time, shape).scale_by(&vec![(n - 1.0) * k; grid.len()]);
            CurvatureData {
                scalar: ScalarField::constant(grid, s.time, n * (n - 1.0) * k),
                ricci,
                sectional: ScalarField::constant(grid, s.time, k),
                norm_rm: ScalarField::constant(grid, s.time, (2.0 * n * (n - 1.0)).sqrt() * k),
                grad_r_norm: zero.clone(),
                lap_r: zero.clone(),
                norm_grad_rm: zero.clone(),
                norm_hess_r: zero,
            }
        }
        Metric::Conformal { phi } => {
            let lap0 = laplace0(grid, phi);
            let k: Vec<f64> = phi.iter().zip(&lap0).map(|(p, l)| (-2.0 * p).exp() * (1.0 - l)).collect();
            let sectional = ScalarField { grid: grid.clone(), time: s.time, values: k.clone() };
            let scalar = sectional.map(|v| 2.0 * v);
            let ricci = FrameTensorField::identity(grid, s.time, shape).scale_by(&k);
            let grad = gradient(s, &scalar).expect("own grid");
            let grad_r_norm = grad.norm_sq().map(f64::sqrt);
            let lap_r = laplace_beltrami(s, &scalar).expect("own grid");
            let norm_hess_r = hessian_frame(s, &scalar).expect("own grid").norm();
            CurvatureData {
                norm_rm: scalar.map(f64::abs),
                norm_grad_rm: grad_r_norm.clone(),
                scalar,
                ricci,
                sectional,
                grad_r_norm,
                lap_r,
                norm_hess_r,
            }
        }
    }
}

pub fn curvature_data(s: &GeometrySnapshot) -> CurvatureData {
    s.curvature().clone()
}

/// Spatial part of a parabolic cube, or the whole manifold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Region {
    Whole,
    Ball { anchor: Anchor, radius: f64 },
}

impl Region {
    /// Nodes inside the region at this snapshot.
    pub fn members(&self, s: &GeometrySnapshot) -> Result<Vec<usize>> {
        match *self {
            Region::Whole => Ok((0..s.grid.len()).collect()),
            Region::Ball { anchor, radius } => {
                let d = geodesic_distance(s, anchor)?;
                Ok(d.values.iter().enumerate().filter(|(_, &v)| v <= radius).map(|(i, _)| i).collect())
            }
        }
    }
}

/// Curvature hypotheses: `-K0 <= Ric <= K0`, `|∇R| <= K1`, `ΔR <= K2`,
/// `|Rm| <= k0`, `|∇Rm| <= k1`, `|∇²R| <= k2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvatureBounds {
    pub ric_k0: f64,
    pub grad_r_k1: f64,
    pub lap_r_k2: f64,
    pub rm_k0: f64,
    pub grad_rm_k1: f64,
    pub hess_r_k2: f64,
    pub region: Region,
    pub window: (f64, f64),
    /// Relative margin applied on top of the measured suprema.
    pub inflation: f64,
}

impl CurvatureBounds {
    pub fn zero() -> Self {
        Self {
            ric_k0: 0.0,
            grad_r_k1: 0.0,
            lap_r_k2: 0.0,
            rm_k0: 0.0,
            grad_rm_k1: 0.0,
            hess_r_k2: 0.0,
            region: Region::Whole,
            window: (0.0, 0.0),
            inflation: 0.0,
        }
    }

    fn inflate(mut self, by: f64) -> Self {
        let up = |x: f64| x + by * x.abs();
        self.ric_k0 = up(self.ric_k0);
        self.grad_r_k1 = up(self.grad_r_k1);
        self.lap_r_k2 = up(self.lap_r_k2);
        self.rm_k0 = up(self.rm_k0);
        self.grad_rm_k1 = up(self.grad_rm_k1);
        self.hess_r_k2 = up(self.hess_r_k2);
        self.inflation = by;
        self
    }
}

pub const BOUND_INFLATION: f64 = 0.05;

/// Maximum number of uniformly spaced extra sample times per window.
const WINDOW_SAMPLES: usize = 32;

/// Raw suprema of the curvature fields over `region × [ta, tb]`.
pub fn curvature_suprema(traj: &FlowTrajectory, region: Region, window: (f64, f64)) -> Result<CurvatureBounds> {
    let (ta, tb) = window;
    if !(ta <= tb) {
        return Err(Error::InvalidInput(format!("empty time window [{ta}, {tb}]")));
    }
    let mut times: Vec<f64> = (0..=WINDOW_SAMPLES)
        .map(|k| ta + (tb - ta) * k as f64 / WINDOW_SAMPLES as f64)
        .chain(traj.sample_times().into_iter().filter(|&t| t >= ta && t <= tb))
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();

    let mut b = CurvatureBounds::zero();
    b.lap_r_k2 = f64::NEG_INFINITY;
    b.region = region;
    b.window = window;
    let mut seen = false;
    for t in times {
        let s = snapshot_at(traj, t)?;
        let c = s.curvature();
        for i in region.members(&s)? {
            seen = true;
            let (lo, hi) = c.ricci.eigen_range_at(i);
            b.ric_k0 = b.ric_k0.max(lo.abs()).max(hi.abs());
            b.grad_r_k1 = b.grad_r_k1.max(c.grad_r_norm.values[i]);
            b.lap_r_k2 = b.lap_r_k2.max(c.lap_r.values[i]);
            b.rm_k0 = b.rm_k0.max(c.norm_rm.values[i]);
            b.grad_rm_k1 = b.grad_rm_k1.max(c.norm_grad_rm.values[i]);
            b.hess_r_k2 = b.hess_r_k2.max(c.norm_hess_r.values[i]);
        }
    }
    if !seen {
        return Err(Error::EmptyRegion);
    }
    Ok(b)
}

/// Measured suprema inflated by [`BOUND_INFLATION`], so that discretization
/// undershoot cannot falsify a hypothesis check.
pub fn curvature_bounds(traj: &FlowTrajectory, region: Region, window: (f64, f64)) -> Result<CurvatureBounds> {
    Ok(curvature_suprema(traj, region, window)?.inflate(BOUND_INFLATION))
}
