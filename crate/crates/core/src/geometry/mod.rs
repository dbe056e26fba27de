//! Evolving metrics on the model backends and their differential operators.
//!
//! Three backends are supported: flat periodic tori (static), the round
//! shrinking sphere `S^n` in closed form, and a numerically evolved
//! rotationally symmetric surface `e^{2 phi(theta)} g_{S^2}`.
//!
//! Curvature norms follow one convention throughout: the round `S^n` of
//! radius `r` has `|Rm| = sqrt(2 n (n - 1)) / r^2`. In dimension two this
//! makes `|Rm| = |R|` and `|grad Rm| = |grad R|`.

mod curvature;
mod ops;
mod rotsym;

use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::field::{FrameShape, ScalarField};
use crate::grid::Grid;

pub use curvature::{
    curvature_bounds, curvature_data, curvature_suprema, CurvatureBounds, CurvatureData, Region, BOUND_INFLATION,
};
pub use ops::{
    directional_derivative, geodesic_distance, gradient, gradient_sq, hessian_frame, integrate,
    laplace_beltrami, rough_laplacian, volume_weights, Anchor,
};
pub use rotsym::{evolve_rotsym_surface, pole_slopes};

pub(crate) use ops::face_coefficients;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Torus1d,
    Torus2d,
    ShrinkingSphere,
    RotsymSurface,
}

impl Backend {
    pub fn as_str(&self) -> &'static str {
        match self {
            Backend::Torus1d => "torus-1d",
            Backend::Torus2d => "torus-2d",
            Backend::ShrinkingSphere => "shrinking-sphere",
            Backend::RotsymSurface => "rotsym-surface",
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, Backend::Torus1d | Backend::Torus2d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    ClosedForm,
    PiecewiseLinear,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Metric {
    Flat { lengths: Vec<f64> },
    Round { dim: usize, radius: f64 },
    Conformal { phi: Vec<f64> },
}

/// The metric at one instant.
#[derive(Clone, Debug, Serialize)]
pub struct GeometrySnapshot {
    pub backend: Backend,
    pub time: f64,
    pub grid: Grid,
    pub metric: Metric,
    #[serde(skip)]
    curvature: Arc<OnceLock<CurvatureData>>,
}

impl GeometrySnapshot {
    pub(crate) fn new(backend: Backend, time: f64, grid: Grid, metric: Metric) -> Self {
        Self { backend, time, grid, metric, curvature: Arc::new(OnceLock::new()) }
    }

    pub fn dim(&self) -> usize {
        match &self.metric {
            Metric::Flat { lengths } => lengths.len(),
            Metric::Round { dim, .. } => *dim,
            Metric::Conformal { .. } => 2,
        }
    }

    pub fn frame_shape(&self) -> FrameShape {
        match self.backend {
            Backend::Torus1d => FrameShape::Line,
            Backend::Torus2d => FrameShape::Plane,
            _ => FrameShape::Warped { multiplicity: self.dim() - 1 },
        }
    }

    /// Sphere radius, when the backend is the round sphere.
    pub fn radius(&self) -> Option<f64> {
        match self.metric {
            Metric::Round { radius, .. } => Some(radius),
            _ => None,
        }
    }

    pub fn phi(&self) -> Option<&[f64]> {
        match &self.metric {
            Metric::Conformal { phi } => Some(phi),
            _ => None,
        }
    }

    /// Curvature fields, computed once per snapshot.
    pub fn curvature(&self) -> &CurvatureData {
        self.curvature.get_or_init(|| curvature::compute(self))
    }

    pub fn volume(&self) -> f64 {
        volume_weights(self).iter().sum()
    }
}

#[derive(Clone, Debug, Serialize)]
enum Model {
    Flat { lengths: Vec<f64> },
    Sphere { r0: f64 },
    Sampled { times: Vec<f64>, phis: Vec<Vec<f64>> },
}

/// A Ricci flow `g(t)`, `t in [0, T]`, on one backend.
#[derive(Clone, Debug, Serialize)]
pub struct FlowTrajectory {
    pub backend: Backend,
    pub dim: usize,
    pub final_time: f64,
    pub grid: Grid,
    pub interpolation: Interpolation,
    model: Model,
}

impl FlowTrajectory {
    /// Times at which the trajectory stores (or, for closed forms, anchors)
    /// a snapshot. Strictly increasing, from 0 to T.
    pub fn sample_times(&self) -> Vec<f64> {
        match &self.model {
            Model::Sampled { times, .. } => times.clone(),
            _ => vec![0.0, self.final_time],
        }
    }

    pub fn initial_radius(&self) -> Option<f64> {
        match self.model {
            Model::Sphere { r0 } => Some(r0),
            _ => None,
        }
    }

    /// Sphere radius at time `t` for the closed-form sphere.
    pub fn radius_at(&self, t: f64) -> Option<f64> {
        match self.model {
            Model::Sphere { r0 } => Some((r0 * r0 - 2.0 * (self.dim as f64 - 1.0) * t).sqrt()),
            _ => None,
        }
    }

    /// Exact `dR/dt` where a closed form exists.
    pub fn scalar_curvature_rate(&self, t: f64) -> Option<f64> {
        match self.model {
            Model::Flat { .. } => Some(0.0),
            Model::Sphere { .. } => {
                let n = self.dim as f64;
                let r2 = self.radius_at(t)?.powi(2);
                Some(2.0 * n * (n - 1.0).powi(2) / (r2 * r2))
            }
            Model::Sampled { .. } => None,
        }
    }
}

fn check_time(traj: &FlowTrajectory, t: f64) -> Result<()> {
    let slack = 1e-12 * traj.final_time.max(1.0);
    if !(t >= -slack && t <= traj.final_time + slack) {
        return Err(Error::OutOfRange { t, start: 0.0, end: traj.final_time });
    }
    Ok(())
}

/// Static flat torus of dimension 1 or 2 on `[0, final_time]`.
pub fn make_torus(dim: usize, edge_lengths: &[f64], grid_sizes: &[usize], final_time: f64) -> Result<FlowTrajectory> {
    if dim != 1 && dim != 2 {
        return Err(invalid(format!("torus dimension must be 1 or 2, got {dim}")));
    }
    if edge_lengths.len() != dim || grid_sizes.len() != dim {
        return Err(invalid("need one edge length and one grid size per dimension"));
    }
    if edge_lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(invalid("edge lengths must be finite and positive"));
    }
    if grid_sizes.iter().any(|&n| n < 16) {
        return Err(invalid("torus grids need at least 16 nodes per axis"));
    }
    if !(final_time.is_finite() && final_time > 0.0) {
        return Err(invalid("final time must be positive"));
    }
    let (backend, grid) = if dim == 1 {
        (Backend::Torus1d, Grid::Periodic1d { n: grid_sizes[0], length: edge_lengths[0] })
    } else {
        (
            Backend::Torus2d,
            Grid::Periodic2d { nx: grid_sizes[0], ny: grid_sizes[1], lx: edge_lengths[0], ly: edge_lengths[1] },
        )
    };
    Ok(FlowTrajectory {
        backend,
        dim,
        final_time,
        grid,
        interpolation: Interpolation::ClosedForm,
        model: Model::Flat { lengths: edge_lengths.to_vec() },
    })
}

/// Round `S^n` with `r(t)^2 = r0^2 - 2 (n - 1) t`.
pub fn make_shrinking_sphere(n: usize, r0: f64, final_time: f64, grid_size: usize) -> Result<FlowTrajectory> {
    if n < 2 {
        return Err(invalid("sphere dimension must be at least 2"));
    }
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(invalid("initial radius must be positive"));
    }
    if !(final_time.is_finite() && final_time > 0.0) {
        return Err(invalid("final time must be positive"));
    }
    let extinction = r0 * r0 / (2.0 * (n as f64 - 1.0));
    if final_time >= extinction {
        return Err(invalid(format!(
            "final time {final_time} reaches the extinction time {extinction}"
        )));
    }
    if grid_size < 4 {
        return Err(invalid("colatitude grid needs at least 4 nodes"));
    }
    Ok(FlowTrajectory {
        backend: Backend::ShrinkingSphere,
        dim: n,
        final_time,
        grid: Grid::Colatitude { n: grid_size },
        interpolation: Interpolation::ClosedForm,
        model: Model::Sphere { r0 },
    })
}

/// Metric snapshot at time `t`.
pub fn snapshot_at(traj: &FlowTrajectory, t: f64) -> Result<GeometrySnapshot> {
    check_time(traj, t)?;
    let t = t.clamp(0.0, traj.final_time);
    let metric = match &traj.model {
        Model::Flat { lengths } => Metric::Flat { lengths: lengths.clone() },
        Model::Sphere { .. } => Metric::Round { dim: traj.dim, radius: traj.radius_at(t).unwrap_or(0.0) },
        Model::Sampled { times, phis } => {
            // Uniform steps, but search anyway so the rule does not depend on it.
            let k = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1);
            let (t0, t1) = (times[k - 1], times[k]);
            let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
            let phi = phis[k - 1].iter().zip(&phis[k]).map(|(a, b)| a + w * (b - a)).collect();
            Metric::Conformal { phi }
        }
    };
    Ok(GeometrySnapshot::new(traj.backend, t, traj.grid.clone(), metric))
}

pub(crate) fn sampled_trajectory(grid: Grid, final_time: f64, times: Vec<f64>, phis: Vec<Vec<f64>>) -> FlowTrajectory {
    FlowTrajectory {
        backend: Backend::RotsymSurface,
        dim: 2,
        final_time,
        grid,
        interpolation: Interpolation::PiecewiseLinear,
        model: Model::Sampled { times, phis },
    }
}

/// Snapshot of an unevolved conformal metric, for evaluating operators on
/// arbitrary `phi` data.
pub fn conformal_snapshot(phi: &ScalarField) -> Result<GeometrySnapshot> {
    if !matches!(phi.grid, Grid::Colatitude { .. }) {
        return Err(invalid("conformal factor must live on a colatitude grid"));
    }
    Ok(GeometrySnapshot::new(
        Backend::RotsymSurface,
        phi.time,
        phi.grid.clone(),
        Metric::Conformal { phi: phi.values.clone() },
    ))
}

/// Area of the unit `S^k`.
pub fn unit_sphere_area(k: usize) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * unit_sphere_area(k - 2),
    }
}
