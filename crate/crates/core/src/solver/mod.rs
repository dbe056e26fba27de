//! Backward solver for `(∂_t + Δ - R) u = 0` along a Ricci flow.
//!
//! The solver marches in `tau = T - t`. It works with the density `u dg`:
//! since `∂_tau dg = R dg`, the equation is `∂_tau (u dg) = Δu dg`, and in
//! flux form one step reads
//!
//! `W(t_new) u_new - W(t_old) u_old = dt S (θ u_new + (1 - θ) u_old)`
//!
//! with `W` the volume weights and `S = W Δ` a symmetric flux operator whose
//! rows sum to zero. Total mass is therefore conserved to roundoff, and the
//! scalar curvature is represented exactly by the change of the weights.

mod scheme;

use serde::Serialize;

pub use scheme::{default_step_rule, step_rule, step_rules, SpatialScheme, StepRule};

use crate::error::{invalid, Error, Result};
use crate::field::ScalarField;
use crate::geometry::{
    face_coefficients, laplace_beltrami, snapshot_at, volume_weights, Backend, FlowTrajectory, GeometrySnapshot,
};
use crate::grid::Grid;
use crate::linalg::{conjugate_gradient, solve_cyclic_tridiagonal, solve_tridiagonal};
use crate::stencil::d2;

#[derive(Clone, Copy)]
pub struct SolveOptions<'a> {
    pub time_steps: usize,
    pub rule: &'a dyn StepRule,
    pub spatial: SpatialScheme,
    /// Keep every `save_stride`-th time level.
    pub save_stride: usize,
}

impl SolveOptions<'static> {
    pub fn new(time_steps: usize) -> Self {
        Self { time_steps, rule: default_step_rule(), spatial: SpatialScheme::Central2, save_stride: 1 }
    }
}

impl<'a> SolveOptions<'a> {
    pub fn with_rule<'b>(self, rule: &'b dyn StepRule) -> SolveOptions<'b> {
        SolveOptions { time_steps: self.time_steps, rule, spatial: self.spatial, save_stride: self.save_stride }
    }

    pub fn with_spatial(mut self, spatial: SpatialScheme) -> Self {
        self.spatial = spatial;
        self
    }

    pub fn with_stride(mut self, save_stride: usize) -> Self {
        self.save_stride = save_stride;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverMetadata {
    pub scheme: String,
    pub spatial: String,
    pub time_steps: usize,
    pub dt: f64,
    pub save_stride: usize,
    /// Largest `|m(t) - m(T)| / m(T)` over the stored levels.
    pub mass_drift: f64,
    pub min_value: f64,
    pub terminal_label: Option<String>,
}

/// Positive solution sampled on the stored levels, ascending in `t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolutionHistory {
    pub grid: Grid,
    pub final_time: f64,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
    pub meta: SolverMetadata,
    /// Maximum of `values`, fixed at construction.
    pub peak: f64,
}

/// Trust threshold relative to `A`.
pub const TRUST_FRACTION: f64 = 1e-12;

/// Inflation of the measured maximum when producing an upper bound `A`.
pub const SUP_INFLATION: f64 = 1.01;

impl SolutionHistory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Spacing between stored levels.
    pub fn saved_dt(&self) -> f64 {
        self.meta.dt * self.meta.save_stride as f64
    }

    pub fn field(&self, k: usize) -> ScalarField {
        ScalarField { grid: self.grid.clone(), time: self.times[k], values: self.values[k].clone() }
    }

    /// Index of the stored level at time `t`.
    pub fn sample_index(&self, t: f64) -> Result<usize> {
        let (first, last) = (self.times[0], *self.times.last().unwrap_or(&0.0));
        if t < first - 1e-12 || t > last + 1e-12 {
            return Err(Error::OutOfRange { t, start: first, end: last });
        }
        let k = ((t - first) / self.saved_dt()).round() as usize;
        let k = k.min(self.len() - 1);
        if (self.times[k] - t).abs() > 1e-9 * self.saved_dt() {
            return Err(Error::NotASample(t));
        }
        Ok(k)
    }

    pub fn at(&self, t: f64) -> Result<ScalarField> {
        Ok(self.field(self.sample_index(t)?))
    }

    /// Maximum of `u` over the stored space-time grid.
    pub fn max_value(&self) -> f64 {
        self.peak
    }

    /// The upper bound `A` used by the Hessian estimates.
    pub fn sup_bound(&self) -> f64 {
        SUP_INFLATION * self.max_value()
    }

    /// Nodes where `u >= TRUST_FRACTION * a` at level `k`.
    pub fn trust_mask(&self, k: usize, a: f64) -> Vec<bool> {
        self.values[k].iter().map(|&v| v >= TRUST_FRACTION * a).collect()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.meta.terminal_label = Some(label.into());
        self
    }
}

/// Solve with the given step rule and default spatial operator.
pub fn solve_conjugate(
    traj: &FlowTrajectory,
    terminal: &ScalarField,
    time_steps: usize,
    scheme: &dyn StepRule,
) -> Result<SolutionHistory> {
    solve_conjugate_with(traj, terminal, &SolveOptions::new(time_steps).with_rule(scheme))
}

pub fn solve_conjugate_with(traj: &FlowTrajectory, terminal: &ScalarField, opts: &SolveOptions) -> Result<SolutionHistory> {
    if terminal.grid != traj.grid {
        return Err(Error::GridMismatch);
    }
    if opts.time_steps < 8 {
        return Err(invalid("need at least 8 time steps"));
    }
    if opts.save_stride == 0 || opts.time_steps % opts.save_stride != 0 {
        return Err(invalid("save stride must divide the number of time steps"));
    }
    if let Some((i, v)) = terminal.values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::PositivityLoss { node: i, time: traj.final_time, value: *v });
    }
    if opts.spatial == SpatialScheme::Compact4 && traj.backend != Backend::Torus1d {
        return Err(Error::Unsupported("the compact fourth-order operator is only implemented on the circle".into()));
    }

    let big_t = traj.final_time;
    let m = opts.time_steps;
    let dt = big_t / m as f64;
    let theta = opts.rule.implicit_weight();
    let time_of = |k: usize| if k == m { 0.0 } else { big_t - k as f64 * dt };

    let mut u = terminal.values.clone();
    let mut times = vec![big_t];
    let mut values = vec![u.clone()];
    let mut masses = vec![mass(&snapshot_at(traj, big_t)?, &u)];
    let mut min_value = u.iter().copied().fold(f64::INFINITY, f64::min);

    for k in 0..m {
        let (t_old, t_new) = (time_of(k), time_of(k + 1));
        let t_op = t_old - opts.rule.operator_offset() * (t_old - t_new);
        let s_old = snapshot_at(traj, t_old)?;
        let s_new = snapshot_at(traj, t_new)?;
        let s_op = snapshot_at(traj, t_op)?;
        u = match traj.backend {
            Backend::Torus2d => step_plane(&s_op, &u, dt, theta)?,
            _ => step_banded(&s_old, &s_new, &s_op, &u, dt, theta, opts.spatial)?,
        };
        if let Some((i, v)) = u.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::PositivityLoss { node: i, time: t_new, value: *v });
        }
        min_value = u.iter().copied().fold(min_value, f64::min);
        if (k + 1) % opts.save_stride == 0 {
            times.push(t_new);
            values.push(u.clone());
            masses.push(mass(&s_new, &u));
        }
    }
    times.reverse();
    values.reverse();
    masses.reverse();
    let reference = *masses.last().unwrap_or(&1.0);
    let mass_drift = masses.iter().fold(0.0, |d: f64, mm| d.max((mm - reference).abs() / reference.abs()));
    let peak = values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SolutionHistory {
        peak,
        grid: traj.grid.clone(),
        final_time: big_t,
        times,
        values,
        masses,
        meta: SolverMetadata {
            scheme: opts.rule.name().to_string(),
            spatial: opts.spatial.as_str().to_string(),
            time_steps: m,
            dt,
            save_stride: opts.save_stride,
            mass_drift,
            min_value,
            terminal_label: None,
        },
    })
}

fn mass(s: &GeometrySnapshot, u: &[f64]) -> f64 {
    volume_weights(s).iter().zip(u).map(|(w, v)| w * v).sum()
}

/// Mass matrix bands (sub, diag, sup) at one snapshot.
fn mass_bands(s: &GeometrySnapshot, spatial: SpatialScheme) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let w = volume_weights(s);
    let n = w.len();
    match spatial {
        SpatialScheme::Central2 => (vec![0.0; n], w, vec![0.0; n]),
        SpatialScheme::Compact4 => {
            let off: Vec<f64> = w.iter().map(|x| x / 12.0).collect();
            let diag: Vec<f64> = w.iter().map(|x| x * 10.0 / 12.0).collect();
            (off.clone(), diag, off)
        }
    }
}

fn step_banded(
    s_old: &GeometrySnapshot,
    s_new: &GeometrySnapshot,
    s_op: &GeometrySnapshot,
    u: &[f64],
    dt: f64,
    theta: f64,
    spatial: SpatialScheme,
) -> Result<Vec<f64>> {
    let n = u.len();
    let periodic = s_op.grid.is_periodic();
    let sigma = face_coefficients(s_op);
    // Face j joins node j and j + 1; the periodic circle also has face n - 1.
    let face = |j: isize| -> f64 {
        if periodic {
            sigma[j.rem_euclid(n as isize) as usize]
        } else if j < 0 || j as usize + 1 >= n {
            0.0
        } else {
            sigma[j as usize]
        }
    };
    let idx = |j: isize| j.rem_euclid(n as isize) as usize;

    let (ms_old, md_old, mp_old) = mass_bands(s_old, spatial);
    let (ms_new, md_new, mp_new) = mass_bands(s_new, spatial);

    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let explicit = (1.0 - theta) * dt;
    for j in 0..n {
        let ji = j as isize;
        let (fl, fr) = (face(ji - 1), face(ji));
        let (ul, ur) = (u[idx(ji - 1)], u[idx(ji + 1)]);
        // Off the ends of the colatitude grid the face and mass couplings vanish.
        sub[j] = ms_new[j] - theta * dt * fl;
        sup[j] = mp_new[j] - theta * dt * fr;
        diag[j] = md_new[j] + theta * dt * (fl + fr);
        rhs[j] = ms_old[j] * ul + md_old[j] * u[j] + mp_old[j] * ur + explicit * (fr * (ur - u[j]) - fl * (u[j] - ul));
    }
    if periodic {
        solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs)
    } else {
        solve_tridiagonal(&sub, &diag, &sup, &rhs)
    }
}

fn step_plane(s_op: &GeometrySnapshot, u: &[f64], dt: f64, theta: f64) -> Result<Vec<f64>> {
    let grid = &s_op.grid;
    let lap = |v: &[f64]| -> Vec<f64> {
        let (a, b) = (d2(grid, v, 0), d2(grid, v, 1));
        a.iter().zip(&b).map(|(x, y)| x + y).collect()
    };
    let lu = lap(u);
    let rhs: Vec<f64> = u.iter().zip(&lu).map(|(v, l)| v + (1.0 - theta) * dt * l).collect();
    let apply = |x: &[f64], y: &mut [f64]| {
        let lx = lap(x);
        for i in 0..x.len() {
            y[i] = x[i] - theta * dt * lx[i];
        }
    };
    conjugate_gradient(apply, &rhs, u, 1e-14, 10 * u.len().max(100))
}

/// `u_t` at a stored time, from the equation and from the history.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeDerivative {
    /// `-Δu + R u`.
    pub pde: ScalarField,
    /// Second-order difference of the stored levels (centered in the interior).
    pub difference: ScalarField,
    /// Largest pointwise `|pde - difference|`.
    pub discrepancy: f64,
}

pub fn u_time_derivative(traj: &FlowTrajectory, hist: &SolutionHistory, t: f64) -> Result<TimeDerivative> {
    let k = hist.sample_index(t)?;
    let s = snapshot_at(traj, hist.times[k])?;
    let u = hist.field(k);
    let lap = laplace_beltrami(&s, &u)?;
    let r = &s.curvature().scalar;
    let pde = ScalarField {
        grid: u.grid.clone(),
        time: u.time,
        values: (0..u.values.len()).map(|i| -lap.values[i] + r.values[i] * u.values[i]).collect(),
    };
    let dt = hist.saved_dt();
    let v = &hist.values;
    let last = hist.len() - 1;
    if last < 2 {
        return Err(Error::TooFewSamples { needed: 3, got: hist.len() });
    }
    let diff: Vec<f64> = (0..u.values.len())
        .map(|i| {
            if k == 0 {
                (-3.0 * v[0][i] + 4.0 * v[1][i] - v[2][i]) / (2.0 * dt)
            } else if k == last {
                (3.0 * v[last][i] - 4.0 * v[last - 1][i] + v[last - 2][i]) / (2.0 * dt)
            } else {
                (v[k + 1][i] - v[k - 1][i]) / (2.0 * dt)
            }
        })
        .collect();
    let discrepancy = pde.values.iter().zip(&diff).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
    Ok(TimeDerivative {
        difference: ScalarField { grid: u.grid.clone(), time: u.time, values: diff },
        pde,
        discrepancy,
    })
}
