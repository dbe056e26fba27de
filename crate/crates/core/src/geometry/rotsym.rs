//! Ricci flow of a rotationally symmetric metric `e^{2 phi} g_{S^2}`.
//!
//! In conformal gauge the flow is `phi_t = -e^{-2 phi} (1 - Δ₀ phi) = -K`.
//! Steps are linearly implicit Crank–Nicolson: the diffusion `e^{-2 phi}`
//! coefficient is frozen at the extrapolated half step while `Δ₀ phi` is
//! averaged between the two levels. The first step seeds the extrapolation
//! with an implicit Euler half step.

use super::{sampled_trajectory, FlowTrajectory};
use crate::error::{invalid, Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::linalg::solve_tridiagonal;

/// Round-sphere Laplacian `Δ₀` in flux form with no flux through the poles.
pub(crate) fn laplace0(grid: &Grid, phi: &[f64]) -> Vec<f64> {
    let (sub, diag, sup) = laplace0_bands(grid);
    let n = phi.len();
    (0..n)
        .map(|j| {
            let l = if j > 0 { sub[j] * phi[j - 1] } else { 0.0 };
            let r = if j + 1 < n { sup[j] * phi[j + 1] } else { 0.0 };
            l + diag[j] * phi[j] + r
        })
        .collect()
}

fn laplace0_bands(grid: &Grid) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = grid.len();
    let h = grid.h();
    let th = grid.colatitudes();
    let face = |j: usize| (j as f64 * h).sin();
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    for j in 0..n {
        let c = 1.0 / (h * h * th[j].sin());
        if j > 0 {
            sub[j] = c * face(j);
        }
        if j + 1 < n {
            sup[j] = c * face(j + 1);
        }
        diag[j] = -(sub[j] + sup[j]);
    }
    (sub, diag, sup)
}

/// One-sided slopes `(north, south)` of `phi` at the poles, from the
/// quadratic through the three nodes nearest each pole. South slope is with
/// respect to distance from the south pole.
pub fn pole_slopes(phi: &ScalarField) -> Result<(f64, f64)> {
    let n = phi.values.len();
    if !matches!(phi.grid, Grid::Colatitude { .. }) || n < 3 {
        return Err(invalid("pole slopes need a colatitude grid with at least 3 nodes"));
    }
    let h = phi.grid.h();
    let v = &phi.values;
    let north = (-2.0 * v[0] + 3.0 * v[1] - v[2]) / h;
    let south = (-2.0 * v[n - 1] + 3.0 * v[n - 2] - v[n - 3]) / h;
    Ok((north, south))
}

fn check_pole_regular(phi: &ScalarField) -> Result<()> {
    let (north, south) = pole_slopes(phi)?;
    let h = phi.grid.h();
    let tolerance = h * h * (1.0 + phi.max_abs());
    for (pole, slope) in [("north", north), ("south", south)] {
        if !(slope.abs() <= tolerance) {
            return Err(Error::PoleIrregular { pole, slope, tolerance });
        }
    }
    Ok(())
}

/// Evolve `phi` from `t = 0` to `final_time` in `time_steps` equal steps.
pub fn evolve_rotsym_surface(initial_phi: &ScalarField, final_time: f64, time_steps: usize) -> Result<FlowTrajectory> {
    let grid = initial_phi.grid.clone();
    if !matches!(grid, Grid::Colatitude { .. }) || grid.len() < 4 {
        return Err(invalid("conformal factor must live on a colatitude grid of at least 4 nodes"));
    }
    if !(final_time.is_finite() && final_time > 0.0) || time_steps == 0 {
        return Err(invalid("need a positive final time and at least one step"));
    }
    if initial_phi.values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("initial conformal factor must be finite"));
    }
    check_pole_regular(initial_phi)?;

    let n = grid.len();
    let dt = final_time / time_steps as f64;
    let (lsub, ldiag, lsup) = laplace0_bands(&grid);
    let lap = |p: &[f64]| laplace0(&grid, p);

    // Solve (I - c a Δ₀) x = rhs with a per-node coefficient.
    let implicit = |a: &[f64], c: f64, rhs: &[f64]| -> Result<Vec<f64>> {
        let sub: Vec<f64> = (0..n).map(|j| -c * a[j] * lsub[j]).collect();
        let sup: Vec<f64> = (0..n).map(|j| -c * a[j] * lsup[j]).collect();
        let diag: Vec<f64> = (0..n).map(|j| 1.0 - c * a[j] * ldiag[j]).collect();
        solve_tridiagonal(&sub, &diag, &sup, rhs)
    };

    let mut times = Vec::with_capacity(time_steps + 1);
    let mut phis = Vec::with_capacity(time_steps + 1);
    times.push(0.0);
    phis.push(initial_phi.values.clone());

    let mut prev: Option<Vec<f64>> = None;
    for k in 0..time_steps {
        let cur = phis.last().expect("seeded").clone();
        let t_next = if k + 1 == time_steps { final_time } else { (k + 1) as f64 * dt };
        let star: Vec<f64> = match &prev {
            Some(p) => cur.iter().zip(p).map(|(c, q)| 1.5 * c - 0.5 * q).collect(),
            None => {
                let a: Vec<f64> = cur.iter().map(|p| (-2.0 * p).exp()).collect();
                let rhs: Vec<f64> = cur.iter().zip(&a).map(|(p, a)| p - 0.5 * dt * a).collect();
                implicit(&a, 0.5 * dt, &rhs)?
            }
        };
        let a: Vec<f64> = star.iter().map(|p| (-2.0 * p).exp()).collect();
        let l = lap(&cur);
        let rhs: Vec<f64> = (0..n).map(|j| cur[j] - dt * a[j] + 0.5 * dt * a[j] * l[j]).collect();
        let next = implicit(&a, 0.5 * dt, &rhs).map_err(|_| Error::BlowUp { time: t_next })?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { time: t_next });
        }
        prev = Some(cur);
        times.push(t_next);
        phis.push(next);
    }
    Ok(sampled_trajectory(grid, final_time, times, phis))
}
