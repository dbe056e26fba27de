//! Second-order central difference stencils.
//!
//! Periodic grids wrap around. On the colatitude grid the ghost values
//! across each pole are the even reflection `u[-1] = u[0]`, `u[n] = u[n-1]`,
//! which is exact for rotationally symmetric smooth scalars.

use crate::grid::Grid;

fn neighbours(grid: &Grid, i: usize, axis: usize) -> (usize, usize) {
    match *grid {
        Grid::Periodic1d { n, .. } => ((i + n - 1) % n, (i + 1) % n),
        Grid::Periodic2d { nx, ny, .. } => {
            let (ix, iy) = (i % nx, i / nx);
            if axis == 0 {
                (iy * nx + (ix + nx - 1) % nx, iy * nx + (ix + 1) % nx)
            } else {
                (((iy + ny - 1) % ny) * nx + ix, ((iy + 1) % ny) * nx + ix)
            }
        }
        Grid::Colatitude { n } => (i.saturating_sub(1), (i + 1).min(n - 1)),
    }
}

/// First derivative along `axis`.
pub fn d1(grid: &Grid, v: &[f64], axis: usize) -> Vec<f64> {
    let h = grid.spacing()[axis];
    (0..v.len())
        .map(|i| {
            let (l, r) = neighbours(grid, i, axis);
            (v[r] - v[l]) / (2.0 * h)
        })
        .collect()
}

/// Second derivative along `axis`.
pub fn d2(grid: &Grid, v: &[f64], axis: usize) -> Vec<f64> {
    let h = grid.spacing()[axis];
    (0..v.len())
        .map(|i| {
            let (l, r) = neighbours(grid, i, axis);
            (v[r] - 2.0 * v[i] + v[l]) / (h * h)
        })
        .collect()
}

/// Mixed second derivative on the 2-torus; zero elsewhere.
pub fn d12(grid: &Grid, v: &[f64]) -> Vec<f64> {
    match *grid {
        // The composition of the two centered first differences is the
        // four-point cross stencil.
        Grid::Periodic2d { .. } => d1(grid, &d1(grid, v, 0), 1),
        _ => vec![0.0; v.len()],
    }
}

/// Time derivative by centered differences of three equally spaced samples.
pub fn centered_time(prev: &[f64], next: &[f64], dt: f64) -> Vec<f64> {
    prev.iter().zip(next).map(|(a, b)| (b - a) / (2.0 * dt)).collect()
}
