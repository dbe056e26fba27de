//! Structured grids for the model backends.
//!
//! Periodic grids place node `j` at `j * h`. The colatitude grid uses
//! half-offset nodes `theta_j = (j + 1/2) * pi / n`, so no node sits on a pole.

use std::f64::consts::PI;

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Grid {
    Periodic1d { n: usize, length: f64 },
    Periodic2d { nx: usize, ny: usize, lx: f64, ly: f64 },
    Colatitude { n: usize },
}

impl Grid {
    pub fn len(&self) -> usize {
        match *self {
            Grid::Periodic1d { n, .. } | Grid::Colatitude { n } => n,
            Grid::Periodic2d { nx, ny, .. } => nx * ny,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid spacing along each coordinate axis.
    pub fn spacing(&self) -> Vec<f64> {
        match *self {
            Grid::Periodic1d { n, length } => vec![length / n as f64],
            Grid::Periodic2d { nx, ny, lx, ly } => vec![lx / nx as f64, ly / ny as f64],
            Grid::Colatitude { n } => vec![PI / n as f64],
        }
    }

    /// Largest spacing; the refinement parameter of convergence studies.
    pub fn h(&self) -> f64 {
        self.spacing().into_iter().fold(0.0, f64::max)
    }

    pub fn axes(&self) -> usize {
        match self {
            Grid::Periodic2d { .. } => 2,
            _ => 1,
        }
    }

    /// Coordinates of node `i` (one entry per axis).
    pub fn coords(&self, i: usize) -> Vec<f64> {
        match *self {
            Grid::Periodic1d { n, length } => vec![i as f64 * length / n as f64],
            Grid::Periodic2d { nx, ny, lx, ly } => {
                let (ix, iy) = (i % nx, i / nx);
                vec![ix as f64 * lx / nx as f64, iy as f64 * ly / ny as f64]
            }
            Grid::Colatitude { n } => vec![(i as f64 + 0.5) * PI / n as f64],
        }
    }

    /// Colatitudes of all nodes. Empty for periodic grids.
    pub fn colatitudes(&self) -> Vec<f64> {
        match *self {
            Grid::Colatitude { n } => (0..n).map(|j| (j as f64 + 0.5) * PI / n as f64).collect(),
            _ => Vec::new(),
        }
    }

    pub fn is_periodic(&self) -> bool {
        !matches!(self, Grid::Colatitude { .. })
    }

    /// Same grid with every axis refined by `factor`.
    pub fn refined(&self, factor: usize) -> Grid {
        match *self {
            Grid::Periodic1d { n, length } => Grid::Periodic1d { n: n * factor, length },
            Grid::Periodic2d { nx, ny, lx, ly } => Grid::Periodic2d {
                nx: nx * factor,
                ny: ny * factor,
                lx,
                ly,
            },
            Grid::Colatitude { n } => Grid::Colatitude { n: n * factor },
        }
    }
}
