//! Differential operators, quadrature and distance on a snapshot.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{unit_sphere_area, Backend, GeometrySnapshot, Metric};
use crate::error::{Error, Result};
use crate::field::{FrameShape, FrameTensorField, FrameVectorField, ScalarField};
use crate::grid::Grid;
use crate::stencil::{d1, d12, d2};

fn check(s: &GeometrySnapshot, grid: &Grid) -> Result<()> {
    if &s.grid != grid {
        Err(Error::GridMismatch)
    } else {
        Ok(())
    }
}

fn field(s: &GeometrySnapshot, values: Vec<f64>) -> ScalarField {
    ScalarField { grid: s.grid.clone(), time: s.time, values }
}

/// Factor turning `d/dtheta` into the unit radial frame derivative.
pub(crate) fn radial_scale(s: &GeometrySnapshot) -> Vec<f64> {
    match &s.metric {
        Metric::Round { radius, .. } => vec![1.0 / radius; s.grid.len()],
        Metric::Conformal { phi } => phi.iter().map(|p| (-p).exp()).collect(),
        Metric::Flat { .. } => vec![1.0; s.grid.len()],
    }
}

/// Geodesic curvature of the latitude spheres, `e_1` of `log` of the warp.
pub(crate) fn kappa(s: &GeometrySnapshot) -> Vec<f64> {
    let th = s.grid.colatitudes();
    match &s.metric {
        Metric::Round { radius, .. } => th.iter().map(|t| 1.0 / (t.tan() * radius)).collect(),
        Metric::Conformal { phi } => {
            let dphi = d1(&s.grid, phi, 0);
            th.iter()
                .zip(phi.iter().zip(&dphi))
                .map(|(t, (p, dp))| (-p).exp() * (1.0 / t.tan() + dp))
                .collect()
        }
        Metric::Flat { .. } => vec![0.0; s.grid.len()],
    }
}

/// Quadrature weights of the volume form; `sum(w * f)` approximates `∫ f dg`.
pub fn volume_weights(s: &GeometrySnapshot) -> Vec<f64> {
    match (&s.metric, &s.grid) {
        (Metric::Flat { .. }, g) => {
            let cell: f64 = g.spacing().iter().product();
            vec![cell; g.len()]
        }
        (Metric::Round { dim, radius }, g) => {
            let h = g.h();
            let c = unit_sphere_area(dim - 1) * radius.powi(*dim as i32) * h;
            g.colatitudes().iter().map(|t| c * t.sin().powi(*dim as i32 - 1)).collect()
        }
        (Metric::Conformal { phi }, g) => {
            let h = g.h();
            g.colatitudes()
                .iter()
                .zip(phi)
                .map(|(t, p)| 2.0 * PI * (2.0 * p).exp() * t.sin() * h)
                .collect()
        }
    }
}

/// Flux coefficients `sigma[j]` on the face between nodes `j` and `j + 1`,
/// scaled so that `W_j (Δu)_j = sigma[j] (u[j+1] - u[j]) - sigma[j-1] (u[j] - u[j-1])`.
/// Colatitude grids have `n - 1` interior faces (the pole faces carry no flux);
/// the periodic circle has `n` faces, the last one closing the loop.
pub(crate) fn face_coefficients(s: &GeometrySnapshot) -> Vec<f64> {
    let h = s.grid.h();
    match (&s.metric, &s.grid) {
        (Metric::Flat { .. }, Grid::Periodic1d { n, .. }) => vec![1.0 / h; *n],
        (Metric::Round { dim, radius }, Grid::Colatitude { n }) => {
            let c = unit_sphere_area(dim - 1) * radius.powi(*dim as i32 - 2) / h;
            (1..*n).map(|j| c * (j as f64 * h).sin().powi(*dim as i32 - 1)).collect()
        }
        (Metric::Conformal { .. }, Grid::Colatitude { n }) => {
            (1..*n).map(|j| 2.0 * PI * (j as f64 * h).sin() / h).collect()
        }
        _ => Vec::new(),
    }
}

/// Laplace–Beltrami operator. On the colatitude backends it is discretized
/// in flux form, so `∫ Δu dg = 0` holds to roundoff.
pub fn laplace_beltrami(s: &GeometrySnapshot, f: &ScalarField) -> Result<ScalarField> {
    check(s, &f.grid)?;
    let u = &f.values;
    let values = match s.backend {
        Backend::Torus1d => d2(&s.grid, u, 0),
        Backend::Torus2d => {
            let (a, b) = (d2(&s.grid, u, 0), d2(&s.grid, u, 1));
            a.iter().zip(&b).map(|(x, y)| x + y).collect()
        }
        Backend::ShrinkingSphere | Backend::RotsymSurface => {
            let sigma = face_coefficients(s);
            let w = volume_weights(s);
            let n = u.len();
            (0..n)
                .map(|j| {
                    let right = if j + 1 < n { sigma[j] * (u[j + 1] - u[j]) } else { 0.0 };
                    let left = if j > 0 { sigma[j - 1] * (u[j] - u[j - 1]) } else { 0.0 };
                    (right - left) / w[j]
                })
                .collect()
        }
    };
    Ok(field(s, values))
}

/// Gradient in the orthonormal frame.
pub fn gradient(s: &GeometrySnapshot, f: &ScalarField) -> Result<FrameVectorField> {
    check(s, &f.grid)?;
    let n = f.values.len();
    let (c1, c2) = match s.backend {
        Backend::Torus1d => (d1(&s.grid, &f.values, 0), vec![0.0; n]),
        Backend::Torus2d => (d1(&s.grid, &f.values, 0), d1(&s.grid, &f.values, 1)),
        _ => {
            let scale = radial_scale(s);
            let d = d1(&s.grid, &f.values, 0);
            (d.iter().zip(&scale).map(|(a, b)| a * b).collect(), vec![0.0; n])
        }
    };
    Ok(FrameVectorField { grid: s.grid.clone(), time: s.time, c1, c2 })
}

pub fn gradient_sq(s: &GeometrySnapshot, f: &ScalarField) -> Result<ScalarField> {
    Ok(gradient(s, f)?.norm_sq())
}

/// Covariant Hessian in the orthonormal frame.
pub fn hessian_frame(s: &GeometrySnapshot, f: &ScalarField) -> Result<FrameTensorField> {
    check(s, &f.grid)?;
    let shape = s.frame_shape();
    let mut t = FrameTensorField::zeros(&s.grid, s.time, shape);
    let u = &f.values;
    match s.backend {
        Backend::Torus1d => t.c11 = d2(&s.grid, u, 0),
        Backend::Torus2d => {
            t.c11 = d2(&s.grid, u, 0);
            t.c22 = d2(&s.grid, u, 1);
            t.c12 = d12(&s.grid, u);
        }
        _ => {
            let scale = radial_scale(s);
            let kap = kappa(s);
            let du = d1(&s.grid, u, 0);
            let ddu = d2(&s.grid, u, 0);
            let dphi = match s.phi() {
                Some(phi) => d1(&s.grid, phi, 0),
                None => vec![0.0; u.len()],
            };
            for j in 0..u.len() {
                t.c11[j] = scale[j] * scale[j] * (ddu[j] - dphi[j] * du[j]);
                t.c22[j] = kap[j] * scale[j] * du[j];
            }
        }
    }
    Ok(t)
}

/// Rough Laplacian of a symmetric 2-tensor. Flat backends act componentwise;
/// for a rotationally symmetric `diag(a, b, ..., b)` the curved frame adds
/// `-2 m κ² (a - b)` to the radial and `2 κ² (a - b)` to the transverse part.
pub fn rough_laplacian(s: &GeometrySnapshot, t: &FrameTensorField) -> Result<FrameTensorField> {
    check(s, &t.grid)?;
    let lap = |v: &[f64]| -> Result<Vec<f64>> {
        Ok(laplace_beltrami(s, &field(s, v.to_vec()))?.values)
    };
    let mut out = FrameTensorField::zeros(&s.grid, s.time, t.shape);
    out.c11 = lap(&t.c11)?;
    match t.shape {
        FrameShape::Line => {}
        FrameShape::Plane => {
            out.c22 = lap(&t.c22)?;
            out.c12 = lap(&t.c12)?;
        }
        FrameShape::Warped { multiplicity } => {
            out.c22 = lap(&t.c22)?;
            let kap = kappa(s);
            let m = multiplicity as f64;
            for j in 0..t.len() {
                let k2 = kap[j] * kap[j];
                let d = t.c11[j] - t.c22[j];
                out.c11[j] -= 2.0 * m * k2 * d;
                out.c22[j] += 2.0 * k2 * d;
            }
        }
    }
    Ok(out)
}

/// `∇_X T` for a frame vector field `X`. Radial vectors on the warped
/// backends move the frame by parallel transport, so this is componentwise.
pub fn directional_derivative(
    s: &GeometrySnapshot,
    x: &FrameVectorField,
    t: &FrameTensorField,
) -> Result<FrameTensorField> {
    check(s, &t.grid)?;
    check(s, &x.grid)?;
    let deriv = |v: &[f64]| -> Vec<f64> {
        let g = gradient(s, &field(s, v.to_vec())).expect("grid checked");
        (0..v.len()).map(|i| g.dot_at(x, i)).collect()
    };
    let mut out = FrameTensorField::zeros(&s.grid, s.time, t.shape);
    out.c11 = deriv(&t.c11);
    match t.shape {
        FrameShape::Line => {}
        FrameShape::Plane => {
            out.c22 = deriv(&t.c22);
            out.c12 = deriv(&t.c12);
        }
        FrameShape::Warped { .. } => out.c22 = deriv(&t.c22),
    }
    Ok(out)
}

/// `∫ f dg` by the midpoint rule with the metric volume density.
pub fn integrate(s: &GeometrySnapshot, f: &ScalarField) -> Result<f64> {
    check(s, &f.grid)?;
    Ok(volume_weights(s).iter().zip(&f.values).map(|(w, v)| w * v).sum())
}

/// Base point for geodesic distances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Anchor {
    Node(usize),
    NorthPole,
    SouthPole,
}

/// Distance from `anchor` to every node.
pub fn geodesic_distance(s: &GeometrySnapshot, anchor: Anchor) -> Result<ScalarField> {
    let n = s.grid.len();
    let values = match (&s.metric, anchor) {
        (Metric::Flat { lengths }, Anchor::Node(i0)) => {
            if i0 >= n {
                return Err(Error::InvalidInput(format!("node {i0} outside grid of {n}")));
            }
            let x0 = s.grid.coords(i0);
            (0..n)
                .map(|i| {
                    let x = s.grid.coords(i);
                    x.iter()
                        .zip(&x0)
                        .zip(lengths)
                        .map(|((a, b), l)| {
                            let d = (a - b).abs();
                            let d = d.min(l - d);
                            d * d
                        })
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        }
        (Metric::Round { radius, .. }, pole @ (Anchor::NorthPole | Anchor::SouthPole)) => s
            .grid
            .colatitudes()
            .iter()
            .map(|t| radius * if pole == Anchor::NorthPole { *t } else { PI - t })
            .collect(),
        (Metric::Conformal { phi }, pole @ (Anchor::NorthPole | Anchor::SouthPole)) => {
            let h = s.grid.h();
            let mut e: Vec<f64> = phi.iter().map(|p| p.exp()).collect();
            if pole == Anchor::SouthPole {
                e.reverse();
            }
            // Even extrapolation of e^phi to the pole, then trapezoids.
            let at_pole = (9.0 * e[0] - e[1]) / 8.0;
            let mut d = vec![0.0; n];
            d[0] = 0.25 * h * (at_pole + e[0]);
            for j in 1..n {
                d[j] = d[j - 1] + 0.5 * h * (e[j - 1] + e[j]);
            }
            if pole == Anchor::SouthPole {
                d.reverse();
            }
            d
        }
        (Metric::Flat { .. }, _) => {
            return Err(Error::Unsupported("tori have no poles; anchor at a node".into()))
        }
        (_, Anchor::Node(_)) => {
            return Err(Error::Unsupported(
                "distances on the sphere backends are only available from a pole".into(),
            ))
        }
    };
    Ok(field(s, values))
}
