//! Scalar, vector and symmetric 2-tensor fields sampled on a grid.
//!
//! Tensors are stored in an orthonormal frame. Rotationally symmetric
//! backends only carry the radial component and one transverse component,
//! which stands for `multiplicity` identical eigen-directions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalarField {
    pub grid: Grid,
    pub time: f64,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, time: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, time, values })
    }

    pub fn from_fn(grid: &Grid, time: f64, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Self { grid: grid.clone(), time, values }
    }

    pub fn constant(grid: &Grid, time: f64, c: f64) -> Self {
        Self { grid: grid.clone(), time, values: vec![c; grid.len()] }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            time: self.time,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid.clone(),
            time: self.time,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// How a frame tensor's stored components map to the full tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameShape {
    /// One-dimensional: only `c11`.
    Line,
    /// Two independent axes: `c11`, `c22`, `c12`.
    Plane,
    /// Radial `c11` plus `multiplicity` copies of the transverse `c22`.
    Warped { multiplicity: usize },
}

impl FrameShape {
    pub fn dim(&self) -> usize {
        match *self {
            FrameShape::Line => 1,
            FrameShape::Plane => 2,
            FrameShape::Warped { multiplicity } => 1 + multiplicity,
        }
    }

    fn transverse(&self) -> f64 {
        match *self {
            FrameShape::Line => 0.0,
            FrameShape::Plane => 1.0,
            FrameShape::Warped { multiplicity } => multiplicity as f64,
        }
    }

    fn has_offdiag(&self) -> bool {
        matches!(self, FrameShape::Plane)
    }
}

/// Symmetric 2-tensor in an orthonormal frame.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameTensorField {
    pub grid: Grid,
    pub time: f64,
    pub shape: FrameShape,
    pub c11: Vec<f64>,
    pub c22: Vec<f64>,
    pub c12: Vec<f64>,
}

impl FrameTensorField {
    pub fn zeros(grid: &Grid, time: f64, shape: FrameShape) -> Self {
        let n = grid.len();
        Self {
            grid: grid.clone(),
            time,
            shape,
            c11: vec![0.0; n],
            c22: vec![0.0; n],
            c12: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.c11.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c11.is_empty()
    }

    /// `g` itself in this frame.
    pub fn identity(grid: &Grid, time: f64, shape: FrameShape) -> Self {
        let mut t = Self::zeros(grid, time, shape);
        t.c11.fill(1.0);
        if shape != FrameShape::Line {
            t.c22.fill(1.0);
        }
        t
    }

    pub fn trace_at(&self, i: usize) -> f64 {
        self.c11[i] + self.shape.transverse() * self.c22[i]
    }

    pub fn norm_sq_at(&self, i: usize) -> f64 {
        let m = self.shape.transverse();
        self.c11[i].powi(2) + m * self.c22[i].powi(2) + 2.0 * self.c12[i].powi(2)
    }

    pub fn dot_at(&self, other: &FrameTensorField, i: usize) -> f64 {
        let m = self.shape.transverse();
        self.c11[i] * other.c11[i] + m * self.c22[i] * other.c22[i] + 2.0 * self.c12[i] * other.c12[i]
    }

    /// Eigenvalues (min, max) at node `i`.
    pub fn eigen_range_at(&self, i: usize) -> (f64, f64) {
        match self.shape {
            FrameShape::Line => (self.c11[i], self.c11[i]),
            FrameShape::Warped { .. } => {
                let (a, b) = (self.c11[i], self.c22[i]);
                (a.min(b), a.max(b))
            }
            FrameShape::Plane => {
                let (a, b, c) = (self.c11[i], self.c22[i], self.c12[i]);
                let mid = 0.5 * (a + b);
                let rad = (0.25 * (a - b).powi(2) + c * c).sqrt();
                (mid - rad, mid + rad)
            }
        }
    }

    /// `T(X, X)` for a frame vector `X` at node `i`.
    pub fn quadratic_at(&self, x: &FrameVectorField, i: usize) -> f64 {
        let a = x.c1[i];
        let b = if self.shape.has_offdiag() { x.c2[i] } else { 0.0 };
        self.c11[i] * a * a + self.c22[i] * b * b + 2.0 * self.c12[i] * a * b
    }

    pub fn trace(&self) -> ScalarField {
        self.pointwise(|t, i| t.trace_at(i))
    }

    pub fn norm(&self) -> ScalarField {
        self.pointwise(|t, i| t.norm_sq_at(i).sqrt())
    }

    pub fn pointwise(&self, f: impl Fn(&Self, usize) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            time: self.time,
            values: (0..self.len()).map(|i| f(self, i)).collect(),
        }
    }

    fn check(&self, other: &FrameTensorField) -> Result<()> {
        if self.grid != other.grid || self.shape != other.shape {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Componentwise `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &FrameTensorField, b: f64) -> Result<Self> {
        self.check(other)?;
        let lin = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| a * p + b * q).collect();
        Ok(Self {
            grid: self.grid.clone(),
            time: self.time,
            shape: self.shape,
            c11: lin(&self.c11, &other.c11),
            c22: lin(&self.c22, &other.c22),
            c12: lin(&self.c12, &other.c12),
        })
    }

    /// Every component multiplied by the matching entry of `s`.
    pub fn scale_by(&self, s: &[f64]) -> Self {
        let sc = |x: &[f64]| x.iter().zip(s).map(|(p, q)| p * q).collect();
        Self {
            grid: self.grid.clone(),
            time: self.time,
            shape: self.shape,
            c11: sc(&self.c11),
            c22: sc(&self.c22),
            c12: sc(&self.c12),
        }
    }

    /// Largest componentwise absolute difference over selected nodes.
    pub fn max_diff_on(&self, other: &FrameTensorField, nodes: &[usize]) -> Result<f64> {
        self.check(other)?;
        Ok(nodes.iter().fold(0.0, |m, &i| {
            m.max((self.c11[i] - other.c11[i]).abs())
                .max((self.c22[i] - other.c22[i]).abs())
                .max((self.c12[i] - other.c12[i]).abs())
        }))
    }

    /// `A B + B A` as a symmetric tensor.
    pub fn sym_product(&self, other: &FrameTensorField) -> Result<Self> {
        self.check(other)?;
        let mut t = Self::zeros(&self.grid, self.time, self.shape);
        for i in 0..self.len() {
            let (a11, a22, a12) = (self.c11[i], self.c22[i], self.c12[i]);
            let (b11, b22, b12) = (other.c11[i], other.c22[i], other.c12[i]);
            t.c11[i] = 2.0 * (a11 * b11 + a12 * b12);
            t.c22[i] = 2.0 * (a12 * b12 + a22 * b22);
            t.c12[i] = a11 * b12 + a12 * b22 + b11 * a12 + b12 * a22;
        }
        Ok(t)
    }

    /// Matrix square `X_ik X_kj`.
    pub fn square(&self) -> Self {
        let mut t = Self::zeros(&self.grid, self.time, self.shape);
        for i in 0..self.len() {
            let (a, b, c) = (self.c11[i], self.c22[i], self.c12[i]);
            t.c11[i] = a * a + c * c;
            t.c22[i] = b * b + c * c;
            t.c12[i] = c * (a + b);
        }
        t
    }

    /// `x ⊗ y + y ⊗ x`.
    pub fn sym_outer(x: &FrameVectorField, y: &FrameVectorField, shape: FrameShape) -> Self {
        let mut t = Self::zeros(&x.grid, x.time, shape);
        for i in 0..x.len() {
            t.c11[i] = 2.0 * x.c1[i] * y.c1[i];
            if shape.has_offdiag() {
                t.c22[i] = 2.0 * x.c2[i] * y.c2[i];
                t.c12[i] = x.c1[i] * y.c2[i] + x.c2[i] * y.c1[i];
            }
        }
        t
    }

    /// `x ⊗ x` for a frame vector field.
    pub fn outer(x: &FrameVectorField, shape: FrameShape) -> Self {
        let mut t = Self::zeros(&x.grid, x.time, shape);
        for i in 0..x.len() {
            t.c11[i] = x.c1[i] * x.c1[i];
            if shape.has_offdiag() {
                t.c22[i] = x.c2[i] * x.c2[i];
                t.c12[i] = x.c1[i] * x.c2[i];
            }
        }
        t
    }
}

/// Vector field in an orthonormal frame. `c2` is only populated for planar
/// frames; warped frames carry the radial component alone.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameVectorField {
    pub grid: Grid,
    pub time: f64,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
}

impl FrameVectorField {
    pub fn len(&self) -> usize {
        self.c1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c1.is_empty()
    }

    pub fn norm_sq_at(&self, i: usize) -> f64 {
        self.c1[i].powi(2) + self.c2[i].powi(2)
    }

    pub fn norm_sq(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            time: self.time,
            values: (0..self.len()).map(|i| self.norm_sq_at(i)).collect(),
        }
    }

    pub fn dot_at(&self, other: &FrameVectorField, i: usize) -> f64 {
        self.c1[i] * other.c1[i] + self.c2[i] * other.c2[i]
    }
}

/// A scalar field paired with a trust mask. Untrusted nodes never enter
/// suprema, maxima or integrals taken over a masked field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaskedField {
    pub field: ScalarField,
    pub trusted: Vec<bool>,
}

impl MaskedField {
    pub fn all_trusted(field: ScalarField) -> Self {
        let trusted = vec![true; field.values.len()];
        Self { field, trusted }
    }

    /// Drop nodes outside `keep` from the trusted set.
    pub fn restrict(mut self, keep: &[bool]) -> Self {
        for (t, k) in self.trusted.iter_mut().zip(keep) {
            *t &= *k;
        }
        self
    }

    /// Supremum of `|value|` over trusted nodes.
    pub fn max_abs(&self) -> Option<(f64, usize)> {
        MaskedField { field: self.field.map(f64::abs), trusted: self.trusted.clone() }.sup()
    }

    pub fn trusted_count(&self) -> usize {
        self.trusted.iter().filter(|&&t| t).count()
    }

    /// Supremum over trusted nodes with the lowest index winning ties.
    pub fn sup(&self) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (i, (&v, &ok)) in self.field.values.iter().zip(&self.trusted).enumerate() {
            if ok && best.is_none_or(|(b, _)| v > b) {
                best = Some((v, i));
            }
        }
        best
    }
}

/// A tensor field paired with a trust mask.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaskedTensor {
    pub tensor: FrameTensorField,
    pub trusted: Vec<bool>,
}

impl MaskedTensor {
    pub fn restrict(mut self, keep: &[bool]) -> Self {
        for (t, k) in self.trusted.iter_mut().zip(keep) {
            *t &= *k;
        }
        self
    }

    /// Largest absolute component over trusted nodes, as a masked scalar.
    pub fn component_max(&self) -> MaskedField {
        let t = &self.tensor;
        MaskedField {
            field: t.pointwise(|t, i| t.c11[i].abs().max(t.c22[i].abs()).max(t.c12[i].abs())),
            trusted: self.trusted.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(a: f64, b: f64, c: f64) -> FrameTensorField {
        let g = Grid::Periodic2d { nx: 1, ny: 1, lx: 1.0, ly: 1.0 };
        let mut t = FrameTensorField::zeros(&g, 0.0, FrameShape::Plane);
        t.c11[0] = a;
        t.c22[0] = b;
        t.c12[0] = c;
        t
    }

    #[test]
    fn plane_eigenvalues_match_trace_and_determinant() {
        let t = plane(3.0, -1.0, 2.0);
        let (lo, hi) = t.eigen_range_at(0);
        assert!((lo + hi - 2.0).abs() < 1e-14);
        assert!((lo * hi - (-3.0 - 4.0)).abs() < 1e-13);
        assert!((lo * lo + hi * hi - t.norm_sq_at(0)).abs() < 1e-12);
    }

    #[test]
    fn square_matches_sym_product_with_itself() {
        let t = plane(1.5, -0.5, 0.7);
        let sq = t.square();
        let sp = t.sym_product(&t).unwrap();
        assert!((2.0 * sq.c11[0] - sp.c11[0]).abs() < 1e-15);
        assert!((2.0 * sq.c12[0] - sp.c12[0]).abs() < 1e-15);
        // Cayley–Hamilton: X^2 = tr(X) X - det(X) I.
        let (tr, det) = (1.0, 1.5 * -0.5 - 0.49);
        assert!((sq.c11[0] - (tr * 1.5 - det)).abs() < 1e-14);
        assert!((sq.c12[0] - tr * 0.7).abs() < 1e-14);
    }

    #[test]
    fn warped_trace_counts_multiplicity() {
        let g = Grid::Colatitude { n: 1 };
        let t = FrameTensorField::identity(&g, 0.0, FrameShape::Warped { multiplicity: 3 });
        assert_eq!(t.trace_at(0), 4.0);
        assert_eq!(t.norm_sq_at(0), 4.0);
    }

    #[test]
    fn masked_sup_skips_untrusted_and_prefers_lowest_index() {
        let g = Grid::Periodic1d { n: 4, length: 1.0 };
        let f = ScalarField::new(g, 0.0, vec![9.0, 2.0, 5.0, 5.0]).unwrap();
        let m = MaskedField { field: f, trusted: vec![false, true, true, true] };
        assert_eq!(m.sup(), Some((5.0, 2)));
    }
}
