//! Banded and matrix-free linear solvers.
//!
//! The banded eliminations never form differences of positive quantities
//! when the matrix is an M-matrix and the right-hand side is nonnegative,
//! so positive data stays positive even far down a Gaussian tail.

use crate::error::{Error, Result};

/// Tridiagonal system `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`.
/// `sub[0]` and `sup[n-1]` are ignored.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n || n == 0 {
        return Err(Error::LinearSolve("tridiagonal band length mismatch".into()));
    }
    let mut b = diag.to_vec();
    let mut d = rhs.to_vec();
    for i in 1..n {
        pivot_ok(b[i - 1], i - 1)?;
        let m = sub[i] / b[i - 1];
        b[i] -= m * sup[i - 1];
        d[i] -= m * d[i - 1];
    }
    pivot_ok(b[n - 1], n - 1)?;
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1] / b[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = (d[i] - sup[i] * x[i + 1]) / b[i];
    }
    Ok(x)
}

/// Cyclic tridiagonal system: as [`solve_tridiagonal`] but `sub[0]` couples
/// row 0 to `x[n-1]` and `sup[n-1]` couples row `n-1` to `x[0]`.
///
/// Plain elimination that tracks the fill in the last row and column.
pub fn solve_cyclic_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(Error::LinearSolve("cyclic band length mismatch".into()));
    }
    if n < 3 {
        return Err(Error::LinearSolve("cyclic system needs at least 3 unknowns".into()));
    }
    let last = n - 1;
    let mut b = diag.to_vec();
    let mut c = sup.to_vec();
    let mut d = rhs.to_vec();
    // e[i]: entry of row i in the last column; f[k]: entry of the last row in column k.
    let mut e = vec![0.0; n];
    let mut f = vec![0.0; n];
    e[0] = sub[0];
    e[last - 1] += c[last - 1];
    c[last - 1] = 0.0;
    f[0] = sup[last];
    f[last - 1] += sub[last];
    let mut b_last = b[last];

    for i in 0..last {
        pivot_ok(b[i], i)?;
        if i + 1 < last {
            let m = sub[i + 1] / b[i];
            b[i + 1] -= m * c[i];
            e[i + 1] -= m * e[i];
            d[i + 1] -= m * d[i];
        }
        let l = f[i] / b[i];
        if i + 1 < last {
            f[i + 1] -= l * c[i];
        }
        b_last -= l * e[i];
        d[last] -= l * d[i];
    }
    pivot_ok(b_last, last)?;
    let mut x = vec![0.0; n];
    x[last] = d[last] / b_last;
    for i in (0..last).rev() {
        let next = if i + 1 < last { c[i] * x[i + 1] } else { 0.0 };
        x[i] = (d[i] - next - e[i] * x[last]) / b[i];
    }
    Ok(x)
}

fn pivot_ok(p: f64, i: usize) -> Result<()> {
    if p.is_finite() && p.abs() > 0.0 {
        Ok(())
    } else {
        Err(Error::LinearSolve(format!("zero or non-finite pivot at row {i}")))
    }
}

/// Conjugate gradients for a symmetric positive definite operator.
/// Converges when the residual norm drops below `tol * |rhs|`.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    rhs: &[f64],
    guess: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut x = guess.to_vec();
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = tol * tol * dot(rhs, rhs).max(f64::MIN_POSITIVE);
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        if rr <= target {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::LinearSolve("operator is not positive definite".into()));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rr <= target {
        Ok(x)
    } else {
        Err(Error::LinearSolve(format!(
            "conjugate gradients did not converge in {max_iter} iterations"
        )))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
