//! Right-hand sides of the gradient estimates.
//!
//! The estimates carry constants the theory only proves to exist. They are
//! inputs here; [`smallest_gradient_constant`] fits the least value that
//! makes a measured series satisfy the bound instead of guessing one.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::CurvatureBounds;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientBoundForm {
    /// `(n + ε) α² / (2 tau) + C (r⁻² + r⁻¹ + 1)`; with `r = ∞` this is the
    /// global form `(n + ε) α² / (2 tau) + C`.
    Local,
    /// The fully expanded bound with leading term `n α² / tau`.
    Expanded,
}

fn inv(r: Option<f64>) -> f64 {
    r.map_or(0.0, |r| 1.0 / r)
}

/// Evaluate the selected gradient bound at `tau`.
#[allow(clippy::too_many_arguments)]
pub fn gradient_bound(
    form: GradientBoundForm,
    bounds: &CurvatureBounds,
    alpha: f64,
    eps: f64,
    tau: f64,
    r: Option<f64>,
    n: usize,
    c: f64,
) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(invalid(format!("the gradient estimates need alpha > 1, got {alpha}")));
    }
    if !(eps > 0.0) || !(tau > 0.0) {
        return Err(invalid("eps and tau must be positive"));
    }
    if let Some(r) = r {
        if !(r > 0.0) {
            return Err(invalid("cube radius must be positive"));
        }
    }
    let nf = n as f64;
    let a2 = alpha * alpha;
    let ir = inv(r);
    Ok(match form {
        GradientBoundForm::Local => (nf + eps) * a2 / (2.0 * tau) + c * (ir * ir + ir + 1.0),
        GradientBoundForm::Expanded => {
            let (k0, k1) = (bounds.ric_k0, bounds.grad_r_k1);
            // ΔR <= K2 may hold with K2 < 0; the square root only sees the positive part.
            let k2 = bounds.lap_r_k2.max(0.0);
            let locality = match r {
                Some(r) => c * a2 / (r * r) * (r * k0.sqrt() + a2 / (alpha - 1.0)),
                None => 0.0,
            };
            nf * a2 / tau
                + locality
                + c * a2 * k0
                + nf * a2 / (alpha - 1.0) * ((2.0 - alpha).abs() * k0 + 0.5 * (alpha - 1.0) * k1)
                + nf * a2 * k0
                + alpha * (nf * (alpha - 1.0) * k1).sqrt()
                + alpha * (nf * alpha * k2).sqrt()
        }
    })
}

/// Smallest `C >= 0` with `sup(tau) <= bound(tau; C)` for every sample
/// `(tau, sup)`. `None` when `C` has no effect and the bound fails anyway.
#[allow(clippy::too_many_arguments)]
pub fn smallest_gradient_constant(
    form: GradientBoundForm,
    bounds: &CurvatureBounds,
    alpha: f64,
    eps: f64,
    r: Option<f64>,
    n: usize,
    samples: &[(f64, f64)],
) -> Result<Option<f64>> {
    let mut c: f64 = 0.0;
    for &(tau, sup) in samples {
        let base = gradient_bound(form, bounds, alpha, eps, tau, r, n, 0.0)?;
        let slope = gradient_bound(form, bounds, alpha, eps, tau, r, n, 1.0)? - base;
        if sup > base {
            if slope <= 0.0 {
                return Ok(None);
            }
            c = c.max((sup - base) / slope);
        }
    }
    Ok(Some(c))
}

/// Smallest `C0` in `|∇²u| <= u (C0 / tau) (1 + log(A/u))` given the
/// measured suprema of the norm-form ratio.
pub fn hessian_bound_constant(ratio_sups: &[f64]) -> f64 {
    ratio_sups.iter().copied().fold(0.0, f64::max)
}
