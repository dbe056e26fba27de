//! Pointwise estimate quantities.

use serde::Serialize;

use super::{strict_future, BoundReport, Level};
use crate::error::{invalid, Result};
use crate::field::{FrameTensorField, MaskedField, MaskedTensor};
use crate::geometry::FlowTrajectory;
use crate::solver::SolutionHistory;

/// A quantity `Q` together with its `tau`-scaled form `tau Q`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantityField {
    pub tau: f64,
    pub value: MaskedField,
    pub scaled: MaskedField,
}

fn masked(level: &Level, values: Vec<f64>, trusted: Vec<bool>) -> MaskedField {
    MaskedField { field: level.scalar(values), trusted }
}

fn quantity(level: &Level, values: Vec<f64>, trusted: Vec<bool>) -> QuantityField {
    let scaled = values.iter().map(|v| level.tau * v).collect();
    QuantityField { tau: level.tau, value: masked(level, values, trusted.clone()), scaled: masked(level, scaled, trusted) }
}

/// `|∇u|²/u² + α u_t/u - α R`, i.e. `F / tau`.
pub fn gradient_quantity(traj: &FlowTrajectory, hist: &SolutionHistory, t: f64, alpha: f64) -> Result<QuantityField> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(invalid("alpha must be positive"));
    }
    let k = strict_future(hist, t)?;
    let lv = Level::new(traj, hist, k)?;
    let r = &lv.snap.curvature().scalar.values;
    let values = (0..lv.n())
        .map(|i| {
            let u = lv.u.values[i];
            lv.grad.norm_sq_at(i) / (u * u) + alpha * lv.ut.values[i] / u - alpha * r[i]
        })
        .collect();
    Ok(quantity(&lv, values, hist.trust_mask(k, hist.sup_bound())))
}

/// `F1 = |∇²u|/u + α |∇u|²/u² + 5 α u_t/u` and `F2 = tau F1`.
pub fn hessian_quantity_f1(traj: &FlowTrajectory, hist: &SolutionHistory, t: f64, alpha: f64) -> Result<QuantityField> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(invalid("alpha must be positive"));
    }
    let k = strict_future(hist, t)?;
    let lv = Level::new(traj, hist, k)?;
    let values = (0..lv.n())
        .map(|i| {
            let u = lv.u.values[i];
            lv.hess.norm_sq_at(i).sqrt() / u + alpha * lv.grad.norm_sq_at(i) / (u * u) + 5.0 * alpha * lv.ut.values[i] / u
        })
        .collect();
    Ok(quantity(&lv, values, hist.trust_mask(k, hist.sup_bound())))
}

/// The three Hessian ratios whose boundedness the theorems assert.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HessianRatios {
    /// `tau |∇²u| / (u (1 + log(A/u)))`.
    pub norm_form: MaskedField,
    /// `tau λ_max(∇²u) / (u (1 + log(A/u)))`, to compare with 18.
    pub eigen_form: MaskedField,
    /// `|∇²u| / (u (1 + log(A/u))² (C0/tau + C0/r²))`.
    pub local_form: MaskedField,
    pub reports: Vec<BoundReport>,
}

/// Leading coefficient of the global upper Hessian bound.
pub const HESSIAN_FORM_COEFFICIENT: f64 = 18.0;

fn check_sup_bound(hist: &SolutionHistory, a: f64) -> Result<()> {
    let m = hist.max_value();
    if !(a >= m) {
        return Err(invalid(format!("A = {a} is below sup u = {m}")));
    }
    Ok(())
}

pub fn theorem_hessian_ratio(
    traj: &FlowTrajectory,
    hist: &SolutionHistory,
    t: f64,
    a: f64,
    c0: f64,
    r: Option<f64>,
) -> Result<HessianRatios> {
    check_sup_bound(hist, a)?;
    let k = strict_future(hist, t)?;
    let lv = Level::new(traj, hist, k)?;
    let trusted = hist.trust_mask(k, a);
    let tau = lv.tau;
    let local_scale = c0 / tau + r.map_or(0.0, |r| c0 / (r * r));
    let (mut na, mut nb, mut nc) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..lv.n() {
        let u = lv.u.values[i];
        let l = 1.0 + (a / u).ln();
        let norm = lv.hess.norm_sq_at(i).sqrt();
        let lmax = lv.hess.eigen_range_at(i).1;
        na.push(tau * norm / (u * l));
        nb.push(tau * lmax / (u * l));
        nc.push(norm / (u * l * l * local_scale));
    }
    let norm_form = masked(&lv, na, trusted.clone());
    let eigen_form = masked(&lv, nb, trusted.clone());
    let local_form = masked(&lv, nc, trusted);
    let big_t = hist.final_time;
    let mut reports = vec![
        BoundReport::from_masked("hessian-ratio-norm", &norm_form, big_t)?,
        BoundReport::from_masked("hessian-ratio-eigen", &eigen_form, big_t)?
            .with_bound(HESSIAN_FORM_COEFFICIENT, &[("A", a)]),
        BoundReport::from_masked("hessian-ratio-local", &local_form, big_t)?,
    ];
    reports[0].constants.insert("A".into(), a);
    reports[2].constants.insert("A".into(), a);
    reports[2].constants.insert("C0".into(), c0);
    if let Some(r) = r {
        reports[2].constants.insert("r".into(), r);
    }
    Ok(HessianRatios { norm_form, eigen_form, local_form, reports })
}

pub(crate) fn v_of(lv: &Level, a: f64) -> FrameTensorField {
    let s: Vec<f64> = lv.u.values.iter().map(|&u| 1.0 / (u * (1.0 - (u / a).ln()))).collect();
    lv.hess.scale_by(&s)
}

pub(crate) fn w_of(lv: &Level, a: f64) -> FrameTensorField {
    let s: Vec<f64> = lv
        .u
        .values
        .iter()
        .map(|&u| 1.0 / (u * (1.0 - (u / a).ln())).powi(2))
        .collect();
    FrameTensorField::outer(&lv.grad, lv.hess.shape).scale_by(&s)
}

/// `v = ∇²u / (u (1 - f))` with `f = log(u/A)`.
pub fn v_tensor(traj: &FlowTrajectory, hist: &SolutionHistory, t: f64, a: f64) -> Result<MaskedTensor> {
    check_sup_bound(hist, a)?;
    let k = hist.sample_index(t)?;
    let lv = Level::new(traj, hist, k)?;
    Ok(MaskedTensor { tensor: v_of(&lv, a), trusted: hist.trust_mask(k, a) })
}

/// `w = du ⊗ du / (u² (1 - f)²)`.
pub fn w_tensor(traj: &FlowTrajectory, hist: &SolutionHistory, t: f64, a: f64) -> Result<MaskedTensor> {
    check_sup_bound(hist, a)?;
    let k = hist.sample_index(t)?;
    let lv = Level::new(traj, hist, k)?;
    Ok(MaskedTensor { tensor: w_of(&lv, a), trusted: hist.trust_mask(k, a) })
}
