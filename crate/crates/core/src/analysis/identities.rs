//! Residuals of exact evolution identities.
//!
//! Every term is assembled from the tested stencils and the time
//! derivatives come from centered differences of the stored history, so the
//! residuals measure discretization error only and vanish under refinement.
//!
//! Tensor time derivatives are of coordinate components. In the moving
//! orthonormal frame `∂_t e_a = Ric(e_a)`, so the frame components of
//! `∂_t T` are `∂_t (T_ab) - (Ric T + T Ric)_ab`.

use serde::{Deserialize, Serialize};

use super::quantities::{v_of, w_of};
use super::{interior_index, Level};
use crate::error::{invalid, Result};
use crate::field::{FrameTensorField, FrameVectorField, MaskedField, MaskedTensor, ScalarField};
use crate::geometry::{
    directional_derivative, gradient, hessian_frame, laplace_beltrami, rough_laplacian, snapshot_at, FlowTrajectory,
    GeometrySnapshot,
};
use crate::solver::SolutionHistory;
use crate::stencil::centered_time;

struct Stencil3 {
    prev: Level,
    cur: Level,
    next: Level,
    dt: f64,
    trusted: Vec<bool>,
}

impl Stencil3 {
    fn new(traj: &FlowTrajectory, hist: &SolutionHistory, t: f64, a: f64) -> Result<Self> {
        let k = interior_index(hist, t)?;
        let prev = Level::new(traj, hist, k - 1)?;
        let cur = Level::new(traj, hist, k)?;
        let next = Level::new(traj, hist, k + 1)?;
        let masks = [hist.trust_mask(k - 1, a), hist.trust_mask(k, a), hist.trust_mask(k + 1, a)];
        let trusted = (0..cur.n()).map(|i| masks.iter().all(|m| m[i])).collect();
        Ok(Self { prev, cur, next, dt: hist.saved_dt(), trusted })
    }

    fn dt_scalar(&self, f: impl Fn(&Level) -> Vec<f64>) -> Vec<f64> {
        centered_time(&f(&self.prev), &f(&self.next), self.dt)
    }

    /// Frame components of the coordinate time derivative of a tensor.
    fn dt_tensor(&self, f: impl Fn(&Level) -> FrameTensorField) -> Result<FrameTensorField> {
        let raw = f(&self.next).combine(0.5 / self.dt, &f(&self.prev), -0.5 / self.dt)?;
        let ric = &self.cur.snap.curvature().ricci;
        raw.combine(1.0, &ric.sym_product(&f(&self.cur))?, -1.0)
    }

    fn masked(&self, values: Vec<f64>) -> MaskedField {
        MaskedField { field: self.cur.scalar(values), trusted: self.trusted.clone() }
    }
}

fn abs_diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect()
}

fn grad_of(s: &GeometrySnapshot, grid_field: &ScalarField) -> Result<FrameVectorField> {
    gradient(s, grid_field)
}

/// Hessian of `log u` as `∇²u/u - du⊗du/u²`.
fn hess_log(lv: &Level) -> FrameTensorField {
    let inv: Vec<f64> = lv.u.values.iter().map(|u| 1.0 / u).collect();
    let inv2: Vec<f64> = inv.iter().map(|x| x * x).collect();
    lv.hess
        .scale_by(&inv)
        .combine(1.0, &FrameTensorField::outer(&lv.grad, lv.hess.shape).scale_by(&inv2), -1.0)
        .expect("same shape")
}

fn grad_log(lv: &Level) -> FrameVectorField {
    let mut g = lv.grad.clone();
    for i in 0..g.len() {
        g.c1[i] /= lv.u.values[i];
        g.c2[i] /= lv.u.values[i];
    }
    g
}

fn f_quantity(lv: &Level, alpha: f64) -> Vec<f64> {
    let r = &lv.snap.curvature().scalar.values;
    (0..lv.n())
        .map(|i| {
            let u = lv.u.values[i];
            lv.tau * (lv.grad.norm_sq_at(i) / (u * u) + alpha * lv.ut.values[i] / u - alpha * r[i])
        })
        .collect()
}

/// `|ΔF - RHS|` for the exact expansion of `ΔF`, `F = tau (|∇f|² + α f_t - α R)`,
/// `f = log u`:
///
/// `ΔF = 2τ|∇²f|² - 2⟨∇f,∇F⟩ - F_t - F/τ - 2ατ⟨Ric,∇²f⟩ + 2τ(2-α)Ric(∇f,∇f)
///       - 2τ(α-1)⟨∇R,∇f⟩ - ατΔR`.
pub fn lemma21_deltaf_residual(traj: &FlowTrajectory, hist: &SolutionHistory, t: f64, alpha: f64) -> Result<MaskedField> {
    let st = Stencil3::new(traj, hist, t, hist.sup_bound())?;
    let lv = &st.cur;
    let tau = lv.tau;
    let curv = lv.snap.curvature();
    let f_field = lv.scalar(f_quantity(lv, alpha));
    let lap_f = lv.lap(&f_field)?;
    let grad_f_big = grad_of(&lv.snap, &f_field)?;
    let f_t = st.dt_scalar(|l| f_quantity(l, alpha));
    let gf = grad_log(lv);
    let hf = hess_log(lv);
    let grad_r = grad_of(&lv.snap, &curv.scalar)?;
    let rhs: Vec<f64> = (0..lv.n())
        .map(|i| {
            2.0 * tau * hf.norm_sq_at(i) - 2.0 * gf.dot_at(&grad_f_big, i) - f_t[i] - f_field.values[i] / tau
                - 2.0 * alpha * tau * curv.ricci.dot_at(&hf, i)
                + 2.0 * tau * (2.0 - alpha) * curv.ricci.quadratic_at(&gf, i)
                - 2.0 * tau * (alpha - 1.0) * grad_r.dot_at(&gf, i)
                - alpha * tau * curv.lap_r.values[i]
        })
        .collect();
    Ok(st.masked(abs_diff(&lap_f.values, &rhs)))
}

/// Residuals of
/// `(∂_t + Δ)|∇u|² = 2|∇²u|² + 2⟨∇u,∇(Ru)⟩ + 4 Ric(∇u,∇u)` and
/// `(∂_t + Δ)(u_t/u) = R_t - (2/u)⟨Ric,∇²u⟩ - 2⟨∇(u_t/u),∇log u⟩`.
pub fn lemma31_component_residuals(
    traj: &FlowTrajectory,
    hist: &SolutionHistory,
    t: f64,
    _alpha: f64,
) -> Result<(MaskedField, MaskedField)> {
    let st = Stencil3::new(traj, hist, t, hist.sup_bound())?;
    let lv = &st.cur;
    let curv = lv.snap.curvature();
    let n = lv.n();

    let g2 = |l: &Level| (0..l.n()).map(|i| l.grad.norm_sq_at(i)).collect::<Vec<f64>>();
    let g2_t = st.dt_scalar(g2);
    let lap_g2 = lv.lap(&lv.scalar(g2(lv)))?;
    let ru = lv.u.zip(&curv.scalar, |u, r| u * r)?;
    let grad_ru = grad_of(&lv.snap, &ru)?;
    let first: Vec<f64> = (0..n)
        .map(|i| {
            let lhs = g2_t[i] + lap_g2.values[i];
            let rhs = 2.0 * lv.hess.norm_sq_at(i) + 2.0 * lv.grad.dot_at(&grad_ru, i)
                + 4.0 * curv.ricci.quadratic_at(&lv.grad, i);
            (lhs - rhs).abs()
        })
        .collect();

    let q = |l: &Level| l.ut.values.iter().zip(&l.u.values).map(|(a, b)| a / b).collect::<Vec<f64>>();
    let q_t = st.dt_scalar(q);
    let qf = lv.scalar(q(lv));
    let lap_q = lv.lap(&qf)?;
    let grad_q = grad_of(&lv.snap, &qf)?;
    let r_t = st.dt_scalar(|l| l.snap.curvature().scalar.values.clone());
    let gl = grad_log(lv);
    let second: Vec<f64> = (0..n)
        .map(|i| {
            let lhs = q_t[i] + lap_q.values[i];
            let rhs = r_t[i] - 2.0 / lv.u.values[i] * curv.ricci.dot_at(&lv.hess, i) - 2.0 * grad_q.dot_at(&gl, i);
            (lhs - rhs).abs()
        })
        .collect();
    Ok((st.masked(first), st.masked(second)))
}

/// `|Δ|∇u|² - (2|∇²u|² + 2⟨∇u,∇Δu⟩ + 2 Ric(∇u,∇u))|`.
pub fn bochner_residual(s: &GeometrySnapshot, u: &ScalarField) -> Result<ScalarField> {
    let grad = gradient(s, u)?;
    let hess = hessian_frame(s, u)?;
    let g2 = grad.norm_sq();
    let lap_g2 = laplace_beltrami(s, &g2)?;
    let grad_lap = gradient(s, &laplace_beltrami(s, u)?)?;
    let ric = &s.curvature().ricci;
    let values = (0..u.values.len())
        .map(|i| {
            let rhs = 2.0 * hess.norm_sq_at(i) + 2.0 * grad.dot_at(&grad_lap, i) + 2.0 * ric.quadratic_at(&grad, i);
            (lap_g2.values[i] - rhs).abs()
        })
        .collect();
    Ok(ScalarField { grid: u.grid.clone(), time: u.time, values })
}

/// Sign of the `∇_i∇_j(Ru)` group in the Hessian evolution.
///
/// Differentiating `u_t = -Δu + Ru` twice puts `+∇_i∇_j(Ru)` into
/// `(∂_t + Δ) u_ij`. `AsPrinted` flips that group, which is exact only where
/// `R` vanishes; it is kept so the discrepancy can be measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HessianSign {
    #[default]
    Derived,
    AsPrinted,
}

/// Shared pieces of the `v` and `w` evolutions at the centre level.
struct TensorTerms<'a> {
    st: &'a Stencil3,
    /// `f = log(u/A)`.
    f: Vec<f64>,
    /// `|∇f|²`.
    gf2: Vec<f64>,
    r: Vec<f64>,
}

impl<'a> TensorTerms<'a> {
    fn new(st: &'a Stencil3, a: f64) -> Self {
        let lv = &st.cur;
        let f = lv.u.values.iter().map(|u| (u / a).ln()).collect();
        let gf2 = (0..lv.n()).map(|i| lv.grad.norm_sq_at(i) / lv.u.values[i].powi(2)).collect();
        let r = lv.snap.curvature().scalar.values.clone();
        Self { st, f, gf2, r }
    }

    /// `(∂_t + Δ - (2f/(1-f)) ∇f·∇) T` for `T` built per level by `build`.
    fn operator(&self, build: impl Fn(&Level) -> FrameTensorField) -> Result<FrameTensorField> {
        let lv = &self.st.cur;
        let t_cur = build(lv);
        let dt = self.st.dt_tensor(&build)?;
        let lap = rough_laplacian(&lv.snap, &t_cur)?;
        let adv = directional_derivative(&lv.snap, &grad_log(lv), &t_cur)?;
        let coeff: Vec<f64> = self.f.iter().map(|f| 2.0 * f / (1.0 - f)).collect();
        dt.combine(1.0, &lap, 1.0)?.combine(1.0, &adv.scale_by(&coeff), -1.0)
    }
}

fn masked_tensor(st: &Stencil3, lhs: &FrameTensorField, rhs: &FrameTensorField) -> Result<MaskedTensor> {
    let d = lhs.combine(1.0, rhs, -1.0)?;
    let mut abs = d.clone();
    for i in 0..d.len() {
        abs.c11[i] = d.c11[i].abs();
        abs.c22[i] = d.c22[i].abs();
        abs.c12[i] = d.c12[i].abs();
    }
    Ok(MaskedTensor { tensor: abs, trusted: st.trusted.clone() })
}

/// Componentwise residual of the evolution of `v = ∇²u / (u (1 - f))`:
///
/// `L v = (|∇f|² + Rf)/(1-f) v + [2 R_kijl u_kl + R_il u_jl + R_jl u_il
///        + 2(∇_i R_jl + ∇_j R_il - ∇_l R_ij) u_l + ∇_i∇_j(Ru)] / (u (1-f))`
///
/// with `L = ∂_t + Δ - (2f/(1-f)) ∇f·∇`. Every backend has pointwise
/// isotropic curvature, so `R_kijl u_kl = K (u_ij - tr(u) g_ij)` and
/// `∇Ric = ∇ρ ⊗ g` for `Ric = ρ g`.
pub fn lemma33_residual(
    traj: &FlowTrajectory,
    hist: &SolutionHistory,
    t: f64,
    a: f64,
    sign: HessianSign,
) -> Result<MaskedTensor> {
    if !(a >= hist.max_value()) {
        return Err(invalid("A must dominate sup u"));
    }
    let st = Stencil3::new(traj, hist, t, a)?;
    let terms = TensorTerms::new(&st, a);
    let lv = &st.cur;
    let curv = lv.snap.curvature();
    let n = lv.n();
    let shape = lv.hess.shape;
    let lhs = terms.operator(|l| v_of(l, a))?;

    let u_h = &lv.hess;
    let g = FrameTensorField::identity(&lv.u.grid, lv.t, shape);
    let tr: Vec<f64> = (0..n).map(|i| u_h.trace_at(i)).collect();
    let rm = u_h.combine(1.0, &g.scale_by(&tr), -1.0)?.scale_by(&curv.sectional.values);
    let ric_u = curv.ricci.sym_product(u_h)?;
    let rho = ScalarField { grid: lv.u.grid.clone(), time: lv.t, values: curv.ricci.c11.clone() };
    let grad_rho = grad_of(&lv.snap, &rho)?;
    let dot: Vec<f64> = (0..n).map(|i| grad_rho.dot_at(&lv.grad, i)).collect();
    let d_ric = FrameTensorField::sym_outer(&grad_rho, &lv.grad, shape).combine(2.0, &g.scale_by(&dot), -2.0)?;
    let ru = lv.u.zip(&curv.scalar, |u, r| u * r)?;
    let hess_ru = hessian_frame(&lv.snap, &ru)?;
    let s = match sign {
        HessianSign::Derived => 1.0,
        HessianSign::AsPrinted => -1.0,
    };
    let bracket = rm.combine(2.0, &ric_u, 1.0)?.combine(1.0, &d_ric, 1.0)?.combine(1.0, &hess_ru, s)?;
    let v = v_of(lv, a);
    let c_v: Vec<f64> = (0..n).map(|i| (terms.gf2[i] + terms.r[i] * terms.f[i]) / (1.0 - terms.f[i])).collect();
    let c_b: Vec<f64> = (0..n).map(|i| 1.0 / (lv.u.values[i] * (1.0 - terms.f[i]))).collect();
    let rhs = v.scale_by(&c_v).combine(1.0, &bracket.scale_by(&c_b), 1.0)?;
    masked_tensor(&st, &lhs, &rhs)
}

/// Componentwise residual of the evolution of `w = du⊗du / (u² (1 - f)²)`:
///
/// `L w = 2(|∇f|² + Rf)/(1-f) w + ((Ru)_i u_j + u_i (Ru)_j) / (u² (1-f)²)
///        + 2 (v + f w)² + R_ik w_kj + R_jk w_ki`.
pub fn lemma34_residual(traj: &FlowTrajectory, hist: &SolutionHistory, t: f64, a: f64) -> Result<MaskedTensor> {
    if !(a >= hist.max_value()) {
        return Err(invalid("A must dominate sup u"));
    }
    let st = Stencil3::new(traj, hist, t, a)?;
    let terms = TensorTerms::new(&st, a);
    let lv = &st.cur;
    let curv = lv.snap.curvature();
    let n = lv.n();
    let shape = lv.hess.shape;
    let lhs = terms.operator(|l| w_of(l, a))?;

    let w = w_of(lv, a);
    let v = v_of(lv, a);
    let ru = lv.u.zip(&curv.scalar, |u, r| u * r)?;
    let grad_ru = grad_of(&lv.snap, &ru)?;
    let c_w: Vec<f64> = (0..n).map(|i| 2.0 * (terms.gf2[i] + terms.r[i] * terms.f[i]) / (1.0 - terms.f[i])).collect();
    let c_o: Vec<f64> = (0..n).map(|i| 1.0 / (lv.u.values[i] * (1.0 - terms.f[i])).powi(2)).collect();
    let mix = v.combine(1.0, &w.scale_by(&terms.f), 1.0)?.square();
    let rhs = w
        .scale_by(&c_w)
        .combine(1.0, &FrameTensorField::sym_outer(&grad_ru, &lv.grad, shape).scale_by(&c_o), 1.0)?
        .combine(1.0, &mix, 2.0)?
        .combine(1.0, &curv.ricci.sym_product(&w)?, 1.0)?;
    masked_tensor(&st, &lhs, &rhs)
}

/// `|∂_t R - (ΔR + 2|Ric|²)|` at `t`, with `∂_t R` from snapshots at `t ± dt`.
pub fn curvature_evolution_residual(traj: &FlowTrajectory, t: f64, dt: f64) -> Result<ScalarField> {
    if !(dt > 0.0) || t - dt < -1e-12 || t + dt > traj.final_time + 1e-12 {
        return Err(invalid("t ± dt must stay inside [0, T]"));
    }
    let s = snapshot_at(traj, t)?;
    let before = snapshot_at(traj, t - dt)?;
    let after = snapshot_at(traj, t + dt)?;
    let c = s.curvature();
    let r_t = centered_time(&before.curvature().scalar.values, &after.curvature().scalar.values, dt);
    let values = (0..r_t.len())
        .map(|i| (r_t[i] - c.lap_r.values[i] - 2.0 * c.ricci.norm_sq_at(i)).abs())
        .collect();
    Ok(ScalarField { grid: s.grid.clone(), time: t, values })
}
