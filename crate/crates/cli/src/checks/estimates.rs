use std::f64::consts::PI;

use conjheat::analysis::{
    cube_sup, gradient_bound, gradient_quantity, smallest_gradient_constant, theorem_hessian_ratio, GradientBoundForm,
    HESSIAN_FORM_COEFFICIENT,
};
use conjheat::geometry::{curvature_bounds, snapshot_at, Anchor, Backend, Region};
use conjheat::profiles::TerminalSpec;
use conjheat::{Error, MaskedField, Result, ScalarField};

use super::{any, Check, CheckOutcome, Context, Row};
use crate::config::CheckSpec;

pub(super) fn register(v: &mut Vec<Box<dyn Check>>) {
    v.push(Box::new(Gradient));
    v.push(Box::new(Hessian));
    v.push(Box::new(Cube));
}

fn form(spec: &CheckSpec) -> Result<GradientBoundForm> {
    match spec.text("form").unwrap_or("local") {
        "local" => Ok(GradientBoundForm::Local),
        "expanded" => Ok(GradientBoundForm::Expanded),
        other => Err(Error::InvalidInput(format!("gradient.form: unknown form '{other}'"))),
    }
}

struct Gradient;

impl Check for Gradient {
    fn name(&self) -> &'static str {
        "gradient"
    }
    fn description(&self) -> &'static str {
        "tau sup (|∇u|²/u² + α u_t/u - α R) against the Li–Yau type bound"
    }
    fn supports(&self, b: Backend) -> bool {
        any(b)
    }
    fn params(&self) -> &'static [&'static str] {
        &["form", "r", "expect_limit", "limit_tau", "limit_tolerance"]
    }
    fn run(&self, ctx: &Context, spec: &CheckSpec) -> Result<CheckOutcome> {
        let est = &ctx.config.estimate;
        let form = form(spec)?;
        let r = spec.number("r");
        let n = snapshot_at(ctx.traj, 0.0)?.dim();
        let bounds = curvature_bounds(ctx.traj, Region::Whole, (0.0, ctx.traj.final_time))?;
        let c = ctx.config.policy.constant("C").unwrap_or(0.0);
        let mut out = CheckOutcome::new(self.name());
        let mut samples = Vec::new();
        let mut max_scaled = f64::NEG_INFINITY;
        for t in ctx.before_final(spec)? {
            let q = gradient_quantity(ctx.traj, ctx.hist, t, est.alpha)?;
            let (sup, node) = q.scaled.sup().ok_or(Error::EmptyRegion)?;
            let bound = q.tau * gradient_bound(form, &bounds, est.alpha, est.eps, q.tau, r, n, c)?;
            if ctx.config.policy.asserts() && !(sup <= bound) {
                out.fail(format!("tau sup = {sup:.6} exceeds {bound:.6} at t = {t}"));
            }
            max_scaled = max_scaled.max(sup);
            samples.push((q.tau, sup / q.tau));
            out.rows.push(Row::new(t, q.tau, "tau-gradient", sup, Some(node)).bounded(bound));
        }
        out.metric("max_scaled", max_scaled);
        out.metric("leading_term", (n as f64 + est.eps) * est.alpha * est.alpha / 2.0);
        if let Some(c) = smallest_gradient_constant(form, &bounds, est.alpha, est.eps, r, n, &samples)? {
            out.metric("smallest_constant", c);
        }
        if let Some(expect) = spec.number("expect_limit") {
            let target = spec.number("limit_tau").unwrap_or(0.0);
            let tol = spec.number("limit_tolerance").unwrap_or(0.05);
            let row = out
                .rows
                .iter()
                .min_by(|a, b| (a.tau - target).abs().total_cmp(&(b.tau - target).abs()))
                .ok_or(Error::EmptyRegion)?;
            let (tau, value) = (row.tau, row.sup);
            out.metric("limit_tau", tau);
            out.metric("limit_value", value);
            // Gaussian data of variance s0 is a kernel of age s0/2.
            if let TerminalSpec::PeriodizedGaussian(g) = &ctx.config.terminal {
                let age = g.variance / 2.0;
                out.metric("data_age", age);
                out.metric("age_corrected_limit", value * (tau + age) / tau);
                out.notes.push(format!(
                    "terminal Gaussian has age {age}; at tau = {tau} the kernel limit is reached only for tau >> {age}"
                ));
            }
            if !((value - expect).abs() <= tol * expect.abs()) {
                out.fail(format!("tau sup = {value:.6} at tau = {tau:.3e}; expected {expect} within {tol}"));
            }
        }
        Ok(out)
    }
}

struct Hessian;

impl Check for Hessian {
    fn name(&self) -> &'static str {
        "hessian"
    }
    fn description(&self) -> &'static str {
        "tau λ_max(∇²u) / (u (1 + log(A/u))) against 18, with the norm and local forms"
    }
    fn supports(&self, b: Backend) -> bool {
        any(b)
    }
    fn params(&self) -> &'static [&'static str] {
        &["r", "c0"]
    }
    fn run(&self, ctx: &Context, spec: &CheckSpec) -> Result<CheckOutcome> {
        let a = ctx.hist.sup_bound();
        let c0 = spec.number("c0").unwrap_or(1.0);
        let r = spec.number("r");
        let keep = spec.window.mask(&ctx.traj.grid);
        let mut out = CheckOutcome::new(self.name());
        let (mut worst, mut worst_norm) = (f64::NEG_INFINITY, 0.0f64);
        for t in ctx.before_final(spec)? {
            let h = theorem_hessian_ratio(ctx.traj, ctx.hist, t, a, c0, r)?;
            let tau = ctx.tau(t);
            let (e, ei) = h.eigen_form.restrict(&keep).sup().ok_or(Error::EmptyRegion)?;
            let (nv, ni) = h.norm_form.clone().restrict(&keep).sup().ok_or(Error::EmptyRegion)?;
            let (lv, li) = h.local_form.clone().restrict(&keep).sup().ok_or(Error::EmptyRegion)?;
            if !(e <= HESSIAN_FORM_COEFFICIENT) {
                out.fail(format!("ratio {e:.6} exceeds {HESSIAN_FORM_COEFFICIENT} at t = {t}"));
            }
            worst = worst.max(e);
            worst_norm = worst_norm.max(nv);
            out.rows.push(Row::new(t, tau, "hessian-ratio-eigen", e, Some(ei)).bounded(HESSIAN_FORM_COEFFICIENT));
            out.rows.push(Row::new(t, tau, "hessian-ratio-norm", nv, Some(ni)));
            out.rows.push(Row::new(t, tau, "hessian-ratio-local", lv, Some(li)));
        }
        out.metric("A", a);
        out.metric("max_eigen_ratio", worst);
        out.metric("hessian_constant", worst_norm);
        out.error = Some(worst);
        Ok(out)
    }
}

struct Cube;

impl Check for Cube {
    fn name(&self) -> &'static str {
        "cube"
    }
    fn description(&self) -> &'static str {
        "suprema over parabolic cubes Q_{r,T'}(x0, t0) from [[regions]]"
    }
    fn supports(&self, b: Backend) -> bool {
        any(b)
    }
    fn params(&self) -> &'static [&'static str] {
        &["quantity"]
    }
    fn run(&self, ctx: &Context, spec: &CheckSpec) -> Result<CheckOutcome> {
        let quantity = spec.text("quantity").unwrap_or("u");
        let grid = &ctx.traj.grid;
        let fields: Vec<MaskedField> = match quantity {
            "u" => (0..ctx.hist.len()).map(|k| MaskedField::all_trusted(ctx.hist.field(k))).collect(),
            // θ (1 + t): increasing away from the north pole and in time.
            "colatitude-test" => {
                if ctx.traj.backend != Backend::ShrinkingSphere {
                    return Err(Error::Unsupported("colatitude-test needs the shrinking sphere".into()));
                }
                ctx.hist
                    .times
                    .iter()
                    .map(|&t| MaskedField::all_trusted(ScalarField::from_fn(grid, t, |x| x[0] * (1.0 + t))))
                    .collect()
            }
            other => return Err(Error::InvalidInput(format!("cube.quantity: unknown quantity '{other}'"))),
        };
        let mut out = CheckOutcome::new(self.name());
        let mut worst: f64 = 0.0;
        for (j, region) in ctx.config.regions.iter().enumerate() {
            let rep = cube_sup(ctx.traj, &fields, region.anchor, region.r, region.t0, region.t_prime)?;
            let mut row = Row::new(region.t0, ctx.tau(region.t0), format!("cube-{j}:{quantity}"), rep.sup, Some(rep.argmax_node));
            if quantity == "colatitude-test" {
                let rho = ctx.traj.radius_at(region.t0).ok_or(Error::Unsupported("no closed-form radius".into()))?;
                let cap = (region.r / rho).min(PI);
                let exact = match region.anchor {
                    Anchor::NorthPole => cap,
                    Anchor::SouthPole => PI,
                    Anchor::Node(_) => return Err(Error::Unsupported("cube anchors on the sphere are poles".into())),
                } * (1.0 + region.t0);
                let cell = grid.h() * (1.0 + region.t0);
                let err = (exact - rep.sup).abs();
                worst = worst.max(err);
                out.metric(&format!("cube_{j}_cell"), cell);
                if !(err <= cell) {
                    out.fail(format!("cube {j}: sup {} differs from the cap value {exact} by more than a cell", rep.sup));
                }
                row = row.bounded(exact);
            }
            out.rows.push(row);
        }
        out.error = Some(worst);
        Ok(out)
    }
}
