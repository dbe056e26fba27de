use conjheat::analysis::{
    bochner_residual, curvature_evolution_residual, lemma21_deltaf_residual, lemma31_component_residuals,
    lemma33_residual, lemma34_residual, HessianSign,
};
use conjheat::geometry::{snapshot_at, Backend};
use conjheat::{Error, MaskedField, Result};

use super::{any, Check, CheckOutcome, Context, Row};
use crate::config::CheckSpec;

pub(super) fn register(v: &mut Vec<Box<dyn Check>>) {
    v.push(Box::new(Lemma21));
    v.push(Box::new(Lemma31));
    v.push(Box::new(Lemma33));
    v.push(Box::new(Lemma34));
    v.push(Box::new(Bochner));
    v.push(Box::new(CurvatureEvolution));
    v.push(Box::new(RoundReference));
}

/// Push the windowed sup of `m` and return it.
fn record(out: &mut CheckOutcome, spec: &CheckSpec, ctx: &Context, t: f64, quantity: &str, m: MaskedField) -> Result<f64> {
    let keep = spec.window.mask(&ctx.traj.grid);
    let (sup, node) = m.restrict(&keep).max_abs().ok_or(Error::EmptyRegion)?;
    out.rows.push(Row::new(t, ctx.tau(t), quantity, sup, Some(node)));
    Ok(sup)
}

fn residual_check(
    name: &str,
    ctx: &Context,
    spec: &CheckSpec,
    times: Vec<f64>,
    mut eval: impl FnMut(f64) -> Result<Vec<(&'static str, MaskedField)>>,
) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new(name);
    let mut worst: f64 = 0.0;
    for t in times {
        for (q, m) in eval(t)? {
            worst = worst.max(record(&mut out, spec, ctx, t, q, m)?);
        }
    }
    out.metric("max_residual", worst);
    Ok(out.with_error(spec, worst))
}

struct Lemma21;

impl Check for Lemma21 {
    fn name(&self) -> &'static str {
        "lemma21"
    }
    fn description(&self) -> &'static str {
        "residual of the ΔF expansion for F = tau (|∇f|² + α f_t - α R)"
    }
    fn supports(&self, b: Backend) -> bool {
        any(b)
    }
    fn run(&self, ctx: &Context, spec: &CheckSpec) -> Result<CheckOutcome> {
        let alpha = ctx.config.estimate.alpha;
        residual_check(self.name(), ctx, spec, ctx.interior(spec)?, |t| {
            Ok(vec![("lemma21", lemma21_deltaf_residual(ctx.traj, ctx.hist, t, alpha)?)])
        })
    }
}

struct Lemma31;

impl Check for Lemma31 {
    fn name(&self) -> &'static str {
        "lemma31"
    }
    fn description(&self) -> &'static str {
        "residuals of the (∂_t + Δ) evolutions of |∇u|² and u_t/u"
    }
    fn supports(&self, b: Backend) -> bool {
        any(b)
    }
    fn run(&self, ctx: &Context, spec: &CheckSpec) -> Result<CheckOutcome> {
        let alpha = ctx.config.estimate.alpha;
        residual_check(self.name(), ctx, spec, ctx.interior(spec)?, |t| {
            let (a, b) = lemma31_component_residuals(ctx.traj, ctx.hist, t, alpha)?;
            Ok(vec![("lemma31-gradient", a), ("lemma31-log-derivative", b)])
        })
    }
}

struct Lemma33;

impl Check for Lemma33 {
    fn name(&self) -> &'static str {
        "lemma33"
    }
    fn description(&self) -> &'static str {
        "componentwise residual of the evolution of v = ∇²u / (u (1 - f))"
    }
    fn supports(&self, b: Backend) -> bool {
        any(b)
    }
    fn params(&self) -> &'static [&'static str] {
        &["sign"]
    }
    fn run(&self, ctx: &Context, spec: &CheckSpec) -> Result<CheckOutcome> {
        let sign = match spec.text("sign").unwrap_or("derived") {
            "derived" => HessianSign::Derived,
            "as-printed" => HessianSign::AsPrinted,
            other => return Err(Error::InvalidInput(format!("lemma33.sign: unknown sign '{other}'"))),
        };
        let a = ctx.hist.sup_bound();
        residual_check(self.name(), ctx, spec, ctx.interior(spec)?, |t| {
            Ok(vec![("lemma33", lemma33_residual(ctx.traj, ctx.hist, t, a, sign)?.component_max())])
        })
    }
}

struct Lemma34;

impl Check for Lemma34 {
    fn name(&self) -> &'static str {
        "lemma34"
    }
    fn description(&self) -> &'static str {
        "componentwise residual of the evolution of w = du⊗du / (u² (1 - f)²)"
    }
    fn supports(&self, b: Backend) -> bool {
        any(b)
    }
    fn run(&self, ctx: &Context, spec: &CheckSpec) -> Result<CheckOutcome> {
        let a = ctx.hist.sup_bound();
        residual_check(self.name(), ctx, spec, ctx.interior(spec)?, |t| {
            Ok(vec![("lemma34", lemma34_residual(ctx.traj, ctx.hist, t, a)?.component_max())])
        })
    }
}

struct Bochner;

impl Check for Bochner {
    fn name(&self) -> &'static str {
        "bochner"
    }
    fn description(&self) -> &'static str {
        "Bochner formula residual for the stored solution"
    }
    fn supports(&self, b: Backend) -> bool {
        any(b)
    }
    fn run(&self, ctx: &Context, spec: &CheckSpec) -> Result<CheckOutcome> {
        residual_check(self.name(), ctx, spec, ctx.times(spec, |_| true)?, |t| {
            let s = snapshot_at(ctx.traj, t)?;
            let k = ctx.hist.sample_index(t)?;
            Ok(vec![("bochner", MaskedField::all_trusted(bochner_residual(&s, &ctx.hist.field(k))?))])
        })
    }
}

fn flow_dt(ctx: &Context, spec: &CheckSpec) -> f64 {
    spec.number("dt").unwrap_or_else(|| match &ctx.config.backend {
        crate::config::BackendSpec::RotsymSurface { flow_steps, .. } => ctx.traj.final_time / *flow_steps as f64,
        _ => ctx.hist.saved_dt(),
    })
}

struct CurvatureEvolution;

impl Check for CurvatureEvolution {
    fn name(&self) -> &'static str {
        "curvature-evolution"
    }
    fn description(&self) -> &'static str {
        "residual of ∂_t R = ΔR + 2|Ric|² along the flow"
    }
    fn supports(&self, b: Backend) -> bool {
        any(b)
    }
    fn params(&self) -> &'static [&'static str] {
        &["dt"]
    }
    fn run(&self, ctx: &Context, spec: &CheckSpec) -> Result<CheckOutcome> {
        let dt = flow_dt(ctx, spec);
        let big_t = ctx.traj.final_time;
        let times = ctx.times(spec, |k| {
            let t = ctx.hist.times[k];
            t - dt >= -1e-12 && t + dt <= big_t + 1e-12
        })?;
        let mut out = residual_check(self.name(), ctx, spec, times, |t| {
            Ok(vec![("curvature-evolution", MaskedField::all_trusted(curvature_evolution_residual(ctx.traj, t, dt)?))])
        })?;
        out.metric("dt", dt);
        Ok(out)
    }
}

struct RoundReference;

impl Check for RoundReference {
    fn name(&self) -> &'static str {
        "round-reference"
    }
    fn description(&self) -> &'static str {
        "relative metric error of round conformal data against the shrinking sphere"
    }
    fn supports(&self, b: Backend) -> bool {
        b == Backend::RotsymSurface
    }
    fn run(&self, ctx: &Context, spec: &CheckSpec) -> Result<CheckOutcome> {
        let phi0 = snapshot_at(ctx.traj, 0.0)?.phi().ok_or(Error::EmptyRegion)?.to_vec();
        let c = phi0[0];
        if phi0.iter().any(|p| (p - c).abs() > 1e-14) {
            return Err(Error::Unsupported("round-reference needs constant initial phi".into()));
        }
        let mut out = CheckOutcome::new(self.name());
        let mut worst: f64 = 0.0;
        for t in ctx.times(spec, |_| true)? {
            let s = snapshot_at(ctx.traj, t)?;
            // e^{2 phi} = e^{2 c} - 2t for the round sphere.
            let exact = (2.0 * c).exp() - 2.0 * t;
            let (mut err, mut node) = (0.0f64, 0);
            for (i, p) in s.phi().ok_or(Error::EmptyRegion)?.iter().enumerate() {
                let e = ((2.0 * p).exp() / exact - 1.0).abs();
                if e > err {
                    err = e;
                    node = i;
                }
            }
            worst = worst.max(err);
            out.rows.push(Row::new(t, ctx.tau(t), "metric-relative-error", err, Some(node)));
        }
        Ok(out.with_error(spec, worst))
    }
}
