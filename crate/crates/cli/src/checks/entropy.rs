use conjheat::entropy::{monotonicity_check, EntropyOptions, Normalization};
use conjheat::geometry::{snapshot_at, Backend};
use conjheat::Result;

use super::{any, Check, CheckOutcome, Context, Row};
use crate::config::CheckSpec;

pub(super) fn register(v: &mut Vec<Box<dyn Check>>) {
    v.push(Box::new(Entropy));
}

struct Entropy;

impl Check for Entropy {
    fn name(&self) -> &'static str {
        "entropy"
    }
    fn description(&self) -> &'static str {
        "W-entropy trace, dW/dt against the production integral"
    }
    fn supports(&self, b: Backend) -> bool {
        any(b)
    }
    fn params(&self) -> &'static [&'static str] {
        &["integrand_tolerance", "w_spread_tolerance", "constant_density_tolerance", "monotonicity_tolerance"]
    }
    fn run(&self, ctx: &Context, spec: &CheckSpec) -> Result<CheckOutcome> {
        let est = &ctx.config.estimate;
        let opts = EntropyOptions {
            tau_origin: est.tau_origin,
            tau_floor: est.tau_floor,
            tolerance: spec.number("monotonicity_tolerance").unwrap_or(1e-6),
            normalization: if ctx.strict_normalization { Normalization::Strict } else { est.normalization },
        };
        let trace = monotonicity_check(ctx.traj, ctx.hist, &opts)?;
        let mut out = CheckOutcome::new(self.name());
        out.metric("max_residual", trace.max_residual());
        out.metric("w_spread", trace.w_spread());
        out.metric("max_integrand", trace.max_integrand());
        out.metric("normalization_drift", trace.normalization_drift);
        out.metric("rescale_factor", trace.rescale_factor);
        if let Some(d) = trace.min_dw_dt() {
            out.metric("min_dw_dt", d);
        }
        if trace.rescale_factor != 1.0 {
            out.notes.push(format!(
                "terminal data divided by its mass {}; W is shifted by a constant accordingly",
                trace.rescale_factor
            ));
        }
        for t in &trace.violations {
            out.fail(format!("dW/dt below -{} at t = {t}", opts.tolerance));
        }
        if !(trace.normalization_drift <= 1e-8) {
            out.fail(format!("normalization drifted by {:.3e}", trace.normalization_drift));
        }
        if let Some(tol) = spec.number("integrand_tolerance") {
            if !(trace.max_integrand() <= tol) {
                out.fail(format!("production integrand {:.3e} exceeds {tol:.3e}", trace.max_integrand()));
            }
        }
        if let Some(tol) = spec.number("w_spread_tolerance") {
            if !(trace.w_spread() <= tol) {
                out.fail(format!("W varies by {:.3e}, more than {tol:.3e}", trace.w_spread()));
            }
        }
        if let Some(tol) = spec.number("constant_density_tolerance") {
            // Flat torus with constant density: dW/dt = production = n/(2 tau).
            let n = snapshot_at(ctx.traj, 0.0)?.dim() as f64;
            let mut worst: f64 = 0.0;
            for s in &trace.samples {
                let exact = 0.5 * n / s.tau;
                worst = worst.max(((s.production - exact) / exact).abs());
                if let Some(d) = s.dw_dt {
                    worst = worst.max(((d - exact) / exact).abs());
                }
            }
            out.metric("constant_density_error", worst);
            if !(worst <= tol) {
                out.fail(format!("constant-density closed form off by {worst:.3e} (relative)"));
            }
        }
        for s in &trace.samples {
            out.rows.push(Row::new(s.t, s.tau, "production", s.production, None));
            if let Some(r) = s.residual {
                out.rows.push(Row::new(s.t, s.tau, "entropy-residual", r, None));
            }
        }
        let err = trace.max_residual();
        out.entropy = Some(trace);
        Ok(out.with_error(spec, err))
    }
}
