use conjheat::geometry::Backend;
use conjheat::{Error, Result};

use super::{any, Check, CheckOutcome, Context, Row};
use crate::config::CheckSpec;

pub(super) fn register(v: &mut Vec<Box<dyn Check>>) {
    v.push(Box::new(Oracle));
    v.push(Box::new(Conservation));
}

struct Oracle;

impl Check for Oracle {
    fn name(&self) -> &'static str {
        "oracle"
    }
    fn description(&self) -> &'static str {
        "max-norm error against the theta-series heat kernel (Gaussian data on the circle)"
    }
    fn supports(&self, b: Backend) -> bool {
        b == Backend::Torus1d
    }
    fn run(&self, ctx: &Context, spec: &CheckSpec) -> Result<CheckOutcome> {
        let oracle = ctx
            .config
            .terminal
            .circle_oracle(ctx.traj)
            .ok_or_else(|| Error::Unsupported("the oracle needs Gaussian terminal data".into()))?;
        let times = ctx.times(spec, |_| true)?;
        let grid = &ctx.traj.grid;
        let mut out = CheckOutcome::new(self.name());
        let mut worst: f64 = 0.0;
        for t in times {
            let k = ctx.hist.sample_index(t)?;
            let exact = oracle.evolved(ctx.tau(t));
            let (mut err, mut node) = (0.0f64, 0);
            for (i, v) in ctx.hist.values[k].iter().enumerate() {
                let e = (v - exact.value(grid.coords(i)[0])).abs();
                if e > err {
                    err = e;
                    node = i;
                }
            }
            worst = worst.max(err);
            out.rows.push(Row::new(t, ctx.tau(t), "oracle-error", err, Some(node)));
        }
        Ok(out.with_error(spec, worst))
    }
}

struct Conservation;

impl Check for Conservation {
    fn name(&self) -> &'static str {
        "conservation"
    }
    fn description(&self) -> &'static str {
        "relative mass drift and positivity of the stored solution"
    }
    fn supports(&self, b: Backend) -> bool {
        any(b)
    }
    fn run(&self, ctx: &Context, spec: &CheckSpec) -> Result<CheckOutcome> {
        let mut out = CheckOutcome::new(self.name());
        let meta = &ctx.hist.meta;
        out.metric("mass_drift", meta.mass_drift);
        out.metric("min_value", meta.min_value);
        let m_end = *ctx.hist.masses.last().unwrap_or(&1.0);
        for (k, &t) in ctx.hist.times.iter().enumerate() {
            let drift = ((ctx.hist.masses[k] - m_end) / m_end).abs();
            out.rows.push(Row::new(t, ctx.tau(t), "mass-drift", drift, None));
        }
        if !(meta.min_value > 0.0) {
            out.fail(format!("minimum value {} is not positive", meta.min_value));
        }
        let tol = spec.tolerance.unwrap_or(1e-8);
        if !(meta.mass_drift <= tol) {
            out.fail(format!("mass drift {:.3e} exceeds {tol:.3e}", meta.mass_drift));
        }
        out.error = Some(meta.mass_drift);
        Ok(out)
    }
}
