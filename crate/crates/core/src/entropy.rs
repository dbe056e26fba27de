//! Perelman's W-entropy along the coupled flow and its production integral.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{FrameTensorField, ScalarField};
use crate::geometry::{gradient, hessian_frame, integrate, snapshot_at, FlowTrajectory, GeometrySnapshot};
use crate::solver::SolutionHistory;

/// Allowed deviation of `∫u dg` from 1 before strict mode rejects the data.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;

/// What to do with data whose total mass is not 1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Reject with [`Error::NotNormalized`].
    Strict,
    /// Divide by the mass first. For `u = m·ũ` the entropy shifts by
    /// `-(ln m)` times the mass, so rescaling once at the terminal time only
    /// moves `W` by a constant.
    #[default]
    Rescale,
}

/// `u >= 0` with some positive value. Nodes where `u` underflowed to zero
/// contribute the limit 0 of every integrand.
fn check_density(u: &ScalarField) -> Result<()> {
    if u.values.iter().any(|&x| !(x >= 0.0 && x.is_finite())) || u.max() <= 0.0 {
        return Err(invalid("entropy needs a positive density"));
    }
    Ok(())
}

fn normalized(s: &GeometrySnapshot, u: &ScalarField, policy: Normalization) -> Result<ScalarField> {
    check_density(u)?;
    let mass = integrate(s, u)?;
    if (mass - 1.0).abs() <= NORMALIZATION_TOLERANCE {
        return Ok(u.clone());
    }
    match policy {
        Normalization::Strict => Err(Error::NotNormalized { mass }),
        Normalization::Rescale => Ok(u.map(|x| x / mass)),
    }
}

/// `W = ∫ [τ(|∇u|²/u + R u) - u ln u - (n/2) ln(4πτ) u - n u] dg` with
/// `u = v²`. Strict about normalization.
pub fn w_entropy(s: &GeometrySnapshot, u: &ScalarField, tau: f64) -> Result<f64> {
    w_entropy_with(s, u, tau, Normalization::Strict)
}

pub fn w_entropy_with(s: &GeometrySnapshot, u: &ScalarField, tau: f64, policy: Normalization) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(invalid("entropy needs tau > 0"));
    }
    let u = normalized(s, u, policy)?;
    let n = s.dim() as f64;
    let grad = gradient(s, &u)?;
    let r = &s.curvature().scalar.values;
    let log_term = 0.5 * n * (4.0 * std::f64::consts::PI * tau).ln() + n;
    let values = (0..u.values.len())
        .map(|i| {
            let ui = u.values[i];
            if ui == 0.0 {
                return 0.0;
            }
            tau * (grad.norm_sq_at(i) / ui + r[i] * ui) - ui * ui.ln() - log_term * ui
        })
        .collect();
    integrate(s, &ScalarField { grid: u.grid.clone(), time: u.time, values })
}

/// Pointwise `2τ |Ric - Hess ln u - g/(2τ)|² u`, with
/// `Hess ln u = ∇²u/u - du⊗du/u²`.
pub fn production_integrand(s: &GeometrySnapshot, u: &ScalarField, tau: f64) -> Result<ScalarField> {
    if !(tau > 0.0) {
        return Err(invalid("entropy needs tau > 0"));
    }
    check_density(u)?;
    let grad = gradient(s, u)?;
    let hess = hessian_frame(s, u)?;
    let shape = hess.shape;
    let inv: Vec<f64> = u.values.iter().map(|&x| if x > 0.0 { 1.0 / x } else { 0.0 }).collect();
    let inv2: Vec<f64> = inv.iter().map(|x| x * x).collect();
    let hess_log = hess.scale_by(&inv).combine(1.0, &FrameTensorField::outer(&grad, shape).scale_by(&inv2), -1.0)?;
    let g = FrameTensorField::identity(&u.grid, u.time, shape);
    let t = s.curvature().ricci.combine(1.0, &hess_log, -1.0)?.combine(1.0, &g, -0.5 / tau)?;
    let values = (0..u.values.len()).map(|i| 2.0 * tau * t.norm_sq_at(i) * u.values[i]).collect();
    Ok(ScalarField { grid: u.grid.clone(), time: u.time, values })
}

/// `2τ ∫ |Ric - Hess ln u - g/(2τ)|² u dg`.
pub fn entropy_production(s: &GeometrySnapshot, u: &ScalarField, tau: f64) -> Result<f64> {
    integrate(s, &production_integrand(s, u, tau)?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntropyOptions {
    /// Time at which the entropy scale vanishes, `τ = origin - t`.
    /// Defaults to the final time of the trajectory.
    pub tau_origin: Option<f64>,
    /// Samples with `τ` below this are left out of the trace.
    pub tau_floor: f64,
    /// Slack for the sign of `dW/dt`.
    pub tolerance: f64,
    pub normalization: Normalization,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        Self { tau_origin: None, tau_floor: 0.0, tolerance: 1e-6, normalization: Normalization::Strict }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropySample {
    pub t: f64,
    pub tau: f64,
    pub w: f64,
    /// Centered difference; absent at the first and last retained samples.
    pub dw_dt: Option<f64>,
    pub production: f64,
    /// Largest pointwise production integrand.
    pub max_integrand: f64,
    pub residual: Option<f64>,
    pub normalization: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyTrace {
    pub samples: Vec<EntropySample>,
    /// Times where `dW/dt < -tolerance`.
    pub violations: Vec<f64>,
    /// Largest `|∫u dg - ∫u_T dg|` over the trace.
    pub normalization_drift: f64,
    /// Factor the terminal data was divided by (1 when already normalized).
    pub rescale_factor: f64,
}

impl EntropyTrace {
    pub fn max_residual(&self) -> f64 {
        self.samples.iter().filter_map(|s| s.residual).fold(0.0, f64::max)
    }

    pub fn w_spread(&self) -> f64 {
        let (lo, hi) = self
            .samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.w), hi.max(s.w)));
        hi - lo
    }

    pub fn min_dw_dt(&self) -> Option<f64> {
        self.samples.iter().filter_map(|s| s.dw_dt).reduce(f64::min)
    }

    pub fn max_integrand(&self) -> f64 {
        self.samples.iter().map(|s| s.max_integrand).fold(0.0, f64::max)
    }
}

/// W, its centered time derivative and the production integral at every
/// stored time with `τ > tau_floor`.
pub fn monotonicity_check(traj: &FlowTrajectory, hist: &SolutionHistory, opts: &EntropyOptions) -> Result<EntropyTrace> {
    let origin = opts.tau_origin.unwrap_or(traj.final_time);
    let keep: Vec<usize> = (0..hist.len()).filter(|&k| origin - hist.times[k] > opts.tau_floor.max(0.0)).collect();
    if keep.len() < 5 {
        return Err(Error::TooFewSamples { needed: 5, got: keep.len() });
    }
    let last = hist.len() - 1;
    let terminal = snapshot_at(traj, hist.times[last])?;
    let terminal_mass = integrate(&terminal, &hist.field(last))?;
    let factor = match opts.normalization {
        _ if (terminal_mass - 1.0).abs() <= NORMALIZATION_TOLERANCE => 1.0,
        Normalization::Strict => return Err(Error::NotNormalized { mass: terminal_mass }),
        Normalization::Rescale => terminal_mass,
    };

    let mut samples = Vec::with_capacity(keep.len());
    for &k in &keep {
        let t = hist.times[k];
        let tau = origin - t;
        let s = snapshot_at(traj, t)?;
        let u = hist.field(k).map(|x| x / factor);
        let integrand = production_integrand(&s, &u, tau)?;
        samples.push(EntropySample {
            t,
            tau,
            w: w_entropy_with(&s, &u, tau, Normalization::Rescale)?,
            dw_dt: None,
            production: integrate(&s, &integrand)?,
            max_integrand: integrand.max(),
            residual: None,
            normalization: integrate(&s, &u)?,
        });
    }
    let dt = hist.saved_dt();
    let mut violations = Vec::new();
    for j in 1..samples.len() - 1 {
        if keep[j + 1] != keep[j] + 1 || keep[j - 1] + 1 != keep[j] {
            continue;
        }
        let d = (samples[j + 1].w - samples[j - 1].w) / (2.0 * dt);
        samples[j].dw_dt = Some(d);
        samples[j].residual = Some((d - samples[j].production).abs());
        if d < -opts.tolerance {
            violations.push(samples[j].t);
        }
    }
    let end = samples.last().map(|s| s.normalization).unwrap_or(1.0);
    let normalization_drift = samples.iter().map(|s| (s.normalization - end).abs()).fold(0.0, f64::max);
    Ok(EntropyTrace { samples, violations, normalization_drift, rescale_factor: factor })
}
