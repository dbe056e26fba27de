//! Observed convergence order from a refinement sequence.

use serde::Serialize;

use crate::error::{Error, Result};

/// Errors at or below this level count as exact and are left out of the fit.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderFit {
    /// Least-squares slope of `log(error)` against `log(h)`; `None` when every
    /// error sits at the roundoff floor.
    pub order: Option<f64>,
    /// True when every error is at the roundoff floor.
    pub exact: bool,
    pub samples: usize,
}

impl OrderFit {
    /// Exact results pass any order target.
    pub fn meets(&self, target: f64) -> bool {
        self.exact || self.order.is_some_and(|p| p >= target)
    }
}

pub fn fit_order(hs: &[f64], errors: &[f64]) -> Result<OrderFit> {
    if hs.len() != errors.len() {
        return Err(Error::InvalidInput("step and error lists differ in length".into()));
    }
    if hs.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: hs.len() });
    }
    if errors.iter().any(|e| !e.is_finite()) {
        return Ok(OrderFit { order: None, exact: false, samples: hs.len() });
    }
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .zip(errors)
        .filter(|(_, &e)| e > ROUNDOFF_FLOOR)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.is_empty() {
        return Ok(OrderFit { order: None, exact: true, samples: hs.len() });
    }
    if pts.len() < 2 {
        // A single error above the floor; if it is the coarsest level the rest
        // converged to roundoff, which is at least as good as any order.
        let coarsest_only = errors[0] > ROUNDOFF_FLOOR && errors[1..].iter().all(|&e| e <= ROUNDOFF_FLOOR);
        return Ok(OrderFit { order: None, exact: coarsest_only, samples: hs.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(OrderFit { order: Some(sxy / sxx), exact: false, samples: hs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let hs = [0.1, 0.05, 0.025];
        let es: Vec<f64> = hs.iter().map(|h: &f64| 3.0 * h.powi(2)).collect();
        let fit = fit_order(&hs, &es).unwrap();
        assert!((fit.order.unwrap() - 2.0).abs() < 1e-12);
        assert!(fit.meets(1.8));
    }

    #[test]
    fn roundoff_counts_as_exact() {
        let fit = fit_order(&[0.1, 0.05, 0.025], &[1e-15, 3e-16, 2e-15]).unwrap();
        assert!(fit.exact && fit.meets(2.0));
    }

    #[test]
    fn non_finite_errors_fail() {
        let fit = fit_order(&[0.1, 0.05], &[f64::NAN, 1.0]).unwrap();
        assert!(!fit.meets(0.0));
    }
}
