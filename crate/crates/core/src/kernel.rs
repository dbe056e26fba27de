//! Heat kernel on the circle, used as an oracle for the flat solver.
//!
//! A Gaussian of variance `s` centred at `c`, periodized over period `L`,
//! is summed two independent ways: over images in physical space and as a
//! Fourier (theta) series. Heat flow `u_tau = u_xx` maps variance `s` to
//! `s + 2 tau`.

use std::f64::consts::PI;

/// Periodized Gaussian with total mass `weight`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodicGaussian {
    pub period: f64,
    pub center: f64,
    pub variance: f64,
    pub weight: f64,
}

/// Terms below this fraction of the leading term are dropped.
const CUTOFF: f64 = 1e-40;

impl PeriodicGaussian {
    pub fn new(period: f64, center: f64, variance: f64) -> Self {
        Self { period, center, variance, weight: 1.0 }
    }

    /// The same Gaussian after heat flow for `tau`.
    pub fn evolved(&self, tau: f64) -> Self {
        Self { variance: self.variance + 2.0 * tau, ..*self }
    }

    fn image_range(&self) -> i64 {
        // exp(-d^2 / 2s) < CUTOFF once d^2 > -2 s ln(CUTOFF).
        let reach = (-2.0 * self.variance * CUTOFF.ln()).sqrt();
        (reach / self.period).ceil() as i64 + 1
    }

    fn offset(&self, x: f64) -> f64 {
        (x - self.center).rem_euclid(self.period)
    }

    /// Value and derivative with respect to the variance, by image sums.
    fn images(&self, x: f64) -> (f64, f64) {
        let s = self.variance;
        let d0 = self.offset(x);
        let m = self.image_range();
        let norm = self.weight / (2.0 * PI * s).sqrt();
        let (mut v, mut ds) = (0.0, 0.0);
        for k in -m..=m {
            let d = d0 + k as f64 * self.period;
            let e = (-d * d / (2.0 * s)).exp();
            v += e;
            ds += e * (d * d / (2.0 * s * s) - 0.5 / s);
        }
        (norm * v, norm * ds)
    }

    /// Value by image sums.
    pub fn value(&self, x: f64) -> f64 {
        self.images(x).0
    }

    /// Value by the Fourier series `(1/L) sum_k exp(-s q_k^2 / 2) cos(q_k d)`.
    pub fn value_fourier(&self, x: f64) -> f64 {
        let d = self.offset(x);
        let q = 2.0 * PI / self.period;
        let mut v = 1.0;
        let mut k = 1;
        loop {
            let qk = q * k as f64;
            let a = (-0.5 * self.variance * qk * qk).exp();
            if a < CUTOFF {
                break;
            }
            v += 2.0 * a * (qk * d).cos();
            k += 1;
        }
        self.weight * v / self.period
    }

    /// `d/dt` of the evolved kernel, where `t = T - tau`;
    /// `u_t = -u_tau = -2 du/ds`.
    pub fn time_derivative(&self, x: f64) -> f64 {
        -2.0 * self.images(x).1
    }

    /// First and second spatial derivatives by image sums.
    pub fn space_derivatives(&self, x: f64) -> (f64, f64) {
        let s = self.variance;
        let d0 = self.offset(x);
        let m = self.image_range();
        let norm = self.weight / (2.0 * PI * s).sqrt();
        let (mut g, mut h) = (0.0, 0.0);
        for k in -m..=m {
            let d = d0 + k as f64 * self.period;
            let e = (-d * d / (2.0 * s)).exp();
            g += -d / s * e;
            h += (d * d / (s * s) - 1.0 / s) * e;
        }
        (norm * g, norm * h)
    }
}

/// Exact solution built from a sum of periodized Gaussians.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixture {
    pub parts: Vec<PeriodicGaussian>,
}

impl GaussianMixture {
    pub fn evolved(&self, tau: f64) -> Self {
        Self { parts: self.parts.iter().map(|p| p.evolved(tau)).collect() }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.parts.iter().map(|p| p.value(x)).sum()
    }

    pub fn time_derivative(&self, x: f64) -> f64 {
        self.parts.iter().map(|p| p.time_derivative(x)).sum()
    }
}
