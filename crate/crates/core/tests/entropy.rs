use std::f64::consts::PI;

use conjheat::entropy::*;
use conjheat::geometry::{make_shrinking_sphere, make_torus, snapshot_at, FlowTrajectory};
use conjheat::kernel::PeriodicGaussian;
use conjheat::order::fit_order;
use conjheat::solver::{default_step_rule, solve_conjugate, SolutionHistory};
use conjheat::{Error, ScalarField};

fn solve(traj: &FlowTrajectory, f: impl Fn(&[f64]) -> f64, steps: usize) -> SolutionHistory {
    let terminal = ScalarField::from_fn(&traj.grid, traj.final_time, f);
    solve_conjugate(traj, &terminal, steps, default_step_rule()).unwrap()
}

#[test]
fn euclidean_gaussian_has_zero_entropy() {
    let tau = 1e-3;
    let traj = make_torus(1, &[2.0 * PI], &[4096], 1.0).unwrap();
    let s = snapshot_at(&traj, 0.0).unwrap();
    let g = PeriodicGaussian::new(2.0 * PI, 1.0, 2.0 * tau);
    let u = ScalarField::from_fn(&s.grid, 0.0, |x| g.value(x[0]));
    let w = w_entropy(&s, &u, tau).unwrap();
    assert!(w.abs() < 1e-4, "{w}");
}

#[test]
fn soliton_sphere_keeps_entropy_constant() {
    // r0² = 2(n-1) T* with n = 2; the run stops short of T*.
    let extinction = 0.5;
    let traj = make_shrinking_sphere(2, 1.0, 0.4, 64).unwrap();
    let area = snapshot_at(&traj, 0.4).unwrap().volume();
    let hist = solve(&traj, |_| 1.0 / area, 80);
    let opts = EntropyOptions { tau_origin: Some(extinction), ..Default::default() };
    let trace = monotonicity_check(&traj, &hist, &opts).unwrap();
    assert!(trace.max_integrand() <= 1e-8, "{}", trace.max_integrand());
    assert!(trace.w_spread() <= 1e-6, "{}", trace.w_spread());
    assert!(trace.max_residual() <= 1e-6);
    assert!(trace.normalization_drift <= 1e-8);
    let w0 = trace.samples[0].w;
    // Continuum value ln 2 - 1 up to the quadrature of the area.
    assert!((w0 - (2f64.ln() - 1.0)).abs() < 1e-3, "{w0}");
}

#[test]
fn perturbed_sphere_produces_entropy() {
    let traj = make_shrinking_sphere(2, 1.0, 0.4, 64).unwrap();
    let hist = solve(&traj, |x| 1.0 + 0.5 * x[0].cos(), 80);
    let opts = EntropyOptions { tau_origin: Some(0.5), normalization: Normalization::Rescale, ..Default::default() };
    let trace = monotonicity_check(&traj, &hist, &opts).unwrap();
    assert!(trace.max_integrand() > 1e-3);
    assert!(trace.violations.is_empty());
}

#[test]
fn constant_density_on_the_circle_matches_closed_form() {
    let l = 2.0 * PI;
    let traj = make_torus(1, &[l], &[16], 1.0).unwrap();
    let hist = solve(&traj, |_| 1.0 / l, 20_000);
    let opts = EntropyOptions { tau_floor: 0.1, ..Default::default() };
    let trace = monotonicity_check(&traj, &hist, &opts).unwrap();
    for s in &trace.samples {
        let exact = 0.5 / s.tau;
        assert!((s.production - exact).abs() <= 1e-10 * exact);
        if let Some(d) = s.dw_dt {
            assert!((d - exact).abs() <= 1e-6 * exact, "tau {}: {d} vs {exact}", s.tau);
        }
    }
}

fn two_bumps(steps: usize) -> EntropyTrace {
    let traj = make_torus(1, &[2.0 * PI], &[1024], 0.1).unwrap();
    let g1 = PeriodicGaussian::new(2.0 * PI, -1.0, 0.05);
    let g2 = PeriodicGaussian::new(2.0 * PI, 1.0, 0.08);
    let hist = solve(&traj, |x| 0.5 * g1.value(x[0]) + 0.5 * g2.value(x[0]), steps);
    let opts = EntropyOptions { tau_floor: 0.01, ..Default::default() };
    monotonicity_check(&traj, &hist, &opts).unwrap()
}

#[test]
fn monotonicity_formula_converges_under_time_refinement() {
    let steps = [50usize, 100, 200, 400];
    let traces: Vec<EntropyTrace> = steps.iter().map(|&m| two_bumps(m)).collect();
    for t in &traces {
        assert!(t.min_dw_dt().unwrap() >= -1e-6);
        assert!(t.samples.iter().all(|s| s.production >= 0.0));
    }
    let hs: Vec<f64> = steps.iter().map(|&m| 0.1 / m as f64).collect();
    let errs: Vec<f64> = traces.iter().map(|t| t.max_residual()).collect();
    let fit = fit_order(&hs, &errs).unwrap();
    assert!(fit.meets(1.0), "{errs:?}");
}

#[test]
fn rejects_short_or_unnormalized_histories() {
    let traj = make_torus(1, &[1.0], &[16], 0.1).unwrap();
    let hist = solve(&traj, |_| 1.0, 8);
    let opts = EntropyOptions { tau_floor: 0.07, ..Default::default() };
    assert!(matches!(monotonicity_check(&traj, &hist, &opts), Err(Error::TooFewSamples { .. })));
    let hist = solve(&traj, |_| 2.0, 8);
    let strict = EntropyOptions::default();
    assert!(matches!(monotonicity_check(&traj, &hist, &strict), Err(Error::NotNormalized { .. })));
    let loose = EntropyOptions { normalization: Normalization::Rescale, ..Default::default() };
    let trace = monotonicity_check(&traj, &hist, &loose).unwrap();
    assert!((trace.rescale_factor - 2.0).abs() < 1e-12);
}
