use std::f64::consts::PI;

use conjheat::analysis::*;
use conjheat::geometry::{
    curvature_bounds, geodesic_distance, make_shrinking_sphere, make_torus, snapshot_at, Anchor, FlowTrajectory, Region,
};
use conjheat::kernel::PeriodicGaussian;
use conjheat::order::fit_order;
use conjheat::solver::{default_step_rule, solve_conjugate, SolutionHistory};
use conjheat::{Error, MaskedField, ScalarField};
use proptest::prelude::*;

fn solve(traj: &FlowTrajectory, f: impl Fn(&[f64]) -> f64, steps: usize) -> SolutionHistory {
    let terminal = ScalarField::from_fn(&traj.grid, traj.final_time, f);
    solve_conjugate(traj, &terminal, steps, default_step_rule()).unwrap()
}

fn circle(n: usize, t: f64) -> FlowTrajectory {
    make_torus(1, &[2.0 * PI], &[n], t).unwrap()
}

fn sup_abs(m: &MaskedField) -> f64 {
    m.max_abs().unwrap().0
}

#[test]
fn gradient_quantity_vanishes_for_constant_data() {
    let traj = circle(64, 0.1);
    let hist = solve(&traj, |_| 0.3, 20);
    let q = gradient_quantity(&traj, &hist, 0.05, 2.0).unwrap();
    assert!(sup_abs(&q.value) < 1e-12);

    let traj = make_shrinking_sphere(2, 1.0, 0.2, 32).unwrap();
    let hist = solve(&traj, |_| 1.0, 40);
    let q = gradient_quantity(&traj, &hist, 0.1, 2.0).unwrap();
    assert!(sup_abs(&q.value) < 1e-10, "{}", sup_abs(&q.value));
}

#[test]
fn gradient_quantity_at_gaussian_center() {
    // For variance s: |∇u|²/u² = x²/s², u_t/u = 1/s - x²/s², so the centre value is α/s.
    let alpha = 2.0;
    let traj = circle(1024, 0.1);
    let g = PeriodicGaussian::new(2.0 * PI, 0.0, 0.05);
    let hist = solve(&traj, |x| g.value(x[0]), 200);
    let t = 0.05;
    let q = gradient_quantity(&traj, &hist, t, alpha).unwrap();
    let s = g.evolved(0.1 - t).variance;
    let exact = alpha / s;
    assert!((q.value.field.values[0] - exact).abs() < 1e-3 * exact, "{} vs {exact}", q.value.field.values[0]);
    assert!((q.scaled.field.values[0] - 0.05 * exact).abs() < 1e-3 * exact);
}

#[test]
fn hessian_f1_on_constant_sphere_is_five_alpha_r() {
    let traj = make_shrinking_sphere(2, 1.0, 0.2, 32).unwrap();
    let hist = solve(&traj, |_| 1.0, 40);
    let t = hist.times[10];
    let q = hessian_quantity_f1(&traj, &hist, t, 2.0).unwrap();
    let r = 2.0 / (1.0 - 2.0 * t);
    for v in &q.value.field.values {
        assert!((v - 10.0 * r).abs() < 1e-9 * r);
    }
}

#[test]
fn hessian_ratios_vanish_for_constant_data() {
    let traj = circle(32, 0.1);
    let hist = solve(&traj, |_| 0.7, 10);
    let r = theorem_hessian_ratio(&traj, &hist, 0.05, hist.max_value(), 1.0, Some(1.0)).unwrap();
    assert!(sup_abs(&r.norm_form) < 1e-12);
    assert!(sup_abs(&r.eigen_form) < 1e-12);
    assert_eq!(r.reports[1].bound, Some(HESSIAN_FORM_COEFFICIENT));
    assert!(theorem_hessian_ratio(&traj, &hist, 0.05, 0.5, 1.0, None).is_err());
}

#[test]
fn v_and_w_match_the_exp_cos_closed_form() {
    let n = 512;
    let traj = circle(n, 0.1);
    let hist = solve(&traj, |x| 2.0 * (-(1.0 - x[0].cos())).exp(), 10);
    let a = hist.max_value();
    assert!((a - 2.0).abs() < 1e-14);
    let v = v_tensor(&traj, &hist, 0.1, a).unwrap();
    let w = w_tensor(&traj, &hist, 0.1, a).unwrap();
    for i in 0..n {
        let x = traj.grid.coords(i)[0];
        let d = 2.0 - x.cos();
        let ve = (x.sin().powi(2) - x.cos()) / d;
        let we = x.sin().powi(2) / (d * d);
        assert!((v.tensor.c11[i] - ve).abs() < 1e-4, "{i}");
        assert!((w.tensor.c11[i] - we).abs() < 1e-4, "{i}");
    }
}

#[test]
fn constant_data_has_zero_residuals_on_the_flat_torus() {
    let traj = make_torus(2, &[2.0 * PI, 3.0], &[16, 16], 0.1).unwrap();
    let hist = solve(&traj, |_| 0.4, 10);
    let a = hist.sup_bound();
    let t = hist.times[5];
    assert!(sup_abs(&lemma21_deltaf_residual(&traj, &hist, t, 2.0).unwrap()) < 1e-12);
    let (p, q) = lemma31_component_residuals(&traj, &hist, t, 2.0).unwrap();
    assert!(sup_abs(&p) < 1e-12 && sup_abs(&q) < 1e-12);
    assert!(sup_abs(&lemma33_residual(&traj, &hist, t, a, HessianSign::Derived).unwrap().component_max()) < 1e-12);
    assert!(sup_abs(&lemma34_residual(&traj, &hist, t, a).unwrap().component_max()) < 1e-12);
}

#[test]
fn constant_data_on_the_sphere_reduces_exactly() {
    let traj = make_shrinking_sphere(2, 1.0, 0.2, 32).unwrap();
    let hist = solve(&traj, |_| 1.0, 40);
    let t = hist.times[20];
    assert!(sup_abs(&lemma21_deltaf_residual(&traj, &hist, t, 2.0).unwrap()) < 1e-8);
    let (p, q) = lemma31_component_residuals(&traj, &hist, t, 2.0).unwrap();
    assert!(sup_abs(&p) < 1e-8 && sup_abs(&q) < 1e-8);
}

#[test]
fn residuals_need_interior_levels() {
    let traj = circle(32, 0.1);
    let hist = solve(&traj, |x| 1.0 + 0.1 * x[0].cos(), 10);
    assert!(lemma21_deltaf_residual(&traj, &hist, 0.1, 2.0).is_err());
    assert!(lemma34_residual(&traj, &hist, 0.0, hist.sup_bound()).is_err());
    assert!(matches!(lemma21_deltaf_residual(&traj, &hist, 0.033, 2.0), Err(Error::NotASample(_))));
}

fn circle_residuals(n: usize) -> Vec<f64> {
    let traj = circle(n, 0.1);
    let hist = solve(&traj, |x| (-0.75 * (1.0 - x[0].cos())).exp(), n / 2);
    let a = hist.sup_bound();
    let (p, q) = lemma31_component_residuals(&traj, &hist, 0.05, 2.0).unwrap();
    vec![
        sup_abs(&lemma21_deltaf_residual(&traj, &hist, 0.05, 2.0).unwrap()),
        sup_abs(&p),
        sup_abs(&q),
        sup_abs(&lemma33_residual(&traj, &hist, 0.05, a, HessianSign::Derived).unwrap().component_max()),
        sup_abs(&lemma34_residual(&traj, &hist, 0.05, a).unwrap().component_max()),
    ]
}

fn assert_orders(hs: &[f64], rows: &[Vec<f64>], target: f64) {
    for j in 0..rows[0].len() {
        let e: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let fit = fit_order(hs, &e).unwrap();
        assert!(fit.meets(target), "column {j}: {e:?} -> {:?}", fit.order);
    }
}

#[test]
fn flat_circle_identities_converge_at_second_order() {
    let levels = [128usize, 256, 512];
    let rows: Vec<Vec<f64>> = levels.iter().map(|&n| circle_residuals(n)).collect();
    let hs: Vec<f64> = levels.iter().map(|&n| 1.0 / n as f64).collect();
    assert_orders(&hs, &rows, 1.8);
}

#[test]
fn flat_torus_tensor_identities_converge_at_second_order() {
    let levels = [32usize, 64, 128];
    let mut rows = Vec::new();
    for &n in &levels {
        let traj = make_torus(2, &[2.0 * PI, 2.0 * PI], &[n, n], 0.1).unwrap();
        let hist = solve(&traj, |x| (-0.5 * (1.0 - x[0].cos()) - 0.25 * (1.0 - x[1].cos())).exp(), n / 2);
        let a = hist.sup_bound();
        let l33 = lemma33_residual(&traj, &hist, 0.05, a, HessianSign::Derived).unwrap();
        assert!(l33.tensor.c12.iter().any(|v| *v != 0.0));
        rows.push(vec![
            sup_abs(&l33.component_max()),
            sup_abs(&lemma34_residual(&traj, &hist, 0.05, a).unwrap().component_max()),
        ]);
    }
    let hs: Vec<f64> = levels.iter().map(|&n| 1.0 / n as f64).collect();
    assert_orders(&hs, &rows, 1.8);
}

#[test]
fn gaussian_scalar_identities_converge() {
    let levels = [256usize, 512, 1024];
    let mut rows = Vec::new();
    for &n in &levels {
        let traj = circle(n, 0.1);
        let g = PeriodicGaussian::new(2.0 * PI, 0.0, 0.02);
        let hist = solve(&traj, |x| g.value(x[0]), n / 2);
        let (p, q) = lemma31_component_residuals(&traj, &hist, 0.05, 2.0).unwrap();
        rows.push(vec![sup_abs(&lemma21_deltaf_residual(&traj, &hist, 0.05, 2.0).unwrap()), sup_abs(&p), sup_abs(&q)]);
    }
    let hs: Vec<f64> = levels.iter().map(|&n| 1.0 / n as f64).collect();
    assert_orders(&hs, &rows, 1.5);
}

#[test]
fn sphere_identities_converge_away_from_the_poles() {
    let levels = [32usize, 64, 128];
    let mut rows = Vec::new();
    for &n in &levels {
        let traj = make_shrinking_sphere(2, 1.0, 0.2, n).unwrap();
        let hist = solve(&traj, |x| 1.0 + 0.5 * x[0].cos(), n);
        let keep = Window::Colatitude { lo: 0.1 * PI, hi: 0.9 * PI }.mask(&traj.grid);
        let a = hist.sup_bound();
        let (p, q) = lemma31_component_residuals(&traj, &hist, 0.1, 2.0).unwrap();
        let s = snapshot_at(&traj, 0.1).unwrap();
        let k = hist.sample_index(0.1).unwrap();
        let b = bochner_residual(&s, &hist.field(k)).unwrap();
        let b = MaskedField { field: b, trusted: vec![true; n] };
        let r = |m: MaskedField| sup_abs(&m.restrict(&keep));
        rows.push(vec![
            r(lemma21_deltaf_residual(&traj, &hist, 0.1, 2.0).unwrap()),
            r(p),
            r(q),
            r(b),
            r(lemma33_residual(&traj, &hist, 0.1, a, HessianSign::Derived).unwrap().component_max()),
            r(lemma34_residual(&traj, &hist, 0.1, a).unwrap().component_max()),
        ]);
    }
    let hs: Vec<f64> = levels.iter().map(|&n| 1.0 / n as f64).collect();
    assert_orders(&hs, &rows, 1.5);
}

#[test]
fn printed_hessian_sign_fails_on_curved_backends() {
    let traj = make_shrinking_sphere(2, 1.0, 0.2, 64).unwrap();
    let hist = solve(&traj, |x| 1.0 + 0.5 * x[0].cos(), 64);
    let keep = Window::Colatitude { lo: 0.1 * PI, hi: 0.9 * PI }.mask(&traj.grid);
    let a = hist.sup_bound();
    let res = |sign| sup_abs(&lemma33_residual(&traj, &hist, 0.1, a, sign).unwrap().component_max().restrict(&keep));
    assert!(res(HessianSign::Derived) < 1e-2);
    assert!(res(HessianSign::AsPrinted) > 0.5);
}

#[test]
fn curvature_evolution_holds_on_the_round_sphere() {
    let traj = make_shrinking_sphere(3, 1.0, 0.1, 32).unwrap();
    let r = curvature_evolution_residual(&traj, 0.05, 1e-4).unwrap();
    // Centered difference of R = 6/(1 - 4t) in t.
    assert!(r.max_abs() < 1e-5, "{}", r.max_abs());
    assert!(curvature_evolution_residual(&traj, 0.05, 0.06).is_err());
}

#[test]
fn gradient_bound_leading_terms() {
    let zero = conjheat::geometry::CurvatureBounds::zero();
    let (alpha, eps, tau) = (2.0, 1.0, 0.25);
    let b = gradient_bound(GradientBoundForm::Expanded, &zero, alpha, eps, tau, None, 1, 3.0).unwrap();
    assert!((b - alpha * alpha / tau).abs() < 1e-12);
    let b = gradient_bound(GradientBoundForm::Local, &zero, alpha, eps, tau, None, 1, 0.0).unwrap();
    assert!((b - (1.0 + eps) * alpha * alpha / (2.0 * tau)).abs() < 1e-12);
    assert!(gradient_bound(GradientBoundForm::Local, &zero, 1.0, eps, tau, None, 1, 0.0).is_err());
}

#[test]
fn cube_over_the_whole_manifold_is_the_global_sup() {
    let traj = make_shrinking_sphere(2, 1.0, 0.2, 48).unwrap();
    let hist = solve(&traj, |x| 1.0 + 0.3 * x[0].cos(), 20);
    let fields: Vec<MaskedField> = (0..hist.len()).map(|k| MaskedField::all_trusted(hist.field(k))).collect();
    let rep = cube_sup(&traj, &fields, Anchor::SouthPole, 10.0, 0.2, 0.2).unwrap();
    let global = hist.max_value();
    assert_eq!(rep.sup, global);
}

#[test]
fn cube_on_the_sphere_tracks_the_growing_cap() {
    // q = θ (1 + t) increases away from the north pole and in time; the cap
    // θ <= r / ρ(t) is largest at the latest time.
    let n = 256;
    let traj = make_shrinking_sphere(2, 1.0, 0.2, n).unwrap();
    let h = PI / n as f64;
    let times: Vec<f64> = (0..=20).map(|k| 0.01 * k as f64).collect();
    let fields: Vec<MaskedField> = times
        .iter()
        .map(|&t| MaskedField::all_trusted(ScalarField::from_fn(&traj.grid, t, |x| x[0] * (1.0 + t))))
        .collect();
    let (r, t0, tp) = (0.5, 0.15, 0.1);
    let rep = cube_sup(&traj, &fields, Anchor::NorthPole, r, t0, tp).unwrap();
    let exact = r / (1.0f64 - 2.0 * t0).sqrt() * (1.0 + t0);
    assert!(rep.sup <= exact + 1e-12 && exact - rep.sup <= h * (1.0 + t0), "{} {exact}", rep.sup);
    assert!((rep.argmax_time - t0).abs() < 1e-12);
    assert!(cube_sup(&traj, &fields, Anchor::NorthPole, r, 0.05, 0.1).is_err());
}

#[test]
fn sphere_bounds_are_inflated() {
    let traj = make_shrinking_sphere(2, 1.0, 0.2, 32).unwrap();
    let b = curvature_bounds(&traj, Region::Whole, (0.0, 0.2)).unwrap();
    assert!(b.ric_k0 >= 1.0 / 0.6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn torus_distance_is_a_metric(i in 0usize..24, j in 0usize..24, k in 0usize..24) {
        let traj = make_torus(2, &[3.0, 5.0], &[16, 24], 0.1).unwrap();
        let s = snapshot_at(&traj, 0.0).unwrap();
        let n = s.grid.len();
        let (i, j, k) = (i * 13 % n, j * 17 % n, k * 7 % n);
        let di = geodesic_distance(&s, Anchor::Node(i)).unwrap();
        let dj = geodesic_distance(&s, Anchor::Node(j)).unwrap();
        prop_assert!((di.values[j] - dj.values[i]).abs() < 1e-12);
        prop_assert!(di.values[k] <= di.values[j] + dj.values[k] + 1e-12);
        prop_assert!(di.values[i].abs() < 1e-15);
    }

    #[test]
    fn w_is_positive_semidefinite(amp in 0.1..1.5f64, b in 0.1..1.5f64, shift in 0.0..6.0f64) {
        let traj = make_torus(2, &[2.0 * PI, 2.0 * PI], &[16, 16], 0.05).unwrap();
        let hist = solve(&traj, |x| (-amp * (1.0 - (x[0] - shift).cos()) - b * (1.0 - (x[1] + x[0]).sin())).exp(), 8);
        let w = w_tensor(&traj, &hist, hist.times[4], hist.sup_bound()).unwrap();
        for i in 0..w.tensor.len() {
            prop_assert!(w.tensor.eigen_range_at(i).0 >= -1e-12);
        }
    }

    #[test]
    fn v_trace_is_laplacian_over_u(amp in 0.1..1.5f64, shift in 0.0..6.0f64) {
        let traj = make_torus(2, &[2.0 * PI, 2.0 * PI], &[16, 16], 0.05).unwrap();
        let hist = solve(&traj, |x| (-amp * (1.0 - (x[0] - shift).cos()) - 0.3 * (1.0 - x[1].cos())).exp(), 8);
        let a = hist.sup_bound();
        let v = v_tensor(&traj, &hist, 0.05, a).unwrap();
        let s = snapshot_at(&traj, 0.05).unwrap();
        let u = hist.field(hist.len() - 1);
        let lap = conjheat::geometry::laplace_beltrami(&s, &u).unwrap();
        for i in 0..u.values.len() {
            let expect = lap.values[i] / (u.values[i] * (1.0 - (u.values[i] / a).ln()));
            let (lo, hi) = v.tensor.eigen_range_at(i);
            prop_assert!((v.tensor.trace_at(i) - expect).abs() < 1e-9 * (1.0 + expect.abs()));
            prop_assert!((lo + hi - v.tensor.trace_at(i)).abs() < 1e-9 * (1.0 + expect.abs()));
        }
    }
}
