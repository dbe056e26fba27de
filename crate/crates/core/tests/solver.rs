use std::f64::consts::PI;

use conjheat::geometry::{integrate, make_shrinking_sphere, make_torus, snapshot_at};
use conjheat::kernel::PeriodicGaussian;
use conjheat::order::fit_order;
use conjheat::solver::{solve_conjugate, solve_conjugate_with, step_rule, u_time_derivative, SolveOptions, SpatialScheme};
use conjheat::{Error, ScalarField};

const T: f64 = 0.1;

fn gaussian_error(n: usize, steps: usize, spatial: SpatialScheme) -> f64 {
    let traj = make_torus(1, &[2.0 * PI], &[n], T).unwrap();
    let g = PeriodicGaussian::new(2.0 * PI, 0.0, 0.02);
    let terminal = ScalarField::from_fn(&traj.grid, T, |x| g.value(x[0]));
    let hist = solve_conjugate_with(&traj, &terminal, &SolveOptions::new(steps).with_spatial(spatial)).unwrap();
    let mut err: f64 = 0.0;
    for (k, t) in hist.times.iter().enumerate() {
        let exact = g.evolved(T - t);
        for (i, v) in hist.values[k].iter().enumerate() {
            err = err.max((v - exact.value(traj.grid.coords(i)[0])).abs());
        }
    }
    err
}

#[test]
fn compact_scheme_converges_at_fourth_order_to_the_kernel() {
    let levels = [128usize, 256, 512, 1024];
    let errors: Vec<f64> = levels
        .iter()
        .enumerate()
        .map(|(k, &n)| gaussian_error(n, 104 << (2 * k), SpatialScheme::Compact4))
        .collect();
    let hs: Vec<f64> = levels.iter().map(|&n| 2.0 * PI / n as f64).collect();
    let fit = fit_order(&hs, &errors).unwrap();
    assert!(fit.order.unwrap() > 3.5, "{errors:?}");
    assert!(errors[3] < 1e-6, "{errors:?}");
}

#[test]
fn central_scheme_converges_at_second_order() {
    let errors: Vec<f64> = [64usize, 128, 256]
        .iter()
        .enumerate()
        .map(|(k, &n)| gaussian_error(n, 26 << (2 * k), SpatialScheme::Central2))
        .collect();
    let fit = fit_order(&[4.0, 2.0, 1.0], &errors).unwrap();
    assert!((fit.order.unwrap() - 2.0).abs() < 0.2, "{errors:?}");
}

#[test]
fn constant_data_stays_constant_on_the_torus() {
    let traj = make_torus(2, &[1.0, 2.0], &[16, 32], 0.5).unwrap();
    let terminal = ScalarField::constant(&traj.grid, 0.5, 0.7);
    let hist = solve_conjugate(&traj, &terminal, 16, step_rule("crank-nicolson").unwrap()).unwrap();
    for v in hist.values.iter().flatten() {
        assert!((v - 0.7).abs() < 1e-14);
    }
}

#[test]
fn sphere_constant_follows_the_scalar_ode() {
    // u' = R u with R = n (n-1) / r^2, r^2 = r0^2 - 2 (n-1) t, gives
    // u(t) = u(T) (r(T) / r(t))^n.
    let (n, r0, big_t) = (2usize, 1.0f64, 0.2);
    let traj = make_shrinking_sphere(n, r0, big_t, 32).unwrap();
    let terminal = ScalarField::constant(&traj.grid, big_t, 1.0);
    let hist = solve_conjugate(&traj, &terminal, 40, step_rule("crank-nicolson").unwrap()).unwrap();
    // Independent oracle: RK4 on the scalar ODE backward from T.
    let rate = |t: f64| (n * (n - 1)) as f64 / (r0 * r0 - 2.0 * (n as f64 - 1.0) * t);
    let mut c = 1.0;
    let steps = 4000;
    let h = big_t / steps as f64;
    let mut t = big_t;
    for _ in 0..steps {
        let f = |t: f64, c: f64| -rate(t) * c;
        let k1 = f(t, c);
        let k2 = f(t - h / 2.0, c + h / 2.0 * k1);
        let k3 = f(t - h / 2.0, c + h / 2.0 * k2);
        let k4 = f(t - h, c + h * k3);
        c += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t -= h;
    }
    for v in &hist.values[0] {
        assert!((v - c).abs() < 1e-10 * c, "{v} vs {c}");
    }
    let td = u_time_derivative(&traj, &hist, 0.1).unwrap();
    let s = snapshot_at(&traj, 0.1).unwrap();
    let r = s.curvature().scalar.values[0];
    assert!((td.pde.values[5] - r * hist.at(0.1).unwrap().values[5]).abs() < 1e-10);
    assert!(td.pde.values[5] > 0.0);
}

#[test]
fn mass_is_conserved_on_curved_backends() {
    let traj = make_shrinking_sphere(3, 1.0, 0.2, 64).unwrap();
    let terminal = ScalarField::from_fn(&traj.grid, 0.2, |x| 1.0 + 0.5 * x[0].cos());
    let hist = solve_conjugate(&traj, &terminal, 64, step_rule("crank-nicolson").unwrap()).unwrap();
    assert!(hist.meta.mass_drift < 1e-12, "{}", hist.meta.mass_drift);
    let s = snapshot_at(&traj, 0.0).unwrap();
    let m0 = integrate(&s, &hist.field(0)).unwrap();
    assert!((m0 - hist.masses[hist.len() - 1]).abs() < 1e-12 * m0);
}

#[test]
fn time_derivative_matches_kernel() {
    let traj = make_torus(1, &[2.0 * PI], &[512], T).unwrap();
    let g = PeriodicGaussian::new(2.0 * PI, 0.0, 0.02);
    let terminal = ScalarField::from_fn(&traj.grid, T, |x| g.value(x[0]));
    let opts = SolveOptions::new(1664).with_spatial(SpatialScheme::Compact4);
    let hist = solve_conjugate_with(&traj, &terminal, &opts).unwrap();
    let t = hist.times[800];
    let td = u_time_derivative(&traj, &hist, t).unwrap();
    let exact = g.evolved(T - t);
    // The equation side uses the second-order Laplacian, so it carries an
    // O(h^2 u'''') error of a few 1e-3 here.
    let worst = (0..512).fold(0.0f64, |m, i| {
        let x = traj.grid.coords(i)[0];
        m.max((td.pde.values[i] - exact.time_derivative(x)).abs())
    });
    assert!(worst < 5e-3, "{worst}");
    assert!(td.discrepancy < 5e-3, "{}", td.discrepancy);
}

#[test]
fn invalid_inputs_are_rejected() {
    let traj = make_torus(1, &[2.0 * PI], &[32], T).unwrap();
    let bad = ScalarField::from_fn(&traj.grid, T, |x| x[0].sin());
    let rule = step_rule("implicit-euler").unwrap();
    assert!(matches!(solve_conjugate(&traj, &bad, 16, rule), Err(Error::PositivityLoss { .. })));
    let ok = ScalarField::constant(&traj.grid, T, 1.0);
    assert!(solve_conjugate(&traj, &ok, 4, rule).is_err());
    let sphere = make_shrinking_sphere(2, 1.0, 0.1, 32).unwrap();
    let opts = SolveOptions::new(16).with_spatial(SpatialScheme::Compact4);
    let one = ScalarField::constant(&sphere.grid, 0.1, 1.0);
    assert!(matches!(solve_conjugate_with(&sphere, &one, &opts), Err(Error::Unsupported(_))));
}
