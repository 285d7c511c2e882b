//! Solver checks against closed-form radial solutions.

use nlpot::math;
use nlpot::nlaplace::{flux_through_sphere, weak_comparison_check, DirichletProblem};
use nlpot::{fn_field, Field, Grid, RadonMeasure, ScalarField};

/// -Delta_n (m log 1/|x|) = m^{n-1} omega_{n-1} delta_0: solving with the
/// atomic measure must recover the log profile away from the origin cell.
#[test]
fn dirac_solve_recovers_log_profile() {
    let n = 3;
    let h = 1.0 / 48.0;
    let grid = Grid::ball(n, &[0.0; 3], 1.0, h).unwrap();
    let beta = math::sphere_area(n); // m = 1
    let mu = RadonMeasure::atom(n, &[0.0; 3], beta).unwrap();
    let problem = DirichletProblem::new(&grid, |_| 0.0, mu, h).unwrap();
    let (u, report) = problem.solve().unwrap();
    assert!(report.converged, "solver did not converge: {report:?}");

    let mut worst_rel: f64 = 0.0;
    for k in 0..13 {
        let r = 0.2 + 0.05 * k as f64;
        for dir in [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.577350269189626, 0.577350269189626, 0.577350269189626],
            [-0.707106781186548, 0.707106781186548, 0.0],
        ] {
            let x = math::point_from(&[r * dir[0], r * dir[1], r * dir[2]]);
            let got = u.eval(&x);
            let want = math::ln(1.0 / r);
            worst_rel = worst_rel.max((got - want).abs() / want.abs());
        }
    }
    assert!(worst_rel < 0.05, "relative error {worst_rel}");

    // nonnegativity up to discretization tolerance (zero data, mu >= 0)
    let (lo, _) = u.min_max();
    assert!(lo > -1e-8, "solution dips to {lo}");
}

/// Flux mass balance: for zero boundary data the sphere flux matches the
/// enclosed measure, and scaling mu by c^{n-1} scales the flux accordingly.
#[test]
fn flux_mass_balance_and_scaling() {
    let n = 3;
    let h = 1.0 / 32.0;
    let grid = Grid::ball(n, &[0.0; 3], 1.0, h).unwrap();
    let beta = math::sphere_area(n);
    let solve_with = |mass: f64| {
        let mu = RadonMeasure::atom(n, &[0.0; 3], mass).unwrap();
        let p = DirichletProblem::new(&grid, |_| 0.0, mu, h).unwrap();
        p.solve().unwrap().0
    };
    let u = solve_with(beta);
    let f = flux_through_sphere(&u, &[0.0; 3], 0.5).unwrap();
    assert!((f - beta).abs() / beta < 0.05, "flux {f} vs {beta}");

    // c = 2: measure scales by 2^{n-1} = 4, flux likewise
    let u2 = solve_with(4.0 * beta);
    let f2 = flux_through_sphere(&u2, &[0.0; 3], 0.5).unwrap();
    assert!((f2 - 4.0 * beta).abs() / (4.0 * beta) < 0.05, "flux {f2}");
    // and the solution itself doubles (fundamental profile scales linearly)
    let x = math::point_from(&[0.4, 0.0, 0.0]);
    let ratio = u2.eval(&x) / u.eval(&x);
    assert!((ratio - 2.0).abs() < 0.05, "ratio {ratio}");
}

/// Comparison principle: adding mass can only raise the solution, and
/// shifting the boundary data shifts the solution.
#[test]
fn weak_comparison_on_solved_pairs() {
    let n = 2;
    let h = 1.0 / 64.0;
    let grid = Grid::ball(n, &[0.0; 2], 1.0, h).unwrap();
    let boundary = |x: &math::Point| 0.3 * x[0] + 0.5;

    let v = DirichletProblem::new(&grid, boundary, RadonMeasure::zero(n), h)
        .unwrap()
        .solve()
        .unwrap()
        .0;
    let mu = RadonMeasure::atom(n, &[0.2, 0.1], 1.0).unwrap();
    let u = DirichletProblem::new(&grid, boundary, mu, h)
        .unwrap()
        .solve()
        .unwrap()
        .0;
    let rep = weak_comparison_check(&u, &v, 1e-9).unwrap();
    assert_eq!(rep.fraction, 1.0, "comparison violated: {rep:?}");

    let w = DirichletProblem::new(&grid, |x| boundary(x) + 1.0, RadonMeasure::zero(n), h)
        .unwrap()
        .solve()
        .unwrap()
        .0;
    let rep = weak_comparison_check(&w, &v, 1e-9).unwrap();
    assert_eq!(rep.fraction, 1.0);
    assert!(
        (rep.min_difference - 1.0).abs() < 1e-6,
        "shift invariance broken: {rep:?}"
    );
}

/// Radial energy oracle: J of a log profile on an annulus against 1-D
/// quadrature of omega_{n-1} m^n integral r^{-n} r^{n-1} dr / n.
#[test]
fn energy_matches_radial_quadrature() {
    let n = 3;
    let h = 1.0 / 56.0;
    let (r_in, r_out) = (0.1, 1.0);
    let grid = Grid::annulus(n, &[0.0; 3], r_in, r_out, h).unwrap();
    let m = 1.3;
    let u = ScalarField::from_fn(&grid, |x| m * math::ln(1.0 / math::norm(x, n)));

    // independent 1-D quadrature of the radial energy density
    let steps = 20_000;
    let mut oracle = 0.0;
    for k in 0..steps {
        let r = r_in + (r_out - r_in) * (k as f64 + 0.5) / steps as f64;
        let integrand = math::powf(m / r, n as f64) * math::powf(r, (n - 1) as f64);
        oracle += integrand * (r_out - r_in) / steps as f64;
    }
    oracle *= math::sphere_area(n) / n as f64;

    let e = nlpot::nlaplace::energy(&u, &RadonMeasure::zero(n), 0.0).unwrap();
    assert!((e - oracle).abs() / oracle < 0.03, "{e} vs {oracle}");
}

/// Halving eps moves the solution by less than the discretization scale.
#[test]
fn eps_robustness() {
    let n = 3;
    let h = 1.0 / 24.0;
    let grid = Grid::ball(n, &[0.0; 3], 1.0, h).unwrap();
    let mu = RadonMeasure::atom(n, &[0.0; 3], math::sphere_area(n)).unwrap();
    let solve_eps = |eps: f64| {
        DirichletProblem::new(&grid, |_| 0.0, mu.clone(), eps)
            .unwrap()
            .solve()
            .unwrap()
            .0
    };
    let a = solve_eps(h);
    let b = solve_eps(h / 2.0);
    let mut worst: f64 = 0.0;
    for lin in grid.active_cells() {
        let r = math::norm(&grid.center_of(lin), n);
        if r > 0.15 {
            worst = worst.max((a.values()[lin] - b.values()[lin]).abs());
        }
    }
    assert!(worst < 3.0 * h, "eps sensitivity {worst}");
}

/// Synthetic closed-form field wrapped as a function field: interpolation-free
/// reference for the grid pipeline.
#[test]
fn fn_field_and_grid_field_agree_on_log() {
    let n = 2;
    let grid = Grid::annulus(n, &[0.0; 2], 0.2, 1.0, 0.01).unwrap();
    let exact = fn_field(n, |x: &math::Point| math::ln(1.0 / math::norm(x, n)));
    let sampled = ScalarField::from_fn(&grid, |x| exact.eval(x));
    for k in 0..50 {
        let r = 0.25 + 0.01 * k as f64;
        let x = math::point_from(&[r * 0.6, r * 0.8]);
        let d = (sampled.eval(&x) - exact.eval(&x)).abs();
        assert!(d < 1e-3, "interp error {d} at r={r}");
    }
}
