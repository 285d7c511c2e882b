//! Regularized n-Laplace Dirichlet solves with measure data, discrete
//! n-Laplacian residuals, boundary flux, and comparison checks.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::field::{gradient, Field, ScalarField};
use crate::grid::Grid;
use crate::math::{self, Point};
use crate::measure::RadonMeasure;
use crate::solver::{CellState, System};

pub use crate::solver::SolverReport;

/// Cells that carry Dirichlet data for a domain grid: the outermost active
/// ring plus one ghost layer (two outermost lattice rings for boxes). Pinning
/// the data two cells deep keeps the nonlinear coefficient full-rank at every
/// stencil a free unknown sees, and centering the zero set on the staircase
/// boundary halves the effective-radius offset of the discrete domain.
pub(crate) fn fixed_boundary_cells(grid: &Grid) -> Vec<usize> {
    match grid.region() {
        crate::grid::Region::Box => {
            let dims = grid.dims();
            let n = grid.dim();
            let mut out = Vec::new();
            for lin in grid.cells() {
                let idx = grid.index_of(lin);
                if (0..n).any(|d| idx[d] < 2 || idx[d] + 2 >= dims[d]) {
                    out.push(lin);
                }
            }
            out
        }
        _ => {
            let mut out: Vec<usize> = grid
                .active_cells()
                .filter(|&lin| !grid.is_interior(lin))
                .collect();
            out.extend(grid.ghost_layers(1));
            out.sort_unstable();
            out
        }
    }
}

/// Dirichlet problem  -div((|grad u|^2 + eps^2)^{(n-2)/2} grad u) = mu  on the
/// active region, with data imposed on the ghost layer.
pub struct DirichletProblem {
    grid: Arc<Grid>,
    boundary: Vec<(usize, f64)>,
    rhs: RadonMeasure,
    pub epsilon: f64,
}

impl DirichletProblem {
    pub fn new(
        grid: &Arc<Grid>,
        boundary: impl Fn(&Point) -> f64,
        rhs: RadonMeasure,
        epsilon: f64,
    ) -> Result<DirichletProblem> {
        if rhs.dim() != grid.dim() {
            invalid!("measure dimension does not match grid");
        }
        if !rhs.total_mass().is_finite() {
            invalid!("measure has non-finite total mass");
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            invalid!("regularization must be finite and nonnegative, got {epsilon}");
        }
        let mut data = Vec::new();
        for lin in fixed_boundary_cells(grid) {
            let v = boundary(&grid.center_of(lin));
            if !v.is_finite() {
                invalid!("boundary data must be finite");
            }
            data.push((lin, v));
        }
        data.sort_unstable_by_key(|e| e.0);
        Ok(DirichletProblem {
            grid: grid.clone(),
            boundary: data,
            rhs,
            epsilon,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn rhs(&self) -> &RadonMeasure {
        &self.rhs
    }

    /// Minimize the regularized energy. Nonlinear exponents run a short
    /// continuation in eps, each stage warm-started from the previous one.
    pub fn solve(&self) -> Result<(ScalarField, SolverReport)> {
        if !(self.epsilon > 0.0) {
            invalid!("solves need eps > 0 (eps = 0 is for residual evaluation only)");
        }
        let n = self.grid.dim();
        let masses = self.rhs.cell_masses(&self.grid)?;
        let mut states = vec![CellState::Out; self.grid.len()];
        for lin in self.grid.active_cells() {
            states[lin] = CellState::Free;
        }
        for &(lin, v) in &self.boundary {
            states[lin] = CellState::Fixed(v);
        }

        let stages: &[f64] = if n == 2 { &[1.0] } else { &[8.0, 2.0, 1.0] };
        let mut vals: Option<Vec<f64>> = None;
        let mut report = None;
        let mut total_iters = 0;
        let mut last_system = None;
        for &mult in stages {
            let system = System::new(
                self.grid.clone(),
                n,
                self.epsilon * mult,
                &states,
                masses.clone(),
            )?;
            let mut v = match vals.take() {
                Some(v) => v,
                None => system.initial_values(),
            };
            let r = system.minimize(&mut v, 80);
            total_iters += r.iterations;
            vals = Some(v);
            report = Some(r);
            last_system = Some(system);
        }
        let mut report = report.unwrap();
        report.iterations = total_iters;
        let field = last_system.unwrap().into_field(vals.unwrap());
        Ok((field, report))
    }
}

/// The primal functional J(u) = (1/n) int (|grad u|^2 + eps^2)^{n/2} - int u dmu,
/// evaluated with the central-difference gradient (affine-exact).
pub fn energy(u: &ScalarField, mu: &RadonMeasure, eps: f64) -> Result<f64> {
    if !u.singular_cells().is_empty() {
        return Err(Error::NonFinite(
            "field carries singular cells; energy undefined".into(),
        ));
    }
    let grid = u.grid();
    let n = grid.dim();
    if mu.dim() != n {
        invalid!("measure dimension does not match field");
    }
    let grad = gradient(u);
    let hv = grid.cell_volume();
    let e2 = eps * eps;
    let mut bulk = 0.0;
    for lin in grid.active_cells() {
        let g = grad.at(lin);
        let q: f64 = (0..n).map(|d| g[d] * g[d]).sum();
        bulk += math::powf(q + e2, n as f64 / 2.0);
    }
    let mut linear = 0.0;
    for (p, m) in mu.atoms() {
        let v = u.eval(p);
        if !v.is_finite() {
            return Err(Error::NonFinite("field is not finite at an atom".into()));
        }
        linear += v * m;
    }
    if let Some(f) = mu.density() {
        if f.grid().as_ref() == grid.as_ref() {
            let dv = f.grid().cell_volume();
            for lin in f.grid().active_cells() {
                if !f.is_singular(lin) {
                    linear += u.values()[lin] * f.values()[lin] * dv;
                }
            }
        } else {
            let dv = f.grid().cell_volume();
            for lin in f.grid().active_cells() {
                if !f.is_singular(lin) {
                    let v = u.eval(&f.grid().center_of(lin));
                    if v.is_finite() {
                        linear += v * f.values()[lin] * dv;
                    }
                }
            }
        }
    }
    Ok(hv * bulk / n as f64 - linear)
}

/// Discrete divergence of the regularized flux (|grad u|^2 + eps^2)^{(n-2)/2} grad u.
/// Vanishes identically on affine fields. Cells whose stencil is incomplete or
/// touches a singular cell are flagged singular in the output.
pub fn n_laplacian(u: &ScalarField, eps: f64) -> ScalarField {
    let grid = u.grid().clone();
    let n = grid.dim();
    let h = grid.spacing();
    let e2 = eps * eps;
    let p = (n as f64 - 2.0) / 2.0;
    let len = grid.len();
    let mut div = vec![0.0; len];

    for lin in 0..len {
        let vc = match u.value_at(lin) {
            Some(v) => v,
            None => continue,
        };
        let mut g = [0.0f64; 4];
        let mut mask = [false; 4];
        let mut q = 0.0;
        for d in 0..n {
            if let Some(nb) = grid.neighbor(lin, d, 1) {
                if let Some(vn) = u.value_at(nb) {
                    let gd = (vn - vc) / h;
                    g[d] = gd;
                    mask[d] = true;
                    q += gd * gd;
                }
            }
        }
        let a = math::powf(q + e2, p);
        for d in 0..n {
            if mask[d] {
                let nb = grid.neighbor(lin, d, 1).unwrap();
                let flux = a * g[d] / h;
                div[lin] += flux;
                div[nb] -= flux;
            }
        }
    }

    // a stencil base is deficient when any forward difference is missing;
    // the divergence at a cell is trusted only if the cell has all its face
    // values and every base feeding it has full gradient rank
    let full_base = |lin: usize| -> bool {
        match u.value_at(lin) {
            None => false,
            Some(_) => (0..n).all(|d| {
                grid.neighbor(lin, d, 1)
                    .map(|nb| u.value_at(nb).is_some())
                    .unwrap_or(false)
            }),
        }
    };
    let mut flags = Vec::new();
    for lin in grid.active_cells() {
        let mut bad = u.is_singular(lin) || !full_base(lin);
        for d in 0..n {
            bad |= match grid.neighbor(lin, d, -1) {
                Some(nb) => !full_base(nb),
                None => true,
            };
        }
        if bad {
            flags.push(lin);
        }
    }
    let mut out = ScalarField::from_values(&grid, div);
    out.set_singular(flags);
    out
}

/// -oint_{|x-center|=R} |grad u|^{n-2} du/dn dS by a midpoint sphere rule with
/// gradients interpolated from the grid. For u = m log(1/|x|) this equals
/// m^{n-1} omega_{n-1}.
pub fn flux_through_sphere(u: &ScalarField, center: &[f64], radius: f64) -> Result<f64> {
    let grid = u.grid();
    let n = grid.dim();
    if center.len() != n {
        invalid!("center arity does not match dimension");
    }
    if !(radius > 0.0) {
        invalid!("radius must be positive");
    }
    let h = grid.spacing();
    let res = ((3.3 * radius / h) as usize).clamp(16, if n == 4 { 28 } else { 160 });
    let rule = math::sphere_rule(n, res);
    let grad = gradient(u);
    let rn = math::powf(radius, (n - 1) as f64);
    let mut flux = 0.0;
    for (dir, w) in &rule {
        let mut x = [0.0f64; 4];
        for d in 0..n {
            x[d] = center[d] + radius * dir[d];
        }
        if !u.contains(&x) {
            return Err(Error::OutOfDomain(alloc::format!(
                "sphere of radius {radius} exits the sampled region"
            )));
        }
        let g = grad.eval(&x);
        let gnorm = math::norm(&g, n);
        if !gnorm.is_finite() {
            return Err(Error::NonFinite("gradient interpolation failed".into()));
        }
        let radial = math::dot(&g, dir, n);
        flux -= w * rn * math::powf(gnorm, (n - 2) as f64) * radial;
    }
    Ok(flux)
}

#[derive(Debug, Clone, Copy)]
pub struct ComparisonReport {
    /// Fraction of checked interior cells with `u >= v - tol`.
    pub fraction: f64,
    pub min_difference: f64,
    pub cells_checked: usize,
}

/// Weak-comparison observable: how much of the interior satisfies `u >= v - tol`.
pub fn weak_comparison_check(u: &ScalarField, v: &ScalarField, tol: f64) -> Result<ComparisonReport> {
    if u.grid().as_ref() != v.grid().as_ref() {
        invalid!("comparison requires a shared grid");
    }
    let grid = u.grid();
    let mut checked = 0usize;
    let mut good = 0usize;
    let mut min_diff = f64::INFINITY;
    for lin in grid.active_cells() {
        if !grid.is_interior(lin) || u.is_singular(lin) || v.is_singular(lin) {
            continue;
        }
        let d = u.values()[lin] - v.values()[lin];
        min_diff = min_diff.min(d);
        checked += 1;
        if d >= -tol {
            good += 1;
        }
    }
    if checked == 0 {
        return Err(Error::Insufficient("no interior cells to compare".into()));
    }
    Ok(ComparisonReport {
        fraction: good as f64 / checked as f64,
        min_difference: min_diff,
        cells_checked: checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::fn_field;

    fn log_field(grid: &Arc<Grid>) -> ScalarField {
        ScalarField::from_fn(grid, |x| math::ln(1.0 / math::norm(x, grid.dim())))
    }

    #[test]
    fn energy_of_zero_field_is_background() {
        let g = Grid::boxed(3, &[0.0; 3], &[1.0; 3], 0.1).unwrap();
        let u = ScalarField::constant(&g, 0.0);
        let mu = RadonMeasure::atom(3, &[0.5, 0.5, 0.5], 2.0).unwrap();
        let eps: f64 = 0.3;
        let expect = eps * eps * eps / 3.0 * g.volume();
        let e = energy(&u, &mu, eps).unwrap();
        assert!((e - expect).abs() < 1e-12, "{e} vs {expect}");
    }

    #[test]
    fn energy_of_linear_field_unit_gradient() {
        let g = Grid::boxed(3, &[0.0; 3], &[1.0; 3], 0.05).unwrap();
        let u = ScalarField::from_fn(&g, |x| x[0]);
        let e = energy(&u, &RadonMeasure::zero(3), 0.0).unwrap();
        assert!((e - 1.0 / 3.0).abs() < 1e-10, "{e}");
    }

    #[test]
    fn n_laplacian_of_affine_vanishes() {
        let g = Grid::boxed(3, &[0.0; 3], &[1.0; 3], 0.125).unwrap();
        let u = ScalarField::from_fn(&g, |x| 2.0 * x[0] - x[1] + 0.5 * x[2] + 3.0);
        let lap = n_laplacian(&u, 0.0);
        for lin in g.active_cells() {
            if !lap.is_singular(lin) {
                assert!(lap.values()[lin].abs() < 1e-10);
            }
        }
    }

    #[test]
    fn log_is_n_harmonic_off_origin() {
        // residual on a mid-radius shell decays like O(h)
        let worst_at = |h: f64| {
            let g = Grid::boxed(3, &[-1.0; 3], &[1.0; 3], h).unwrap();
            let u = log_field(&g);
            let lap = n_laplacian(&u, 0.0);
            let mut worst: f64 = 0.0;
            for lin in g.active_cells() {
                let r = math::norm(&g.center_of(lin), 3);
                if (0.4..0.6).contains(&r) && !lap.is_singular(lin) {
                    worst = worst.max(lap.values()[lin].abs());
                }
            }
            worst
        };
        let coarse = worst_at(0.04);
        let fine = worst_at(0.02);
        assert!(fine < 60.0 * 0.02, "residual {fine}");
        assert!(coarse / fine > 1.5, "no first-order decay: {coarse} -> {fine}");
    }

    #[test]
    fn quadratic_field_has_signed_n_laplacian() {
        let g = Grid::boxed(3, &[-1.0; 3], &[1.0; 3], 0.1).unwrap();
        let u = ScalarField::from_fn(&g, |x| math::norm(x, 3) * math::norm(x, 3));
        let lap = n_laplacian(&u, 0.0);
        // div(|2x|^{n-2} 2x) > 0, so -Delta_n u < 0 at interior cells
        for lin in g.active_cells() {
            let r = math::norm(&g.center_of(lin), 3);
            if (0.3..0.7).contains(&r) && !lap.is_singular(lin) {
                assert!(lap.values()[lin] > 0.0);
            }
        }
    }

    #[test]
    fn flux_of_log_matches_sphere_area() {
        let h = 1.0 / 48.0;
        let g = Grid::boxed(3, &[-1.0; 3], &[1.0; 3], h).unwrap();
        let u = log_field(&g);
        for radius in [0.3, 0.5, 0.8] {
            let f = flux_through_sphere(&u, &[0.0; 3], radius).unwrap();
            let exact = math::sphere_area(3);
            assert!((f - exact).abs() / exact < 0.01, "R={radius}: {f} vs {exact}");
        }
    }

    #[test]
    fn flux_of_constant_vanishes_and_scales_homogeneously() {
        let h = 1.0 / 40.0;
        let g = Grid::boxed(3, &[-1.0; 3], &[1.0; 3], h).unwrap();
        let c = ScalarField::constant(&g, 7.0);
        let f = flux_through_sphere(&c, &[0.0; 3], 0.5).unwrap();
        assert!(f.abs() < 1e-12);

        let m = 1.7;
        let u = ScalarField::from_fn(&g, |x| m * math::ln(1.0 / math::norm(x, 3)));
        let f = flux_through_sphere(&u, &[0.0; 3], 0.5).unwrap();
        let exact = m * m * math::sphere_area(3);
        assert!((f - exact).abs() / exact < 0.015, "{f} vs {exact}");
    }

    #[test]
    fn flux_errors_when_sphere_exits_grid() {
        let g = Grid::ball(2, &[0.0; 2], 1.0, 0.05).unwrap();
        let u = ScalarField::constant(&g, 0.0);
        assert!(matches!(
            flux_through_sphere(&u, &[0.0; 2], 1.4),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn solve_zero_data_zero_measure_is_zero() {
        let g = Grid::ball(3, &[0.0; 3], 1.0, 0.125).unwrap();
        let p = DirichletProblem::new(&g, |_| 0.0, RadonMeasure::zero(3), 0.125).unwrap();
        let (u, rep) = p.solve().unwrap();
        assert!(rep.converged);
        let (lo, hi) = u.min_max();
        assert!(lo.abs() < 1e-9 && hi.abs() < 1e-9);
    }

    #[test]
    fn solve_affine_boundary_returns_affine_field() {
        // affine functions are n-harmonic; the discrete minimizer agrees
        let g = Grid::ball(3, &[0.0; 3], 1.0, 0.125).unwrap();
        let affine = |x: &Point| 0.3 * x[0] - 0.7 * x[1] + 0.2;
        let p = DirichletProblem::new(&g, affine, RadonMeasure::zero(3), 0.125).unwrap();
        let (u, rep) = p.solve().unwrap();
        assert!(rep.converged);
        let mut worst: f64 = 0.0;
        for lin in g.active_cells() {
            worst = worst.max((u.values()[lin] - affine(&g.center_of(lin))).abs());
        }
        assert!(worst < 5e-6, "deviation from affine: {worst}");
    }

    #[test]
    fn maximum_principle_for_harmonic_solves() {
        let g = Grid::ball(2, &[0.0; 2], 1.0, 0.05).unwrap();
        let bdata = |x: &Point| math::sin(3.0 * x[0]) + 0.5 * x[1];
        let p = DirichletProblem::new(&g, bdata, RadonMeasure::zero(2), 0.05).unwrap();
        let (u, rep) = p.solve().unwrap();
        assert!(rep.converged);
        let mut blo = f64::INFINITY;
        let mut bhi = f64::NEG_INFINITY;
        for &(_, v) in u.ghost_trace() {
            blo = blo.min(v);
            bhi = bhi.max(v);
        }
        let (lo, hi) = u.min_max();
        let tol = 1e-6;
        assert!(lo >= blo - tol && hi <= bhi + tol, "[{lo},{hi}] vs [{blo},{bhi}]");
    }

    #[test]
    fn energy_trace_is_nonincreasing() {
        let g = Grid::ball(3, &[0.0; 3], 1.0, 0.2).unwrap();
        let mu = RadonMeasure::atom(3, &[0.0; 3], 4.0).unwrap();
        let p = DirichletProblem::new(&g, |_| 0.0, mu, 0.2).unwrap();
        let (_, rep) = p.solve().unwrap();
        for w in rep.energies.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn comparison_identical_fields() {
        let g = Grid::ball(2, &[0.0; 2], 1.0, 0.1).unwrap();
        let b = |x: &Point| x[0] + 1.0;
        let p = DirichletProblem::new(&g, b, RadonMeasure::zero(2), 0.1).unwrap();
        let (u, _) = p.solve().unwrap();
        let r = weak_comparison_check(&u, &u, 1e-12).unwrap();
        assert_eq!(r.fraction, 1.0);
    }

    #[test]
    fn blowdown_style_fn_fields_work() {
        let w = fn_field(3, |x: &Point| 2.0 * math::ln(1.0 / math::norm(x, 3)));
        assert_eq!(w.dim(), 3);
        let v = w.eval(&math::point_from(&[0.5, 0.0, 0.0]));
        assert!((v - 2.0 * math::ln(2.0)).abs() < 1e-12);
    }
}
