//! Constrained minimizer for the regularized n-Dirichlet energy
//!
//!   J(u) = (1/n) sum_c h^n (q_c + eps^2)^{n/2}  -  sum_c u_c m_c,
//!
//! where q_c collects squared forward differences at cell c and m_c is the
//! lumped measure. Cells are free unknowns, fixed Dirichlet values (plates
//! and boundary rings), or outside. Minimization is damped inexact Newton
//! with a Jacobi-preconditioned conjugate-gradient inner solve, matrix-free;
//! nonlinear coefficients are frozen per Newton iteration so the CG loop is
//! pure linear algebra. The functional is strictly convex for eps > 0, so
//! descent with backtracking is globally convergent.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::math::{powf, sqrt};

/// Relative energy-decrease threshold for convergence.
pub const ENERGY_RTOL: f64 = 1e-10;
/// Residual threshold, relative to `1 + |J|`.
pub const RESIDUAL_RTOL: f64 = 1e-8;

const MAX_CG: usize = 700;
const MAX_BACKTRACK: usize = 55;

const OUT: i32 = -2;
const FIXED: i32 = -1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellState {
    Free,
    Fixed(f64),
    Out,
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub iterations: usize,
    pub final_energy: f64,
    pub residual_norm: f64,
    pub converged: bool,
    /// Energy after each accepted step; nonincreasing by construction.
    pub energies: Vec<f64>,
}

/// Frozen per-stencil nonlinear coefficients for one Newton iteration.
struct Coef {
    a: Vec<f64>,
    b: Vec<f64>,
    g: Vec<[f64; 4]>,
}

pub struct System {
    grid: Arc<Grid>,
    exponent: usize,
    pub eps: f64,
    /// -2 out, -1 fixed, otherwise the free-unknown index.
    code: Vec<i32>,
    fixed_values: Vec<f64>,
    free: Vec<usize>,
    /// Cells contributing stencil energy, with a bitmask of valid directions.
    stencils: Vec<(u32, u8)>,
    masses: Vec<f64>,
    strides: [isize; 4],
}

impl System {
    /// `states` must cover the lattice; `masses` is the lumped measure.
    pub fn new(
        grid: Arc<Grid>,
        exponent: usize,
        eps: f64,
        states: &[CellState],
        masses: Vec<f64>,
    ) -> Result<System> {
        if exponent != grid.dim() {
            invalid!("exponent {exponent} must match grid dimension {}", grid.dim());
        }
        let mut code = vec![OUT; grid.len()];
        let mut fixed_values = vec![0.0; grid.len()];
        let mut free = Vec::new();
        for (lin, s) in states.iter().enumerate() {
            match s {
                CellState::Free => {
                    code[lin] = free.len() as i32;
                    free.push(lin);
                }
                CellState::Fixed(v) => {
                    code[lin] = FIXED;
                    fixed_values[lin] = *v;
                }
                CellState::Out => {}
            }
        }
        if free.is_empty() {
            invalid!("no free unknowns");
        }
        let n = grid.dim();
        let mut strides = [0isize; 4];
        for d in 0..n {
            strides[d] = grid.strides()[d] as isize;
        }
        let mut stencils = Vec::new();
        for (lin, &c) in code.iter().enumerate() {
            if c == OUT {
                continue;
            }
            let mut mask = 0u8;
            for d in 0..n {
                if let Some(nb) = grid.neighbor(lin, d, 1) {
                    if code[nb] != OUT {
                        mask |= 1 << d;
                    }
                }
            }
            if mask != 0 {
                stencils.push((lin as u32, mask));
            }
        }
        Ok(System {
            grid,
            exponent,
            eps,
            code,
            fixed_values,
            free,
            stencils,
            masses,
            strides,
        })
    }

    /// Full-lattice value vector with fixed data in place and zero elsewhere.
    pub fn initial_values(&self) -> Vec<f64> {
        self.fixed_values.clone()
    }

    /// (q + eps^2)^{n/2} without powf for the supported exponents.
    #[inline]
    fn phi(&self, s: f64) -> f64 {
        match self.exponent {
            2 => s,
            3 => s * sqrt(s),
            4 => s * s,
            _ => powf(s, self.exponent as f64 / 2.0),
        }
    }

    /// phi'(s)/(n/2) = s^{(n-2)/2} and the second-derivative factor
    /// (n-2) s^{(n-4)/2}, both cheap for the supported exponents.
    #[inline]
    fn coeffs(&self, s: f64) -> (f64, f64) {
        match self.exponent {
            2 => (1.0, 0.0),
            3 => {
                let r = sqrt(s);
                (r, 1.0 / r)
            }
            4 => (s, 2.0),
            _ => {
                let n = self.exponent as f64;
                (powf(s, (n - 2.0) / 2.0), (n - 2.0) * powf(s, (n - 4.0) / 2.0))
            }
        }
    }

    fn energy(&self, vals: &[f64]) -> f64 {
        let n = self.exponent as f64;
        let h = self.grid.spacing();
        let hn = self.grid.cell_volume();
        let e2 = self.eps * self.eps;
        let nd = self.grid.dim();
        let mut total = 0.0;
        for &(c, mask) in &self.stencils {
            let c = c as usize;
            let mut q = 0.0;
            for d in 0..nd {
                if mask & (1 << d) != 0 {
                    let nb = (c as isize + self.strides[d]) as usize;
                    let g = (vals[nb] - vals[c]) / h;
                    q += g * g;
                }
            }
            total += self.phi(q + e2);
        }
        hn * total / n - self.linear_term(vals)
    }

    /// One pass computing energy, gradient, and frozen Hessian coefficients.
    fn prepare(&self, vals: &[f64], grad: &mut [f64]) -> (f64, Coef) {
        let nd = self.grid.dim();
        let n = self.exponent as f64;
        let h = self.grid.spacing();
        let hn = self.grid.cell_volume();
        let e2 = self.eps * self.eps;
        let m = self.stencils.len();
        let mut coef = Coef {
            a: vec![0.0; m],
            b: vec![0.0; m],
            g: vec![[0.0; 4]; m],
        };
        grad.fill(0.0);
        let mut total = 0.0;
        for (k, &(c, mask)) in self.stencils.iter().enumerate() {
            let c = c as usize;
            let mut g = [0.0f64; 4];
            let mut q = 0.0;
            for d in 0..nd {
                if mask & (1 << d) != 0 {
                    let nb = (c as isize + self.strides[d]) as usize;
                    let gd = (vals[nb] - vals[c]) / h;
                    g[d] = gd;
                    q += gd * gd;
                }
            }
            let s = q + e2;
            let (a, b) = self.coeffs(s);
            total += a * s; // (q+e2)^{n/2}
            coef.a[k] = a;
            coef.b[k] = b;
            coef.g[k] = g;
            for d in 0..nd {
                if mask & (1 << d) != 0 {
                    let nb = (c as isize + self.strides[d]) as usize;
                    let w = hn * a * g[d] / h;
                    let jc = self.code[c];
                    if jc >= 0 {
                        grad[jc as usize] -= w;
                    }
                    let jn = self.code[nb];
                    if jn >= 0 {
                        grad[jn as usize] += w;
                    }
                }
            }
        }
        for (j, &lin) in self.free.iter().enumerate() {
            grad[j] -= self.masses[lin];
        }
        (hn * total / n - self.linear_term(vals), coef)
    }

    fn linear_term(&self, vals: &[f64]) -> f64 {
        let mut linear = 0.0;
        for (lin, m) in self.masses.iter().enumerate() {
            if *m != 0.0 && self.code[lin] != OUT {
                linear += vals[lin] * m;
            }
        }
        linear
    }

    /// Hessian-vector product with frozen coefficients; quadratic mode uses
    /// a = 1, b = 0 (the 2-Laplacian, used for warm starts).
    fn hess_vec(&self, coef: Option<&Coef>, v: &[f64], out: &mut [f64]) {
        let nd = self.grid.dim();
        let h = self.grid.spacing();
        let hn = self.grid.cell_volume();
        out.fill(0.0);
        for (k, &(c, mask)) in self.stencils.iter().enumerate() {
            let c = c as usize;
            let jc = self.code[c];
            let vc = if jc >= 0 { v[jc as usize] } else { 0.0 };
            let mut gv = [0.0f64; 4];
            let mut gamma = 0.0;
            let mut codes = [OUT; 4];
            for d in 0..nd {
                if mask & (1 << d) != 0 {
                    let nb = (c as isize + self.strides[d]) as usize;
                    let jn = self.code[nb];
                    codes[d] = jn;
                    let vn = if jn >= 0 { v[jn as usize] } else { 0.0 };
                    gv[d] = (vn - vc) / h;
                }
            }
            let (a, b) = match coef {
                Some(cf) => {
                    let g = &cf.g[k];
                    for d in 0..nd {
                        if mask & (1 << d) != 0 {
                            gamma += g[d] * gv[d];
                        }
                    }
                    (cf.a[k], cf.b[k])
                }
                None => (1.0, 0.0),
            };
            for d in 0..nd {
                if mask & (1 << d) != 0 {
                    let gcomp = match coef {
                        Some(cf) => cf.g[k][d],
                        None => 0.0,
                    };
                    let w = hn * (a * gv[d] + b * gamma * gcomp) / h;
                    if jc >= 0 {
                        out[jc as usize] -= w;
                    }
                    let jn = codes[d];
                    if jn >= 0 {
                        out[jn as usize] += w;
                    }
                }
            }
        }
    }

    fn hess_diag(&self, coef: Option<&Coef>, diag: &mut [f64]) {
        let nd = self.grid.dim();
        let h = self.grid.spacing();
        let hn = self.grid.cell_volume();
        diag.fill(0.0);
        for (k, &(c, mask)) in self.stencils.iter().enumerate() {
            let c = c as usize;
            let (a, b, g) = match coef {
                Some(cf) => (cf.a[k], cf.b[k], cf.g[k]),
                None => (1.0, 0.0, [0.0; 4]),
            };
            for d in 0..nd {
                if mask & (1 << d) != 0 {
                    let nb = (c as isize + self.strides[d]) as usize;
                    let w = hn * (a + b * g[d] * g[d]) / (h * h);
                    let jc = self.code[c];
                    if jc >= 0 {
                        diag[jc as usize] += w;
                    }
                    let jn = self.code[nb];
                    if jn >= 0 {
                        diag[jn as usize] += w;
                    }
                }
            }
        }
        for d in diag.iter_mut() {
            if *d <= 0.0 || !d.is_finite() {
                *d = 1.0;
            }
        }
    }

    /// Jacobi-preconditioned CG on H p = -g with relative tolerance `tol`.
    fn cg(&self, coef: Option<&Coef>, grad: &[f64], tol: f64) -> Vec<f64> {
        let m = self.free.len();
        let mut diag = vec![0.0; m];
        self.hess_diag(coef, &mut diag);
        let mut p = vec![0.0; m];
        let mut r: Vec<f64> = grad.iter().map(|g| -g).collect();
        let r0 = sqrt(r.iter().map(|x| x * x).sum());
        if r0 == 0.0 {
            return p;
        }
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
        let mut dir = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut hd = vec![0.0; m];
        for _ in 0..MAX_CG.min(4 * m) {
            self.hess_vec(coef, &dir, &mut hd);
            let dhd: f64 = dir.iter().zip(&hd).map(|(a, b)| a * b).sum();
            if dhd <= 0.0 || !dhd.is_finite() {
                break;
            }
            let alpha = rz / dhd;
            for i in 0..m {
                p[i] += alpha * dir[i];
                r[i] -= alpha * hd[i];
            }
            let rn: f64 = sqrt(r.iter().map(|x| x * x).sum());
            if rn <= tol * r0 {
                break;
            }
            for i in 0..m {
                z[i] = r[i] / diag[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..m {
                dir[i] = z[i] + beta * dir[i];
            }
        }
        p
    }

    fn apply_step(&self, vals: &mut [f64], base: &[f64], p: &[f64], t: f64) {
        for (j, &lin) in self.free.iter().enumerate() {
            vals[lin] = base[lin] + t * p[j];
        }
    }

    /// Quadratic-energy gradient (2-Laplacian with the same data and measure).
    fn gradient_quadratic(&self, vals: &[f64], grad: &mut [f64]) {
        let nd = self.grid.dim();
        let h = self.grid.spacing();
        let hn = self.grid.cell_volume();
        grad.fill(0.0);
        for &(c, mask) in &self.stencils {
            let c = c as usize;
            for d in 0..nd {
                if mask & (1 << d) != 0 {
                    let nb = (c as isize + self.strides[d]) as usize;
                    let gd = (vals[nb] - vals[c]) / h;
                    let w = hn * gd / h;
                    let jc = self.code[c];
                    if jc >= 0 {
                        grad[jc as usize] -= w;
                    }
                    let jn = self.code[nb];
                    if jn >= 0 {
                        grad[jn as usize] += w;
                    }
                }
            }
        }
        for (j, &lin) in self.free.iter().enumerate() {
            grad[j] -= self.masses[lin];
        }
    }

    /// Minimize J in place; eps continuation is handled by the caller.
    pub fn minimize(&self, vals: &mut Vec<f64>, max_newton: usize) -> SolverReport {
        let m = self.free.len();
        let mut grad = vec![0.0; m];
        let mut energy = self.energy(vals);
        let mut energies = vec![energy];
        let mut residual;
        let mut converged = false;
        let mut iterations = 0;

        // Warm start: one exact quadratic solve when the energy is nonlinear.
        if self.exponent > 2 {
            self.gradient_quadratic(vals, &mut grad);
            let p = self.cg(None, &grad, 1e-8);
            let base = vals.clone();
            let mut t = 1.0;
            let mut taken = false;
            for _ in 0..MAX_BACKTRACK {
                self.apply_step(vals, &base, &p, t);
                let e = self.energy(vals);
                if e.is_finite() && e <= energy {
                    energy = e;
                    energies.push(e);
                    taken = true;
                    break;
                }
                t *= 0.5;
            }
            if !taken {
                vals.copy_from_slice(&base);
            }
        }

        let mut res0 = f64::NAN;
        for it in 0..max_newton {
            iterations = it + 1;
            let (e, coef) = self.prepare(vals, &mut grad);
            energy = e;
            residual = sqrt(grad.iter().map(|g| g * g).sum());
            if res0.is_nan() {
                res0 = residual.max(1e-300);
            }
            let res_ok = residual <= RESIDUAL_RTOL * (1.0 + energy.abs());
            if res_ok {
                let last_drop = if energies.len() >= 2 {
                    energies[energies.len() - 2] - *energies.last().unwrap()
                } else {
                    f64::INFINITY
                };
                if last_drop.abs() <= ENERGY_RTOL * (1.0 + energy.abs()) || it > 0 {
                    converged = true;
                    break;
                }
            }
            // inexact Newton: loose CG far from the solution, tight near it
            let cg_tol = (0.05 * sqrt(residual / res0)).clamp(1e-7, 0.05);
            let mut p = self.cg(Some(&coef), &grad, cg_tol);
            let mut slope: f64 = grad.iter().zip(&p).map(|(g, p)| g * p).sum();
            if !(slope < 0.0) {
                let mut diag = vec![0.0; m];
                self.hess_diag(Some(&coef), &mut diag);
                p = grad.iter().zip(&diag).map(|(g, d)| -g / d).collect();
                slope = grad.iter().zip(&p).map(|(g, p)| g * p).sum();
                if !(slope < 0.0) {
                    converged = residual <= RESIDUAL_RTOL * (1.0 + energy.abs());
                    break;
                }
            }
            let base = vals.clone();
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..MAX_BACKTRACK {
                self.apply_step(vals, &base, &p, t);
                let e = self.energy(vals);
                if e.is_finite() && e <= energy + 1e-4 * t * slope {
                    energy = e;
                    energies.push(e);
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                vals.copy_from_slice(&base);
                converged = residual <= 100.0 * RESIDUAL_RTOL * (1.0 + energy.abs());
                break;
            }
        }
        self.gradient_finalize(vals, &mut grad);
        residual = sqrt(grad.iter().map(|g| g * g).sum());
        if residual <= RESIDUAL_RTOL * (1.0 + energy.abs()) {
            converged = true;
        }
        SolverReport {
            iterations,
            final_energy: energy,
            residual_norm: residual,
            converged,
            energies,
        }
    }

    fn gradient_finalize(&self, vals: &[f64], grad: &mut [f64]) {
        let nd = self.grid.dim();
        let h = self.grid.spacing();
        let hn = self.grid.cell_volume();
        let e2 = self.eps * self.eps;
        grad.fill(0.0);
        for &(c, mask) in &self.stencils {
            let c = c as usize;
            let mut g = [0.0f64; 4];
            let mut q = 0.0;
            for d in 0..nd {
                if mask & (1 << d) != 0 {
                    let nb = (c as isize + self.strides[d]) as usize;
                    let gd = (vals[nb] - vals[c]) / h;
                    g[d] = gd;
                    q += gd * gd;
                }
            }
            let (a, _) = self.coeffs(q + e2);
            for d in 0..nd {
                if mask & (1 << d) != 0 {
                    let nb = (c as isize + self.strides[d]) as usize;
                    let w = hn * a * g[d] / h;
                    let jc = self.code[c];
                    if jc >= 0 {
                        grad[jc as usize] -= w;
                    }
                    let jn = self.code[nb];
                    if jn >= 0 {
                        grad[jn as usize] += w;
                    }
                }
            }
        }
        for (j, &lin) in self.free.iter().enumerate() {
            grad[j] -= self.masses[lin];
        }
    }

    /// Regularized capacity integrand summed over stencil cells:
    /// h^n [ (q + eps^2)^{n/2} - eps^n ].
    pub fn capacity_value(&self, vals: &[f64]) -> f64 {
        let nd = self.grid.dim();
        let h = self.grid.spacing();
        let hn = self.grid.cell_volume();
        let e2 = self.eps * self.eps;
        let background = self.phi(e2);
        let mut total = 0.0;
        for &(c, mask) in &self.stencils {
            let c = c as usize;
            let mut q = 0.0;
            for d in 0..nd {
                if mask & (1 << d) != 0 {
                    let nb = (c as isize + self.strides[d]) as usize;
                    let g = (vals[nb] - vals[c]) / h;
                    q += g * g;
                }
            }
            total += self.phi(q + e2) - background;
        }
        hn * total
    }

    pub fn into_field(&self, vals: Vec<f64>) -> ScalarField {
        let mut field = ScalarField::from_values(&self.grid, vals);
        let mut ghost = Vec::new();
        for (lin, &c) in self.code.iter().enumerate() {
            if c == FIXED && !self.grid.is_active(lin) {
                ghost.push((lin, self.fixed_values[lin]));
            }
        }
        ghost.sort_unstable_by_key(|e| e.0);
        field.set_ghost(ghost);
        field
    }
}
