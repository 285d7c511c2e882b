//! Scalar and vector fields sampled on a grid, plus the `Field` abstraction
//! used by profile and blow-down machinery to accept either lattice data or
//! closed-form functions.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::grid::Grid;
use crate::math::{self, Point};

/// Anything that can be evaluated at a point of R^n.
pub trait Field: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &Point) -> f64;
    /// Whether `x` is inside the region where `eval` returns trusted values.
    fn contains(&self, _x: &Point) -> bool {
        true
    }
}

impl<T: Field + ?Sized> Field for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &Point) -> f64 {
        (**self).eval(x)
    }
    fn contains(&self, x: &Point) -> bool {
        (**self).contains(x)
    }
}

/// Closed-form field from a closure.
pub struct FnField<F: Fn(&Point) -> f64 + Sync> {
    n: usize,
    f: F,
}

pub fn fn_field<F: Fn(&Point) -> f64 + Sync>(n: usize, f: F) -> FnField<F> {
    FnField { n, f }
}

impl<F: Fn(&Point) -> f64 + Sync> Field for FnField<F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &Point) -> f64 {
        (self.f)(x)
    }
}

/// One real value per active cell; non-finite samples are flagged singular
/// and excluded from stencils and interpolation.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    singular: Vec<usize>,
    /// Dirichlet trace on the ghost layer, when the field came from a solve.
    ghost: Vec<(usize, f64)>,
}

impl ScalarField {
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&Point) -> f64) -> ScalarField {
        let mut values = vec![0.0; grid.len()];
        let mut singular = Vec::new();
        for lin in grid.active_cells() {
            let v = f(&grid.center_of(lin));
            if v.is_finite() {
                values[lin] = v;
            } else {
                singular.push(lin);
            }
        }
        ScalarField {
            grid: grid.clone(),
            values,
            singular,
            ghost: Vec::new(),
        }
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> ScalarField {
        Self::from_fn(grid, |_| c)
    }

    pub(crate) fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> ScalarField {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField {
            grid: grid.clone(),
            values,
            singular: Vec::new(),
            ghost: Vec::new(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn singular_cells(&self) -> &[usize] {
        &self.singular
    }

    pub fn mark_singular(&mut self, lin: usize) {
        if let Err(pos) = self.singular.binary_search(&lin) {
            self.singular.insert(pos, lin);
        }
    }

    pub(crate) fn set_singular(&mut self, mut cells: Vec<usize>) {
        cells.sort_unstable();
        cells.dedup();
        self.singular = cells;
    }

    pub fn is_singular(&self, lin: usize) -> bool {
        self.singular.binary_search(&lin).is_ok()
    }

    pub(crate) fn set_ghost(&mut self, ghost: Vec<(usize, f64)>) {
        self.ghost = ghost;
    }

    pub fn ghost_trace(&self) -> &[(usize, f64)] {
        &self.ghost
    }

    /// Trusted value at a lattice cell: active and non-singular, or ghost data.
    #[inline]
    pub fn value_at(&self, lin: usize) -> Option<f64> {
        if self.grid.is_active(lin) {
            if self.is_singular(lin) {
                None
            } else {
                Some(self.values[lin])
            }
        } else {
            self.ghost
                .binary_search_by(|probe| probe.0.cmp(&lin))
                .ok()
                .map(|i| self.ghost[i].1)
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for lin in self.grid.active_cells() {
            if self.is_singular(lin) {
                continue;
            }
            let v = self.values[lin];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Pointwise `a*self + b*other` on a shared grid.
    pub fn linear_combination(&self, a: f64, other: &ScalarField, b: f64) -> Result<ScalarField> {
        if self.grid.as_ref() != other.grid.as_ref() {
            invalid!("fields live on different grids");
        }
        let mut out = self.clone();
        for lin in self.grid.active_cells() {
            out.values[lin] = a * self.values[lin] + b * other.values[lin];
        }
        for &s in &other.singular {
            out.mark_singular(s);
        }
        out.ghost.clear();
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        let mut out = self.clone();
        for lin in self.grid.active_cells() {
            if !out.is_singular(lin) {
                out.values[lin] = f(out.values[lin]);
            }
        }
        out
    }
}

impl Field for ScalarField {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Multilinear interpolation from the 2^n surrounding cell centers.
    /// Corners without a trusted value drop out with weight renormalization.
    fn eval(&self, x: &Point) -> f64 {
        let n = self.grid.dim();
        let h = self.grid.spacing();
        let origin = self.grid.origin();
        let dims = self.grid.dims();
        let mut base = [0isize; 4];
        let mut frac = [0.0f64; 4];
        for d in 0..n {
            let t = (x[d] - origin[d]) / h - 0.5;
            let f = math::floor(t);
            base[d] = f as isize;
            frac[d] = t - f;
        }
        let mut acc = 0.0;
        let mut wsum = 0.0;
        let corners = 1usize << n;
        'corner: for c in 0..corners {
            let mut idx = [0usize; 4];
            let mut w = 1.0;
            for d in 0..n {
                let bit = (c >> d) & 1;
                let j = base[d] + bit as isize;
                if j < 0 || j >= dims[d] as isize {
                    continue 'corner;
                }
                idx[d] = j as usize;
                w *= if bit == 1 { frac[d] } else { 1.0 - frac[d] };
            }
            if let Some(v) = self.value_at(self.grid.lin_of(&idx)) {
                acc += w * v;
                wsum += w;
            }
        }
        if wsum > 0.0 {
            acc / wsum
        } else {
            f64::NAN
        }
    }

    fn contains(&self, x: &Point) -> bool {
        let n = self.grid.dim();
        let h = self.grid.spacing();
        let origin = self.grid.origin();
        let dims = self.grid.dims();
        let mut base = [0isize; 4];
        for d in 0..n {
            let t = (x[d] - origin[d]) / h - 0.5;
            base[d] = math::floor(t) as isize;
        }
        let corners = 1usize << n;
        for c in 0..corners {
            let mut idx = [0usize; 4];
            let mut ok = true;
            for d in 0..n {
                let j = base[d] + ((c >> d) & 1) as isize;
                if j < 0 || j >= dims[d] as isize {
                    ok = false;
                    break;
                }
                idx[d] = j as usize;
            }
            if !ok || self.value_at(self.grid.lin_of(&idx)).is_none() {
                return false;
            }
        }
        true
    }
}

/// One n-vector per cell, component-major storage.
#[derive(Debug, Clone)]
pub struct VectorField {
    grid: Arc<Grid>,
    comps: Vec<f64>,
    flagged: Vec<usize>,
}

impl VectorField {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    #[inline]
    pub fn at(&self, lin: usize) -> Point {
        let len = self.grid.len();
        let mut v = [0.0; 4];
        for d in 0..self.grid.dim() {
            v[d] = self.comps[d * len + lin];
        }
        v
    }

    /// Cells where the stencil was degenerate or touched a singular cell.
    pub fn flagged_cells(&self) -> &[usize] {
        &self.flagged
    }

    pub fn is_flagged(&self, lin: usize) -> bool {
        self.flagged.binary_search(&lin).is_ok()
    }

    /// Interpolated vector at a point (component-wise multilinear).
    pub fn eval(&self, x: &Point) -> Point {
        let len = self.grid.len();
        let n = self.grid.dim();
        let mut out = [0.0; 4];
        for d in 0..n {
            let comp = ComponentView {
                field: self,
                offset: d * len,
            };
            out[d] = comp.eval(x);
        }
        out
    }
}

struct ComponentView<'a> {
    field: &'a VectorField,
    offset: usize,
}

impl Field for ComponentView<'_> {
    fn dim(&self) -> usize {
        self.field.grid.dim()
    }
    fn eval(&self, x: &Point) -> f64 {
        // same multilinear rule as ScalarField, over active non-flagged cells
        let grid = &self.field.grid;
        let n = grid.dim();
        let h = grid.spacing();
        let origin = grid.origin();
        let dims = grid.dims();
        let mut base = [0isize; 4];
        let mut frac = [0.0f64; 4];
        for d in 0..n {
            let t = (x[d] - origin[d]) / h - 0.5;
            let f = math::floor(t);
            base[d] = f as isize;
            frac[d] = t - f;
        }
        let mut acc = 0.0;
        let mut wsum = 0.0;
        'corner: for c in 0..(1usize << n) {
            let mut idx = [0usize; 4];
            let mut w = 1.0;
            for d in 0..n {
                let bit = (c >> d) & 1;
                let j = base[d] + bit as isize;
                if j < 0 || j >= dims[d] as isize {
                    continue 'corner;
                }
                idx[d] = j as usize;
                w *= if bit == 1 { frac[d] } else { 1.0 - frac[d] };
            }
            let lin = grid.lin_of(&idx);
            if grid.is_active(lin) && !self.field.is_flagged(lin) {
                acc += w * self.field.comps[self.offset + lin];
                wsum += w;
            }
        }
        if wsum > 0.0 {
            acc / wsum
        } else {
            f64::NAN
        }
    }
}

/// Central differences in the interior, one-sided at domain boundaries.
/// Exact for affine fields; cells whose stencil touches a singular cell are
/// flagged in the result.
pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = f.grid().clone();
    let n = grid.dim();
    let h = grid.spacing();
    let len = grid.len();
    let mut comps = vec![0.0; n * len];
    let mut flagged = Vec::new();
    for lin in grid.active_cells() {
        if f.is_singular(lin) {
            flagged.push(lin);
            continue;
        }
        let v0 = f.values()[lin];
        let mut touched = false;
        for d in 0..n {
            let plus = grid.neighbor(lin, d, 1);
            let minus = grid.neighbor(lin, d, -1);
            touched |= plus.map(|p| f.is_singular(p)).unwrap_or(false)
                || minus.map(|m| f.is_singular(m)).unwrap_or(false);
            let vp = plus.and_then(|p| f.value_at(p));
            let vm = minus.and_then(|m| f.value_at(m));
            comps[d * len + lin] = match (vm, vp) {
                (Some(a), Some(b)) => (b - a) / (2.0 * h),
                (None, Some(b)) => (b - v0) / h,
                (Some(a), None) => (v0 - a) / h,
                (None, None) => {
                    touched = true;
                    0.0
                }
            };
        }
        if touched {
            flagged.push(lin);
        }
    }
    flagged.sort_unstable();
    flagged.dedup();
    VectorField {
        grid,
        comps,
        flagged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = Grid::boxed(3, &[0.0; 3], &[1.0; 3], 0.1).unwrap();
        let f = ScalarField::constant(&g, 4.5);
        let grad = gradient(&f);
        for lin in g.active_cells() {
            assert_eq!(grad.at(lin), [0.0; 4]);
        }
    }

    #[test]
    fn gradient_exact_for_affine() {
        let g = Grid::boxed(3, &[0.0; 3], &[1.0; 3], 0.125).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0]);
        let grad = gradient(&f);
        for lin in g.active_cells() {
            let v = grad.at(lin);
            assert!((v[0] - 1.0).abs() < 1e-12, "{v:?}");
            assert!(v[1].abs() < 1e-12 && v[2].abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_log_matches_symbolic() {
        // f = log(1/|x|) in n=3: |grad f| = 1/|x|, so 2.0 at |x| = 0.5
        let h = 0.02;
        let g = Grid::boxed(3, &[-1.0; 3], &[1.0; 3], h).unwrap();
        let f = ScalarField::from_fn(&g, |x| math::ln(1.0 / math::norm(x, 3)));
        let grad = gradient(&f);
        let x = [0.5, 0.0, 0.0, 0.0];
        let v = grad.eval(&x);
        let magnitude = math::norm(&v, 3);
        assert!(
            (magnitude - 2.0).abs() < 40.0 * h * h,
            "|grad| = {magnitude}"
        );
    }

    #[test]
    fn gradient_is_linear() {
        let g = Grid::boxed(2, &[0.0; 2], &[1.0; 2], 0.1).unwrap();
        let f1 = ScalarField::from_fn(&g, |x| x[0] * x[0] + x[1]);
        let f2 = ScalarField::from_fn(&g, |x| math::sin(3.0 * x[0]));
        let combined = f1.linear_combination(2.0, &f2, -0.5).unwrap();
        let ga = gradient(&combined);
        let g1 = gradient(&f1);
        let g2 = gradient(&f2);
        for lin in g.active_cells() {
            for d in 0..2 {
                let expect = 2.0 * g1.at(lin)[d] - 0.5 * g2.at(lin)[d];
                assert!((ga.at(lin)[d] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_cells_flagged_and_excluded() {
        let g = Grid::ball(2, &[0.0, 0.0], 1.0, 0.125).unwrap();
        let f = ScalarField::from_fn(&g, |x| math::ln(1.0 / math::norm(x, 2)));
        // the center cell evaluates to +inf and must have been auto-flagged
        let origin_cell = g.cell_of(&[0.0; 4]).unwrap();
        assert!(f.is_singular(origin_cell));
        let grad = gradient(&f);
        assert!(grad.is_flagged(origin_cell));
        // neighbors of the singular cell are flagged but still finite
        let nb = g.neighbor(origin_cell, 0, 1).unwrap();
        assert!(grad.is_flagged(nb));
        assert!(grad.at(nb)[0].is_finite());
    }

    #[test]
    fn interpolation_matches_at_centers() {
        let g = Grid::boxed(2, &[0.0; 2], &[1.0; 2], 0.25).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0] + 2.0 * x[1]);
        for lin in g.active_cells() {
            let c = g.center_of(lin);
            assert!((f.eval(&c) - f.values()[lin]).abs() < 1e-12);
        }
        // multilinear interpolation reproduces affine functions between centers
        let p = [0.4, 0.6, 0.0, 0.0];
        assert!((f.eval(&p) - 1.6).abs() < 1e-12);
    }
}
