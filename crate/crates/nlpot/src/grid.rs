//! Structured axis-aligned grids over boxes, balls and annuli.
//!
//! A grid is a bounding lattice of cubic cells plus an activity mask: a cell
//! belongs to the domain when its center lies in the region. Cells are closed
//! on the lower face and open on the upper one, so every point belongs to
//! exactly one cell.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math::{self, Point};

/// Supported dimensions.
pub const MAX_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// The whole bounding lattice.
    Box,
    /// `r_in <= |x - center| < r_out`; `r_in = 0` is a ball.
    Annulus { center: Point, r_in: f64, r_out: f64 },
}

impl Region {
    pub fn contains(&self, x: &Point, n: usize) -> bool {
        match self {
            Region::Box => true,
            Region::Annulus { center, r_in, r_out } => {
                let d = math::dist(x, center, n);
                *r_in <= d && d < *r_out
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    n: usize,
    h: f64,
    origin: Point,
    dims: [usize; MAX_DIM],
    strides: [usize; MAX_DIM],
    region: Region,
    active: Vec<bool>,
    active_count: usize,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.h == other.h
            && self.origin == other.origin
            && self.dims == other.dims
            && self.region == other.region
    }
}

fn check_dim(n: usize) -> Result<()> {
    if !(2..=MAX_DIM).contains(&n) {
        invalid!("dimension must be 2, 3 or 4, got {n}");
    }
    Ok(())
}

impl Grid {
    fn build(n: usize, h: f64, origin: Point, dims: [usize; MAX_DIM], region: Region) -> Result<Arc<Grid>> {
        check_dim(n)?;
        if !(h > 0.0) || !h.is_finite() {
            invalid!("grid spacing must be positive and finite, got {h}");
        }
        let mut strides = [0usize; MAX_DIM];
        let mut len = 1usize;
        for d in (0..n).rev() {
            if dims[d] == 0 {
                invalid!("grid extent along axis {d} is zero");
            }
            strides[d] = len;
            len = len
                .checked_mul(dims[d])
                .ok_or_else(|| Error::Invalid("grid too large".into()))?;
        }
        let mut grid = Grid {
            n,
            h,
            origin,
            dims,
            strides,
            region,
            active: Vec::new(),
            active_count: 0,
        };
        let mut active = Vec::with_capacity(len);
        let mut count = 0usize;
        for lin in 0..len {
            let c = grid.center_of(lin);
            let a = grid.region.contains(&c, n);
            count += a as usize;
            active.push(a);
        }
        if count == 0 {
            invalid!("region contains no cell centers at spacing {h}");
        }
        grid.active = active;
        grid.active_count = count;
        Ok(Arc::new(grid))
    }

    /// Box `[lo, hi)` per axis, every cell active.
    pub fn boxed(n: usize, lo: &[f64], hi: &[f64], h: f64) -> Result<Arc<Grid>> {
        check_dim(n)?;
        if lo.len() != n || hi.len() != n {
            invalid!("corner arity does not match dimension {n}");
        }
        let mut dims = [1usize; MAX_DIM];
        for d in 0..n {
            if !(hi[d] > lo[d]) {
                invalid!("box corner order violated on axis {d}");
            }
            dims[d] = math::ceil((hi[d] - lo[d]) / h).max(1.0) as usize;
        }
        Self::build(n, h, math::point_from(lo), dims, Region::Box)
    }

    /// Ball of radius `r` with `center` placed exactly on a cell center.
    pub fn ball(n: usize, center: &[f64], r: f64, h: f64) -> Result<Arc<Grid>> {
        Self::annulus(n, center, 0.0, r, h)
    }

    /// Annulus `r_in <= |x-center| < r_out`, center aligned to a cell center,
    /// bounding lattice padded by two cells so ghost layers exist.
    pub fn annulus(n: usize, center: &[f64], r_in: f64, r_out: f64, h: f64) -> Result<Arc<Grid>> {
        check_dim(n)?;
        if center.len() != n {
            invalid!("center arity does not match dimension {n}");
        }
        if !(0.0 <= r_in && r_in < r_out) {
            invalid!("annulus radii must satisfy 0 <= r_in < r_out, got ({r_in}, {r_out})");
        }
        let k = math::ceil(r_out / h) as usize + 2;
        let mut dims = [1usize; MAX_DIM];
        let mut origin = [0.0; MAX_DIM];
        for d in 0..n {
            dims[d] = 2 * k + 1;
            origin[d] = center[d] - (k as f64 + 0.5) * h;
        }
        let region = Region::Annulus {
            center: math::point_from(center),
            r_in,
            r_out,
        };
        Self::build(n, h, origin, dims, region)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims[..self.n]
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides[..self.n]
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.n]
    }

    /// Total cells in the bounding lattice.
    pub fn len(&self) -> usize {
        self.strides[0] * self.dims[0]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn active_count(&self) -> usize {
        self.active_count
    }

    /// Measure of one cell.
    pub fn cell_volume(&self) -> f64 {
        let mut v = 1.0;
        for _ in 0..self.n {
            v *= self.h;
        }
        v
    }

    /// Measure of the active region (cell-counting).
    pub fn volume(&self) -> f64 {
        self.active_count as f64 * self.cell_volume()
    }

    #[inline]
    pub fn is_active(&self, lin: usize) -> bool {
        self.active[lin]
    }

    #[inline]
    pub fn index_of(&self, mut lin: usize) -> [usize; MAX_DIM] {
        let mut idx = [0usize; MAX_DIM];
        for d in 0..self.n {
            idx[d] = lin / self.strides[d];
            lin %= self.strides[d];
        }
        idx
    }

    #[inline]
    pub fn lin_of(&self, idx: &[usize; MAX_DIM]) -> usize {
        let mut lin = 0;
        for d in 0..self.n {
            lin += idx[d] * self.strides[d];
        }
        lin
    }

    /// Bit-exact cell center: `origin + (i + 1/2) h` per axis.
    #[inline]
    pub fn center_of(&self, lin: usize) -> Point {
        let idx = self.index_of(lin);
        let mut p = [0.0; MAX_DIM];
        for d in 0..self.n {
            p[d] = self.origin[d] + (idx[d] as f64 + 0.5) * self.h;
        }
        p
    }

    /// Cell holding `x` (lower-closed, upper-open), if inside the lattice.
    pub fn cell_of(&self, x: &Point) -> Option<usize> {
        let mut idx = [0usize; MAX_DIM];
        for d in 0..self.n {
            let t = math::floor((x[d] - self.origin[d]) / self.h);
            if t < 0.0 || t >= self.dims[d] as f64 {
                return None;
            }
            idx[d] = t as usize;
        }
        Some(self.lin_of(&idx))
    }

    /// Face neighbor along axis `d` (`step` is -1 or +1).
    #[inline]
    pub fn neighbor(&self, lin: usize, d: usize, step: isize) -> Option<usize> {
        let i = (lin / self.strides[d]) % self.dims[d];
        let j = i as isize + step;
        if j < 0 || j >= self.dims[d] as isize {
            return None;
        }
        Some((lin as isize + step * self.strides[d] as isize) as usize)
    }

    /// Active cell with every face neighbor active.
    pub fn is_interior(&self, lin: usize) -> bool {
        if !self.active[lin] {
            return false;
        }
        for d in 0..self.n {
            for s in [-1isize, 1] {
                match self.neighbor(lin, d, s) {
                    Some(nb) if self.active[nb] => {}
                    _ => return false,
                }
            }
        }
        true
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        0..self.len()
    }

    pub fn active_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&l| self.active[l])
    }

    /// Inactive lattice cells face-adjacent to an active one (the ghost layer
    /// carrying Dirichlet data).
    pub fn ghost_cells(&self) -> Vec<usize> {
        self.ghost_layers(1)
    }

    /// Inactive cells within `depth` face steps of the active region.
    ///
    /// Dirichlet data is imposed two layers deep so that every stencil seen
    /// by a free unknown carries a full-rank gradient estimate; one layer
    /// leaves the nonlinear coefficient deficient at the boundary.
    pub fn ghost_layers(&self, depth: usize) -> Vec<usize> {
        let mut frontier: Vec<usize> = self.active_cells().collect();
        let mut seen = self.active.clone();
        let mut out = Vec::new();
        for _ in 0..depth {
            let mut next = Vec::new();
            for &lin in &frontier {
                for d in 0..self.n {
                    for s in [-1isize, 1] {
                        if let Some(nb) = self.neighbor(lin, d, s) {
                            if !seen[nb] {
                                seen[nb] = true;
                                next.push(nb);
                                out.push(nb);
                            }
                        }
                    }
                }
            }
            frontier = next;
        }
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_are_reproducible() {
        let g = Grid::ball(3, &[0.0; 3], 1.0, 0.25).unwrap();
        let c = g.cell_of(&[0.0, 0.0, 0.0, 0.0]).unwrap();
        let p = g.center_of(c);
        assert_eq!(&p[..3], &[0.0, 0.0, 0.0]);
        // lower-closed, upper-open: a face point maps to the upper cell
        let q = g.center_of(g.cell_of(&[0.125, 0.0, 0.0, 0.0]).unwrap());
        assert_eq!(q[0], 0.25);
    }

    #[test]
    fn annulus_membership() {
        let g = Grid::annulus(2, &[0.0, 0.0], 0.5, 1.0, 0.1).unwrap();
        for lin in g.active_cells() {
            let d = math::norm(&g.center_of(lin), 2);
            assert!((0.5..1.0).contains(&d));
        }
        assert!(g.active_count() > 0);
    }

    #[test]
    fn bad_inputs_rejected() {
        assert!(Grid::ball(5, &[0.0; 5], 1.0, 0.1).is_err());
        assert!(Grid::ball(3, &[0.0; 3], 1.0, -0.1).is_err());
        assert!(Grid::annulus(2, &[0.0, 0.0], 1.0, 0.5, 0.1).is_err());
    }

    #[test]
    fn ball_volume_approximates_continuum() {
        let g = Grid::ball(3, &[0.0; 3], 1.0, 0.05).unwrap();
        let v = g.volume();
        assert!((v - math::ball_volume(3)).abs() / math::ball_volume(3) < 0.02);
    }
}
