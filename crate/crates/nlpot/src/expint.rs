//! Exponential integrability of the Wolff potential of an L^1 density: the
//! left side int_Omega exp(n(1-delta) W(x,D)/||f||^{1/(n-1)}) dx stays finite
//! with a right side blowing up only like delta^{-(n+1)}, uniformly under
//! concentration of the density. Atoms are excluded: a point mass makes the
//! potential infinite at a point, which is outside these hypotheses.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::field::ScalarField;
use crate::math::{self};
use crate::measure::RadonMeasure;
use crate::wolff::wolff_value;

/// A bounded domain (the density's grid), the density, and the shape
/// parameter delta.
pub struct BMProblem {
    pub domain: BMDomain,
    pub delta: f64,
}

impl BMProblem {
    pub fn new(density: ScalarField, delta: f64) -> Result<BMProblem> {
        if !(delta > 0.0 && delta < 1.0) {
            invalid!("delta must lie in (0, 1), got {delta}");
        }
        let domain = BMDomain::prepare(density)?;
        if domain.l1_norm <= 0.0 {
            invalid!("the density must carry positive mass");
        }
        Ok(BMProblem { domain, delta })
    }

    pub fn lhs(&self) -> f64 {
        self.domain.lhs(self.delta)
    }

    pub fn rhs(&self, c_n: f64) -> Result<f64> {
        bm_rhs(
            self.domain.dim(),
            self.domain.diameter,
            self.domain.volume,
            self.delta,
            c_n,
        )
    }
}

/// Per-cell Wolff potentials of the induced measure, cached once; the delta
/// sweep then costs one exponential per cell.
pub struct BMDomain {
    density: ScalarField,
    wolff: Vec<f64>,
    pub l1_norm: f64,
    pub volume: f64,
    pub diameter: f64,
}

impl BMDomain {
    pub fn prepare(density: ScalarField) -> Result<BMDomain> {
        let grid = density.grid().clone();
        let n = grid.dim();
        for lin in grid.active_cells() {
            if !density.is_singular(lin) && density.values()[lin] < 0.0 {
                invalid!("density must be nonnegative");
            }
        }
        let volume = grid.volume();
        let diameter = farthest_pair(&grid);
        let mu = RadonMeasure::from_density(density.clone())?;
        let l1_norm = mu.total_mass();
        let mut wolff = alloc::vec![0.0; grid.len()];
        if l1_norm > 0.0 {
            for lin in grid.active_cells() {
                let x = grid.center_of(lin);
                wolff[lin] = wolff_value(&mu, &x, diameter)?;
            }
        }
        let _ = n;
        Ok(BMDomain {
            density,
            wolff,
            l1_norm,
            volume,
            diameter,
        })
    }

    pub fn dim(&self) -> usize {
        self.density.grid().dim()
    }

    /// Cell-sum quadrature of exp(n(1-delta) W(x,D) / ||f||^{1/(n-1)}).
    /// The vanishing-mass limit degrades to exp(0) and returns |Omega|.
    pub fn lhs(&self, delta: f64) -> f64 {
        let grid = self.density.grid();
        let n = grid.dim() as f64;
        let hv = grid.cell_volume();
        let scale = if self.l1_norm > 0.0 {
            n * (1.0 - delta) / math::powf(self.l1_norm, 1.0 / (n - 1.0))
        } else {
            0.0
        };
        let mut total = 0.0;
        for lin in grid.active_cells() {
            total += math::exp(scale * self.wolff[lin]);
        }
        hv * total
    }

    pub fn wolff_values(&self) -> &[f64] {
        &self.wolff
    }
}

/// Farthest active-cell pair; the search runs over boundary cells only.
fn farthest_pair(grid: &crate::grid::Grid) -> f64 {
    let n = grid.dim();
    let boundary: Vec<[f64; 4]> = grid
        .active_cells()
        .filter(|&lin| !grid.is_interior(lin))
        .map(|lin| grid.center_of(lin))
        .collect();
    let mut best: f64 = 0.0;
    for (k, a) in boundary.iter().enumerate() {
        for b in &boundary[k + 1..] {
            best = best.max(math::dist(a, b, n));
        }
    }
    best
}

/// c(n) 2^{2n+1} |B(0,D)| / delta^{n+1} + 2^n |Omega|.
pub fn bm_rhs(n: usize, diameter: f64, volume: f64, delta: f64, c_n: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        invalid!("delta must lie in (0, 1), got {delta}");
    }
    if !(c_n > 0.0) {
        invalid!("the dimensional constant must be positive");
    }
    let ball = math::ball_volume(n) * math::powf(diameter, n as f64);
    Ok(c_n * math::pow2(2 * n as i32 + 1) * ball / math::powf(delta, n as f64 + 1.0)
        + math::pow2(n as i32) * volume)
}

#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub member: usize,
    pub delta: f64,
    pub lhs: f64,
    /// lhs * delta^{n+1}, the quantity the right side allows to stay bounded.
    pub envelope: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Worst max/min ratio of LHS over the family at a common delta: the
    /// uniformity-under-concentration observable.
    pub family_ratio_max: f64,
    pub all_finite: bool,
    /// Smallest c(n) making the right side dominate across the sweep.
    pub fitted_c: f64,
}

/// Sweep a family of unit-mass densities over a delta grid.
pub fn bm_sweep(members: &[&ScalarField], deltas: &[f64]) -> Result<SweepReport> {
    if members.is_empty() || deltas.is_empty() {
        invalid!("sweep needs at least one density and one delta");
    }
    let mut rows = Vec::new();
    let mut all_finite = true;
    let mut fitted_c: f64 = 0.0;
    for (k, density) in members.iter().enumerate() {
        let domain = BMDomain::prepare((*density).clone())?;
        let n = domain.dim();
        let ball = math::ball_volume(n) * math::powf(domain.diameter, n as f64);
        for &delta in deltas {
            if !(delta > 0.0 && delta < 1.0) {
                invalid!("delta must lie in (0, 1), got {delta}");
            }
            let lhs = domain.lhs(delta);
            all_finite &= lhs.is_finite();
            let envelope = lhs * math::powf(delta, n as f64 + 1.0);
            // smallest c(n) with rhs >= lhs at this (f, delta)
            let need = (lhs - math::pow2(n as i32) * domain.volume)
                * math::powf(delta, n as f64 + 1.0)
                / (math::pow2(2 * n as i32 + 1) * ball);
            fitted_c = fitted_c.max(need.max(0.0));
            rows.push(SweepRow {
                member: k,
                delta,
                lhs,
                envelope,
            });
        }
    }
    let mut family_ratio_max: f64 = 1.0;
    for &delta in deltas {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in rows.iter().filter(|r| r.delta == delta) {
            lo = lo.min(row.lhs);
            hi = hi.max(row.lhs);
        }
        if lo > 0.0 && lo.is_finite() {
            family_ratio_max = family_ratio_max.max(hi / lo);
        }
    }
    Ok(SweepReport {
        rows,
        family_ratio_max,
        all_finite,
        fitted_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn unit_bump(n: usize, center: &[f64], radius: f64, h: f64, total: f64) -> ScalarField {
        let g = Grid::ball(n, &[0.0; 4][..n], 1.0, h).unwrap();
        let count = g
            .active_cells()
            .filter(|&l| math::dist(&g.center_of(l), &math::point_from(center), n) <= radius)
            .count();
        let rho = total / (count as f64 * g.cell_volume());
        ScalarField::from_fn(&g, |x| {
            if math::dist(x, &math::point_from(center), n) <= radius {
                rho
            } else {
                0.0
            }
        })
    }

    #[test]
    fn zero_mass_guard_returns_volume() {
        let g = Grid::ball(3, &[0.0; 3], 1.0, 0.1).unwrap();
        let zero = ScalarField::constant(&g, 0.0);
        let domain = BMDomain::prepare(zero).unwrap();
        let lhs = domain.lhs(0.5);
        assert!((lhs - g.volume()).abs() < 1e-12);
        // but the problem type enforces positive mass
        let zero = ScalarField::constant(&g, 0.0);
        assert!(BMProblem::new(zero, 0.5).is_err());
    }

    #[test]
    fn rhs_formula_arithmetic() {
        // delta -> 1: first term approaches c(n) 2^{2n+1} |B(0,D)|
        let n = 3;
        let d = 2.0;
        let vol = math::ball_volume(3);
        let near_one = bm_rhs(n, d, vol, 0.999999, 1.0).unwrap();
        let limit = math::pow2(7) * math::ball_volume(3) * 8.0 + 8.0 * vol;
        assert!((near_one - limit).abs() / limit < 1e-4, "{near_one} vs {limit}");
        // doubling D multiplies the first term by 2^n
        let a = bm_rhs(n, 1.0, vol, 0.5, 1.0).unwrap() - 8.0 * vol;
        let b = bm_rhs(n, 2.0, vol, 0.5, 1.0).unwrap() - 8.0 * vol;
        assert!((b / a - 8.0).abs() < 1e-9);
        assert!(bm_rhs(n, d, vol, 1.5, 1.0).is_err());
    }

    #[test]
    fn lhs_finite_monotone_in_delta_and_normalization_invariant() {
        let n = 3;
        let h = 1.0 / 8.0;
        let f = unit_bump(n, &[0.0; 3], 0.5, h, 1.0);
        let domain = BMDomain::prepare(f.clone()).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..=9 {
            let delta = 0.1 * k as f64;
            let lhs = domain.lhs(delta);
            assert!(lhs.is_finite() && lhs > 0.0);
            assert!(lhs <= prev + 1e-12);
            prev = lhs;
        }
        // f -> 2f leaves the normalized exponent unchanged
        let doubled = BMDomain::prepare(f.map(|v| 2.0 * v)).unwrap();
        for delta in [0.2, 0.5, 0.8] {
            let a = domain.lhs(delta);
            let b = doubled.lhs(delta);
            assert!((a - b).abs() / a < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn concentration_increases_lhs_but_stays_finite() {
        // one full-mass bump against two separated half-mass bumps of the
        // same radius: gathering the mass raises the integral
        let n = 3;
        let h = 1.0 / 10.0;
        let single = unit_bump(n, &[0.0; 3], 0.25, h, 1.0);
        let split = {
            let g = Grid::ball(n, &[0.0; 3], 1.0, h).unwrap();
            let a = math::point_from(&[0.45, 0.0, 0.0]);
            let b = math::point_from(&[-0.45, 0.0, 0.0]);
            let count = g
                .active_cells()
                .filter(|&l| {
                    let c = g.center_of(l);
                    math::dist(&c, &a, n) <= 0.25 || math::dist(&c, &b, n) <= 0.25
                })
                .count();
            let rho = 1.0 / (count as f64 * g.cell_volume());
            ScalarField::from_fn(&g, |x| {
                if math::dist(x, &a, n) <= 0.25 || math::dist(x, &b, n) <= 0.25 {
                    rho
                } else {
                    0.0
                }
            })
        };
        let delta = 0.2;
        let lone = BMDomain::prepare(single).unwrap().lhs(delta);
        let ltwo = BMDomain::prepare(split).unwrap().lhs(delta);
        assert!(lone.is_finite() && ltwo.is_finite());
        assert!(lone > ltwo, "single {lone} vs split {ltwo}");
    }

    #[test]
    fn sweep_reports_bounded_envelope() {
        let n = 3;
        let h = 1.0 / 8.0;
        let members = [
            unit_bump(n, &[0.0; 3], 0.5, h, 1.0),
            unit_bump(n, &[0.0; 3], 0.125, h, 1.0),
            unit_bump(n, &[0.3, 0.0, 0.0], 0.25, h, 1.0),
        ];
        let refs: Vec<&ScalarField> = members.iter().collect();
        let deltas: Vec<f64> = (1..=9).map(|k| 0.1 * k as f64).collect();
        let report = bm_sweep(&refs, &deltas).unwrap();
        assert!(report.all_finite);
        assert!(report.family_ratio_max < 50.0, "{report:?}");
        assert!(report.fitted_c > 0.0 && report.fitted_c.is_finite());
        // the envelope column tracks lhs * delta^{n+1}
        let r0 = &report.rows[0];
        let expect = r0.lhs * math::powf(r0.delta, 4.0);
        assert!((r0.envelope - expect).abs() < 1e-12);
    }

    #[test]
    fn golden_baseline_uniform_unit_mass() {
        // regression pin: uniform unit-mass density on B(0,1), n = 3,
        // grid h = 1/10 (4139 cells, diameter 1.989974874213), delta = 0.5
        let g = Grid::ball(3, &[0.0; 3], 1.0, 0.1).unwrap();
        let f = ScalarField::constant(&g, 1.0 / g.volume());
        let d = BMDomain::prepare(f).unwrap();
        let lhs = d.lhs(0.5);
        assert!(lhs.is_finite());
        assert!((lhs - 23.464147374915).abs() < 1e-9, "{lhs}");
    }

    #[test]
    fn translation_of_the_bump_barely_moves_lhs() {
        let n = 3;
        let h = 1.0 / 10.0;
        let centered = unit_bump(n, &[0.0; 3], 0.25, h, 1.0);
        let shifted = unit_bump(n, &[0.2, 0.0, 0.0], 0.25, h, 1.0);
        let delta = 0.4;
        let a = BMDomain::prepare(centered).unwrap().lhs(delta);
        let b = BMDomain::prepare(shifted).unwrap().lhs(delta);
        assert!((a - b).abs() / a < 0.02, "{a} vs {b}");
    }
}
