//! Nonnegative Radon measures as atoms plus an optional density field.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::math::{self, Point};

#[derive(Debug, Clone)]
pub struct RadonMeasure {
    n: usize,
    atoms: Vec<(Point, f64)>,
    density: Option<ScalarField>,
}

impl RadonMeasure {
    /// Zero-mass atoms are dropped; negative masses or densities are rejected.
    pub fn new(n: usize, atoms: Vec<(Point, f64)>, density: Option<ScalarField>) -> Result<RadonMeasure> {
        if !(2..=4).contains(&n) {
            invalid!("dimension must be 2, 3 or 4, got {n}");
        }
        let mut kept = Vec::with_capacity(atoms.len());
        for (p, m) in atoms {
            if m < 0.0 || !m.is_finite() {
                invalid!("atom mass must be finite and nonnegative, got {m}");
            }
            if m > 0.0 {
                kept.push((p, m));
            }
        }
        if let Some(f) = &density {
            if f.grid().dim() != n {
                invalid!("density dimension does not match measure dimension");
            }
            for lin in f.grid().active_cells() {
                if !f.is_singular(lin) && f.values()[lin] < 0.0 {
                    invalid!("density must be nonnegative");
                }
            }
        }
        Ok(RadonMeasure {
            n,
            atoms: kept,
            density,
        })
    }

    pub fn zero(n: usize) -> RadonMeasure {
        RadonMeasure {
            n,
            atoms: Vec::new(),
            density: None,
        }
    }

    pub fn atom(n: usize, at: &[f64], mass: f64) -> Result<RadonMeasure> {
        Self::new(n, vec![(math::point_from(at), mass)], None)
    }

    pub fn from_density(density: ScalarField) -> Result<RadonMeasure> {
        let n = density.grid().dim();
        Self::new(n, Vec::new(), Some(density))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn atoms(&self) -> &[(Point, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&ScalarField> {
        self.density.as_ref()
    }

    /// Multiply every mass by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Result<RadonMeasure> {
        if c < 0.0 {
            invalid!("measures stay nonnegative; scale factor {c} rejected");
        }
        let atoms = self.atoms.iter().map(|(p, m)| (*p, m * c)).collect();
        let density = self.density.as_ref().map(|f| f.map(|v| v * c));
        RadonMeasure::new(self.n, atoms, density)
    }

    pub fn total_mass(&self) -> f64 {
        let atom_mass: f64 = self.atoms.iter().map(|(_, m)| m).sum();
        atom_mass + self.density_mass()
    }

    fn density_mass(&self) -> f64 {
        match &self.density {
            None => 0.0,
            Some(f) => {
                let hv = f.grid().cell_volume();
                f.grid()
                    .active_cells()
                    .filter(|&l| !f.is_singular(l))
                    .map(|l| f.values()[l] * hv)
                    .sum()
            }
        }
    }

    /// `mu(B(x, t))`: atoms within the closed ball plus the midpoint-rule
    /// density integral (cells counted by center). Monotone in `t`.
    pub fn ball_mass(&self, x: &Point, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let mut mass = 0.0;
        for (p, m) in &self.atoms {
            if math::dist(p, x, self.n) <= t {
                mass += m;
            }
        }
        if let Some(f) = &self.density {
            let hv = f.grid().cell_volume();
            for lin in f.grid().active_cells() {
                if f.is_singular(lin) {
                    continue;
                }
                if math::dist(&f.grid().center_of(lin), x, self.n) <= t {
                    mass += f.values()[lin] * hv;
                }
            }
        }
        mass
    }

    /// Lump the measure onto grid cells: atoms land in their host cell with
    /// their full mass, the density contributes `rho * h^n` per cell.
    /// Atoms outside the active region are rejected.
    pub fn cell_masses(&self, grid: &Grid) -> Result<Vec<f64>> {
        let mut out = vec![0.0; grid.len()];
        for (p, m) in &self.atoms {
            match grid.cell_of(p) {
                Some(lin) if grid.is_active(lin) => out[lin] += m,
                _ => invalid!("atom at {:?} is outside the domain", &p[..self.n]),
            }
        }
        if let Some(f) = &self.density {
            let hv = grid.cell_volume();
            if f.grid().as_ref() == grid {
                for lin in grid.active_cells() {
                    if !f.is_singular(lin) {
                        out[lin] += f.values()[lin] * hv;
                    }
                }
            } else {
                // resample on the host grid
                use crate::field::Field;
                for lin in grid.active_cells() {
                    let v = f.eval(&grid.center_of(lin));
                    if v.is_finite() && v > 0.0 {
                        out[lin] += v * hv;
                    }
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atom_ball_mass_is_an_indicator() {
        let mu = RadonMeasure::atom(3, &[0.0; 3], 1.0).unwrap();
        assert_eq!(mu.ball_mass(&[0.0; 4], 0.5), 1.0);
        assert_eq!(mu.ball_mass(&math::point_from(&[1.0, 0.0, 0.0]), 0.5), 0.0);
        assert_eq!(mu.ball_mass(&[0.0; 4], 0.0), 1.0); // closed ball
    }

    #[test]
    fn zero_mass_atoms_dropped_negative_rejected() {
        let mu = RadonMeasure::new(2, vec![([0.0; 4], 0.0), ([0.5, 0.0, 0.0, 0.0], 2.0)], None).unwrap();
        assert_eq!(mu.atoms().len(), 1);
        assert!(RadonMeasure::atom(2, &[0.0, 0.0], -1.0).is_err());
    }

    #[test]
    fn unit_density_ball_mass_matches_volume() {
        let g = Grid::ball(3, &[0.0; 3], 1.0, 0.04).unwrap();
        let mu = RadonMeasure::from_density(ScalarField::constant(&g, 1.0)).unwrap();
        let v = mu.ball_mass(&[0.0; 4], 1.0);
        let exact = math::ball_volume(3);
        assert!((v - exact).abs() / exact < 0.02, "{v} vs {exact}");
    }

    #[test]
    fn ball_mass_monotone_and_total() {
        let g = Grid::ball(2, &[0.0; 2], 1.0, 0.05).unwrap();
        let f = ScalarField::from_fn(&g, |x| 1.0 + x[0].abs());
        let mu = RadonMeasure::new(2, vec![([0.25, 0.0, 0.0, 0.0], 0.7)], Some(f)).unwrap();
        let mut prev = 0.0;
        for k in 0..20 {
            let t = 0.1 * k as f64;
            let m = mu.ball_mass(&[0.0; 4], t);
            assert!(m >= prev);
            prev = m;
        }
        assert!((prev - mu.total_mass()).abs() < 1e-12);
    }

    #[test]
    fn atoms_lump_into_host_cell() {
        let g = Grid::ball(2, &[0.0; 2], 1.0, 0.1).unwrap();
        let mu = RadonMeasure::atom(2, &[0.0, 0.0], 3.0).unwrap();
        let masses = mu.cell_masses(&g).unwrap();
        let host = g.cell_of(&[0.0; 4]).unwrap();
        assert_eq!(masses[host], 3.0);
        let total: f64 = masses.iter().sum();
        assert!((total - 3.0).abs() < 1e-12);
    }
}
