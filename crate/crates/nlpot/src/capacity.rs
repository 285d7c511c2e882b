//! Variational n-capacity of condensers: minimize the regularized energy over
//! fields pinned to 1 on the plate and 0 on the outer boundary (and on an
//! optional interior zero plate), by unknown elimination.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::math::{self, Point};
use crate::measure::RadonMeasure;
use crate::nlaplace::fixed_boundary_cells;
use crate::solver::{CellState, SolverReport, System};

/// Compact plate K inside the bounded open region of `grid`, with an
/// optional interior set held at zero (for ray/segment configurations).
pub struct Condenser {
    grid: Arc<Grid>,
    plate: Vec<usize>,
    zero_plate: Vec<usize>,
}

impl Condenser {
    pub fn new(grid: &Arc<Grid>, plate: impl Fn(&Point) -> bool) -> Result<Condenser> {
        let cells: Vec<usize> = grid
            .active_cells()
            .filter(|&lin| plate(&grid.center_of(lin)))
            .collect();
        Self::from_cells(grid, cells)
    }

    pub fn from_cells(grid: &Arc<Grid>, mut plate: Vec<usize>) -> Result<Condenser> {
        plate.sort_unstable();
        plate.dedup();
        Self::build(grid, plate, Vec::new())
    }

    pub fn with_zero_plate(
        grid: &Arc<Grid>,
        mut plate: Vec<usize>,
        mut zero_plate: Vec<usize>,
    ) -> Result<Condenser> {
        plate.sort_unstable();
        plate.dedup();
        zero_plate.sort_unstable();
        zero_plate.dedup();
        Self::build(grid, plate, zero_plate)
    }

    fn build(grid: &Arc<Grid>, plate: Vec<usize>, zero_plate: Vec<usize>) -> Result<Condenser> {
        if plate.is_empty() {
            invalid!("condenser plate is empty");
        }
        for &lin in &plate {
            if !grid.is_active(lin) {
                invalid!("plate cell outside the domain");
            }
        }
        // the plate needs a positive gap (two cells) to the boundary and to
        // any interior zero set
        let n = grid.dim();
        let offsets = {
            let reach = 2isize;
            let mut offsets = vec![[0isize; 4]];
            for d in 0..n {
                let mut next = Vec::new();
                for o in &offsets {
                    for s in -reach..=reach {
                        let mut oo = *o;
                        oo[d] = s;
                        next.push(oo);
                    }
                }
                offsets = next;
            }
            // Euclidean reach of two cells
            offsets.retain(|o| o.iter().map(|s| s * s).sum::<isize>() <= 4);
            offsets
        };
        for &lin in &plate {
            let idx = grid.index_of(lin);
            let dims = grid.dims();
            let mut probe = [0usize; 4];
            for o in &offsets {
                let mut ok = true;
                for d in 0..n {
                    let j = idx[d] as isize + o[d];
                    if j < 0 || j >= dims[d] as isize {
                        ok = false;
                        break;
                    }
                    probe[d] = j as usize;
                }
                if !ok {
                    invalid!("plate touches the lattice edge");
                }
                let p = grid.lin_of(&probe);
                if !grid.is_active(p) {
                    invalid!("plate is within two cells of the domain boundary");
                }
                if zero_plate.binary_search(&p).is_ok() {
                    invalid!("plate is within two cells of the zero plate");
                }
            }
        }
        Ok(Condenser {
            grid: grid.clone(),
            plate,
            zero_plate,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn plate(&self) -> &[usize] {
        &self.plate
    }
}

#[derive(Debug, Clone)]
pub struct CapacityResult {
    /// Regularized energy of the minimizer with the eps^n background removed.
    pub value: f64,
    pub minimizer: ScalarField,
    pub report: SolverReport,
}

/// cap_n(K, Omega) by constrained minimization; `eps` defaults to the grid
/// spacing in callers. The minimizer stays in [0, 1] up to solver tolerance.
pub fn capacity(c: &Condenser, eps: f64) -> Result<CapacityResult> {
    if !(eps > 0.0) {
        invalid!("capacity solves need eps > 0");
    }
    let grid = &c.grid;
    let n = grid.dim();
    let mut states = vec![CellState::Out; grid.len()];
    for lin in grid.active_cells() {
        states[lin] = CellState::Free;
    }
    for lin in fixed_boundary_cells(grid) {
        states[lin] = CellState::Fixed(0.0);
    }
    for &lin in &c.zero_plate {
        states[lin] = CellState::Fixed(0.0);
    }
    for &lin in &c.plate {
        states[lin] = CellState::Fixed(1.0);
    }
    let masses = vec![0.0; grid.len()];

    let stages: &[f64] = if n == 2 { &[1.0] } else { &[4.0, 1.0] };
    let mut vals: Option<Vec<f64>> = None;
    let mut report = None;
    let mut total_iters = 0;
    let mut system = None;
    for &mult in stages {
        let s = System::new(grid.clone(), n, eps * mult, &states, masses.clone())?;
        let mut v = vals.take().unwrap_or_else(|| s.initial_values());
        let r = s.minimize(&mut v, 80);
        total_iters += r.iterations;
        vals = Some(v);
        report = Some(r);
        system = Some(s);
    }
    let system = system.unwrap();
    let vals = vals.unwrap();
    let mut report = report.unwrap();
    report.iterations = total_iters;
    let value = system.capacity_value(&vals);
    let minimizer = system.into_field(vals);
    Ok(CapacityResult {
        value,
        minimizer,
        report,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct LevelSetReport {
    pub lambda: f64,
    pub capacity: f64,
    pub mass: f64,
    /// lambda^{n-1} cap_n({u > lambda}, Omega) / mu(Omega); 0 for empty sets.
    pub ratio: f64,
    pub empty: bool,
}

/// Level-set capacity observable for a field solved from `mu` with zero
/// boundary data; the bound says the ratio stays at or below one.
pub fn level_set_capacity_check(
    u: &ScalarField,
    mu: &RadonMeasure,
    lambda: f64,
    eps: f64,
) -> Result<LevelSetReport> {
    let grid = u.grid();
    let n = grid.dim();
    let mass = mu.total_mass();
    if mass <= 0.0 {
        invalid!("the bound needs positive total mass");
    }
    let cells: Vec<usize> = grid
        .active_cells()
        .filter(|&lin| u.is_singular(lin) || u.values()[lin] > lambda)
        .collect();
    if cells.is_empty() {
        return Ok(LevelSetReport {
            lambda,
            capacity: 0.0,
            mass,
            ratio: 0.0,
            empty: true,
        });
    }
    let condenser = Condenser::from_cells(grid, cells)?;
    let cap = capacity(&condenser, eps)?;
    let ratio = math::powf(lambda, (n - 1) as f64) * cap.value / mass;
    Ok(LevelSetReport {
        lambda,
        capacity: cap.value,
        mass,
        ratio,
        empty: false,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct GehringRow {
    pub length: f64,
    pub capacity: f64,
    /// cap * (log(1 + 1/L))^{n-1}; bounded below along the sweep.
    pub product: f64,
    pub skipped: bool,
}

/// Segment-against-ray condenser sweep: the plate is the segment
/// {-t e_1 : 0 <= t <= L} one cell thick, held at 1; the unbounded connected
/// set is realized as the ray {t e_1 : 1 <= t <= 2} carved out of B(0, 2)
/// and held at 0 together with the outer boundary.
pub fn gehring_probe(lengths: &[f64], n: usize, h: f64) -> Result<Vec<GehringRow>> {
    let grid = Grid::ball(n, &[0.0; 4][..n], 2.0, h)?;
    let mut rows = Vec::new();
    for &len in lengths {
        if !(len > 0.0) {
            invalid!("segment length must be positive");
        }
        if len < 3.0 * h {
            rows.push(GehringRow {
                length: len,
                capacity: 0.0,
                product: 0.0,
                skipped: true,
            });
            continue;
        }
        let plate = segment_cells(&grid, len, -1.0);
        let ray = ray_cells(&grid, 1.0, 2.0 + h);
        let condenser = Condenser::with_zero_plate(&grid, plate, ray)?;
        let cap = capacity(&condenser, h)?;
        let product = cap.value * math::powf(math::ln(1.0 + 1.0 / len), (n - 1) as f64);
        rows.push(GehringRow {
            length: len,
            capacity: cap.value,
            product,
            skipped: false,
        });
    }
    Ok(rows)
}

fn segment_cells(grid: &Grid, len: f64, dir: f64) -> Vec<usize> {
    let h = grid.spacing();
    let mut cells = Vec::new();
    let steps = math::ceil(len / (0.25 * h)) as usize + 1;
    for k in 0..=steps {
        let t = len * k as f64 / steps as f64;
        let mut p = [0.0; 4];
        p[0] = dir * t;
        if let Some(lin) = grid.cell_of(&p) {
            if grid.is_active(lin) {
                cells.push(lin);
            }
        }
    }
    cells.sort_unstable();
    cells.dedup();
    cells
}

fn ray_cells(grid: &Grid, from: f64, to: f64) -> Vec<usize> {
    let h = grid.spacing();
    let mut cells = Vec::new();
    let steps = math::ceil((to - from) / (0.25 * h)) as usize + 1;
    for k in 0..=steps {
        let t = from + (to - from) * k as f64 / steps as f64;
        let mut p = [0.0; 4];
        p[0] = t;
        if let Some(lin) = grid.cell_of(&p) {
            if grid.is_active(lin) {
                cells.push(lin);
            }
        }
    }
    cells.sort_unstable();
    cells.dedup();
    cells
}
