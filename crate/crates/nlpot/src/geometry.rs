//! Geometric applications: conformally flat metrics e^{2 phi}|dx|^2 with
//! nonnegative Ricci (the Ricci-direction density read off the n-Laplacian,
//! the boundary-flux computation of the logarithmic slope m, exhaustion
//! domains), and vertical graphs in hyperbolic space in Busemann coordinates
//! (inscribed rotation profile, equidistant bound, subharmonicity of the
//! height, asymptotics of the height function).

use alloc::vec::Vec;

use crate::asymptotics::{invert_field, quotient_profile};
use crate::error::{invalid, Error, Result};
use crate::field::{Field, ScalarField};
use crate::math::{self, Point};
use crate::nlaplace::{flux_through_sphere, n_laplacian};

/// Conformal factor phi of the metric e^{2 phi}|dx|^2; the statements here
/// need dimension at least 3.
pub struct ConformalMetric {
    pub phi: ScalarField,
}

impl ConformalMetric {
    pub fn new(phi: ScalarField) -> Result<ConformalMetric> {
        if phi.grid().dim() < 3 {
            invalid!("conformally flat statements need dimension >= 3");
        }
        Ok(ConformalMetric { phi })
    }

    pub fn dim(&self) -> usize {
        self.phi.grid().dim()
    }
}

/// The density Ric(grad phi direction) |grad phi|^{n-2} e^{2 phi} accessed
/// through the identity with -Delta_n phi, plus the cells where it dips
/// below -tol (nonnegative-Ricci violations).
pub fn ricci_direction_density(
    metric: &ConformalMetric,
    eps: f64,
    tol: f64,
) -> (ScalarField, Vec<usize>) {
    let lap = n_laplacian(&metric.phi, eps);
    let density = lap.map(|v| -v);
    let mut violations = Vec::new();
    for lin in density.grid().active_cells() {
        if !density.is_singular(lin) && density.values()[lin] < -tol {
            violations.push(lin);
        }
    }
    (density, violations)
}

#[derive(Debug, Clone)]
pub struct FluxM {
    pub radii: Vec<f64>,
    /// s(R) = flux(phi, R) / omega_{n-1}.
    pub s_values: Vec<f64>,
    /// sign(s) |s|^{1/(n-1)} extrapolated over the trailing radii.
    pub m_flux: f64,
    /// Slope recovered by the inversion + profile pipeline, when the radii
    /// allow it (needs R > 1 so the inverted radii lie in (0,1)).
    pub m_profile: Option<f64>,
    pub difference: Option<f64>,
    pub stabilized: bool,
}

/// Estimate m from sphere fluxes of the conformal factor and cross-check it
/// against the inverted quotient profile.
pub fn flux_m(metric: &ConformalMetric, radii: &[f64]) -> Result<FluxM> {
    if radii.len() < 2 {
        return Err(Error::Insufficient("need at least two flux radii".into()));
    }
    let n = metric.dim();
    let omega = math::sphere_area(n);
    let mut radii = radii.to_vec();
    radii.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let mut s_values = Vec::with_capacity(radii.len());
    for &r in &radii {
        let f = flux_through_sphere(&metric.phi, &[0.0; 4][..n], r)?;
        s_values.push(f / omega);
    }
    let half = radii.len().div_ceil(2);
    let trailing = &s_values[s_values.len() - half..];
    let mean: f64 = trailing.iter().sum::<f64>() / trailing.len() as f64;
    let spread = trailing
        .iter()
        .map(|s| (s - mean).abs())
        .fold(0.0f64, f64::max);
    let stabilized = spread <= 0.05 * (1.0 + mean.abs());
    let m_flux = sign_root(mean, n);

    // cross-check: w(y) = phi(y/|y|^2) - 2 log|y| has slope m1 = 2 - m
    let inv_radii: Vec<f64> = radii
        .iter()
        .rev()
        .map(|r| 1.0 / r)
        .filter(|y| *y > 0.0 && *y < 1.0)
        .collect();
    let m_profile = if inv_radii.len() >= 4 {
        let w = invert_field(&metric.phi);
        quotient_profile(&w, &inv_radii, 10)
            .ok()
            .map(|p| 2.0 - p.slope_m)
    } else {
        None
    };
    let difference = m_profile.map(|mp| (mp - m_flux).abs());
    Ok(FluxM {
        radii,
        s_values,
        m_flux,
        m_profile,
        difference,
        stabilized,
    })
}

fn sign_root(s: f64, n: usize) -> f64 {
    let root = math::powf(s.abs(), 1.0 / (n as f64 - 1.0));
    if s < 0.0 {
        -root
    } else {
        root
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComparisonSign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy)]
pub struct ExhaustionSpec {
    pub m: f64,
    pub eps: f64,
    pub t: f64,
    pub sign: ComparisonSign,
}

#[derive(Debug, Clone)]
pub struct ExhaustionReport {
    /// Cells of the connected component through the origin.
    pub cells: Vec<usize>,
    /// Whether the component stayed away from the grid boundary.
    pub bounded: bool,
}

/// Connected component through the origin of {G > phi} (plus sign) or
/// {G < phi} (minus sign), where G caps the logarithmic comparison profile:
/// G^+ = -(m+eps) max(log|x|, 0) + t and G^- = -(m-eps) max(log|x|, 0) - t.
pub fn exhaustion_domain(metric: &ConformalMetric, spec: ExhaustionSpec) -> Result<ExhaustionReport> {
    if !(spec.eps > 0.0 && spec.t > 0.0) {
        invalid!("exhaustion parameters need eps > 0 and t > 0");
    }
    let grid = metric.phi.grid();
    let n = grid.dim();
    let member = |lin: usize| -> bool {
        if !grid.is_active(lin) || metric.phi.is_singular(lin) {
            return false;
        }
        let x = grid.center_of(lin);
        let log_plus = math::ln(math::norm(&x, n)).max(0.0);
        let phi = metric.phi.values()[lin];
        match spec.sign {
            ComparisonSign::Plus => -(spec.m + spec.eps) * log_plus + spec.t > phi,
            ComparisonSign::Minus => -(spec.m - spec.eps) * log_plus - spec.t < phi,
        }
    };
    let origin = grid
        .cell_of(&[0.0; 4])
        .filter(|&lin| grid.is_active(lin))
        .ok_or_else(|| Error::Invalid("grid does not cover the origin".into()))?;
    if !member(origin) {
        return Err(Error::Invalid(
            "the origin does not belong to the comparison region".into(),
        ));
    }
    // flood fill
    let mut seen = alloc::vec![false; grid.len()];
    let mut stack = alloc::vec![origin];
    let mut cells = Vec::new();
    let mut bounded = true;
    seen[origin] = true;
    while let Some(lin) = stack.pop() {
        cells.push(lin);
        if !grid.is_interior(lin) {
            bounded = false;
        }
        for d in 0..n {
            for s in [-1isize, 1] {
                if let Some(nb) = grid.neighbor(lin, d, s) {
                    if !seen[nb] && member(nb) {
                        seen[nb] = true;
                        stack.push(nb);
                    }
                }
            }
        }
    }
    cells.sort_unstable();
    Ok(ExhaustionReport { cells, bounded })
}

/// Pointwise convexity classification of principal curvatures in hyperbolic
/// space, evaluated exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurvatureClassification {
    pub strictly_convex: bool,
    pub nonneg_ricci: bool,
    pub nonneg_sectional: bool,
}

pub fn curvature_condition(kappa: &[f64]) -> Result<CurvatureClassification> {
    let n = kappa.len();
    if n < 2 {
        invalid!("need at least two principal curvatures");
    }
    let sum: f64 = kappa.iter().sum();
    let strictly_convex = kappa.iter().all(|&k| k > 0.0);
    let nonneg_ricci = kappa.iter().all(|&k| k * sum - k * k >= (n - 1) as f64);
    let mut nonneg_sectional = true;
    for i in 0..n {
        for j in 0..n {
            if i != j && kappa[i] * kappa[j] < 1.0 {
                nonneg_sectional = false;
            }
        }
    }
    Ok(CurvatureClassification {
        strictly_convex,
        nonneg_ricci,
        nonneg_sectional,
    })
}

/// Vertical graph in Busemann coordinates: height rho over the base plane.
pub struct HypersurfaceGraph {
    pub height: ScalarField,
}

impl HypersurfaceGraph {
    pub fn new(height: ScalarField) -> HypersurfaceGraph {
        HypersurfaceGraph { height }
    }
}

#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    /// rho_hat(r) = sup over the sphere |x| = r.
    pub sup: Vec<f64>,
    pub nondecreasing: bool,
    pub log_convex: bool,
}

/// Inscribed rotation profile with its monotonicity and log-convexity checks.
pub fn inner_rotation(rho: &impl Field, radii: &[f64], res: usize) -> Result<RadialProfile> {
    if radii.len() < 3 {
        return Err(Error::Insufficient("need at least three radii".into()));
    }
    let n = rho.dim();
    let mut radii = radii.to_vec();
    radii.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let rule = math::sphere_rule(n, res.max(6));
    let mut sup = Vec::with_capacity(radii.len());
    for &r in &radii {
        let mut hi = f64::NEG_INFINITY;
        for (dir, _) in &rule {
            let mut x = [0.0; 4];
            for d in 0..n {
                x[d] = r * dir[d];
            }
            if !rho.contains(&x) {
                return Err(Error::OutOfDomain(alloc::format!(
                    "sphere of radius {r} leaves the graph's base domain"
                )));
            }
            hi = hi.max(rho.eval(&x));
        }
        sup.push(hi);
    }
    let tol = 1e-9
        + 1e-6
            * sup
                .iter()
                .fold(0.0f64, |a, &b| a.max(b.abs()));
    let nondecreasing = sup.windows(2).all(|w| w[1] >= w[0] - tol);
    // convexity in log r via second differences
    let ls: Vec<f64> = radii.iter().map(|&r| math::ln(r)).collect();
    let mut log_convex = true;
    for k in 1..sup.len() - 1 {
        let left = (sup[k] - sup[k - 1]) / (ls[k] - ls[k - 1]);
        let right = (sup[k + 1] - sup[k]) / (ls[k + 1] - ls[k]);
        if right < left - 1e-6 {
            log_convex = false;
        }
    }
    Ok(RadialProfile {
        radii,
        sup,
        nondecreasing,
        log_convex,
    })
}

#[derive(Debug, Clone, Copy)]
pub enum EquidistantBound {
    /// rho_hat(r) <= log r + C on the trailing window.
    Bound { c: f64 },
    /// The profile outgrows every slope-one majorant.
    Violation { slope: f64 },
}

/// Smallest C with rho_hat(r) <= log r + C over the trailing radii, or a
/// certificate that the trailing slope exceeds one.
pub fn equidistant_bound(profile: &RadialProfile) -> Result<EquidistantBound> {
    let k = profile.radii.len();
    if k < 4 {
        return Err(Error::Insufficient("need at least four radii".into()));
    }
    let half = k / 2;
    let xs: Vec<f64> = profile.radii[half..].iter().map(|&r| math::ln(r)).collect();
    let ys: Vec<f64> = profile.sup[half..].to_vec();
    let (slope, _) = math::linear_fit(&xs, &ys);
    if slope > 1.0 + 0.05 {
        return Ok(EquidistantBound::Violation { slope });
    }
    let mut c = f64::NEG_INFINITY;
    for (x, y) in xs.iter().zip(&ys) {
        c = c.max(y - x);
    }
    Ok(EquidistantBound::Bound { c })
}

#[derive(Debug, Clone)]
pub struct SubharmonicReport {
    /// Cells where Delta_n rho < -tol.
    pub violations: Vec<usize>,
    pub fraction_ok: f64,
    /// Distributional mass of Delta_n rho at the origin, read from a small
    /// sphere flux when one fits the grid; negative mass is the
    /// superharmonic-pole signature that subharmonicity rules out.
    pub origin_mass: Option<f64>,
}

/// Check n-subharmonicity of the height: Delta_n rho >= 0 away from flagged
/// cells and from a five-cell collar around poles (where the discrete
/// operator carries no information), with the atom at the origin reported
/// separately via the flux.
pub fn busemann_subharmonic_check(graph: &HypersurfaceGraph, eps: f64, tol: f64) -> SubharmonicReport {
    let rho = &graph.height;
    let lap = n_laplacian(rho, eps);
    let grid = rho.grid();
    let n = grid.dim();
    let collar = 5.0 * grid.spacing();
    let poles: Vec<Point> = rho
        .singular_cells()
        .iter()
        .map(|&lin| grid.center_of(lin))
        .collect();
    let mut checked = 0usize;
    let mut violations = Vec::new();
    for lin in grid.active_cells() {
        if lap.is_singular(lin) {
            continue;
        }
        let x = grid.center_of(lin);
        if poles.iter().any(|p| math::dist(p, &x, n) <= collar) {
            continue;
        }
        checked += 1;
        if lap.values()[lin] < -tol {
            violations.push(lin);
        }
    }
    let n = grid.dim();
    let probe = 6.0 * grid.spacing();
    let origin_mass = flux_through_sphere(rho, &[0.0; 4][..n], probe)
        .ok()
        .map(|f| -f);
    SubharmonicReport {
        fraction_ok: if checked == 0 {
            0.0
        } else {
            (checked - violations.len()) as f64 / checked as f64
        },
        violations,
        origin_mass,
    }
}

#[derive(Debug, Clone)]
pub struct AsymptoteReport {
    /// Logarithmic growth rate of the height.
    pub m: f64,
    /// Upper envelope constant: rho(x) <= m log|x| + C on the sampled range.
    pub upper_c: f64,
    /// Trailing deficit of the lower envelope (m log|x| + o(log|x|) <= rho),
    /// in slope units; drifts to zero when the asymptote holds.
    pub lower_envelope_deficit: f64,
    /// Whether m landed in [0, 1] (up to estimation slack).
    pub m_in_range: bool,
}

/// Recover the height asymptote by applying the blow-down machinery to the
/// inverted graph: tau(y) = rho(y/|y|^2) - 2 log(1/|y|) is treated through
/// -tau, whose slope m1 gives m = 2 - m1.
pub fn hypersurface_asymptote(
    graph_height: &impl Field,
    y_radii: &[f64],
    res: usize,
) -> Result<AsymptoteReport> {
    if y_radii.len() < 4 {
        return Err(Error::Insufficient(
            "need at least four inverted radii spanning the end".into(),
        ));
    }
    let n = graph_height.dim();
    let neg = NegField { inner: graph_height, n };
    let w = invert_field(&neg);
    let profile = quotient_profile(&w, y_radii, res)?;
    let m1 = profile.slope_m;
    let m = 2.0 - m1;
    // rho - m log|x| = (m1 - w/L) L with L = log(1/|y|)
    let upper_c = profile.lower_bound_c;
    let last = profile.max.len() - 1;
    let lower_envelope_deficit = (profile.max[last] - m1).max(0.0);
    Ok(AsymptoteReport {
        m,
        upper_c,
        lower_envelope_deficit,
        m_in_range: (-0.05..=1.05).contains(&m),
    })
}

struct NegField<'a, F: Field> {
    inner: &'a F,
    n: usize,
}

impl<F: Field> Field for NegField<'_, F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &Point) -> f64 {
        -self.inner.eval(x)
    }
    fn contains(&self, x: &Point) -> bool {
        self.inner.contains(x)
    }
}

/// The radial profile -m log|x| smoothly capped below r0 (quadratic cap with
/// matching value and slope): the workhorse synthetic conformal factor.
pub fn capped_log_profile(n: usize, m: f64, r0: f64) -> impl Fn(&Point) -> f64 {
    move |x: &Point| {
        let r = math::norm(x, n);
        if r >= r0 {
            -m * math::ln(r)
        } else {
            -m * (math::ln(r0) + (r * r - r0 * r0) / (2.0 * r0 * r0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::fn_field;
    use crate::grid::Grid;

    #[test]
    fn flat_metric_has_zero_density_and_m() {
        let g = Grid::boxed(3, &[-2.0; 3], &[2.0; 3], 0.1).unwrap();
        let metric = ConformalMetric::new(ScalarField::constant(&g, 0.3)).unwrap();
        let (density, violations) = ricci_direction_density(&metric, 0.0, 1e-9);
        assert!(violations.is_empty());
        for lin in g.active_cells() {
            if !density.is_singular(lin) {
                assert!(density.values()[lin].abs() < 1e-10);
            }
        }
        let fm = flux_m(&metric, &[0.5, 0.8, 1.1, 1.4, 1.7]).unwrap();
        assert!(fm.m_flux.abs() < 1e-6);
        assert!(fm.stabilized);
    }

    #[test]
    fn capped_profile_density_sign_and_flux_m() {
        let n = 3;
        let h = 1.0 / 24.0;
        let g = Grid::boxed(n, &[-2.0; 3], &[2.0; 3], h).unwrap();
        let m = 0.5;
        let profile = capped_log_profile(n, m, 0.15);
        let metric = ConformalMetric::new(ScalarField::from_fn(&g, profile)).unwrap();

        // nonnegative density, concentrated in the cap
        let (density, violations) = ricci_direction_density(&metric, 0.0, 20.0 * h);
        let frac = violations.len() as f64 / g.active_count() as f64;
        assert!(frac < 0.01, "violations on {frac} of cells");
        let mut inside: f64 = 0.0;
        let mut outside: f64 = 0.0;
        for lin in g.active_cells() {
            if density.is_singular(lin) {
                continue;
            }
            let r = math::norm(&g.center_of(lin), n);
            let v = density.values()[lin].max(0.0) * g.cell_volume();
            if r < 0.3 {
                inside += v;
            } else {
                outside += v;
            }
        }
        assert!(inside > 10.0 * outside, "mass in cap {inside} vs tail {outside}");

        // s(R) stabilizes at m^{n-1}; m recovered within 5% both ways
        let fm = flux_m(&metric, &[0.5, 0.7, 0.9, 1.1, 1.3, 1.5, 1.7, 1.9]).unwrap();
        assert!(fm.stabilized);
        assert!((fm.m_flux - m).abs() < 0.05 * (1.0 + m), "{}", fm.m_flux);
        let mp = fm.m_profile.expect("profile radii available");
        assert!((mp - m).abs() < 0.05, "profile m {mp}");
        assert!(fm.difference.unwrap() < 0.05);
    }

    #[test]
    fn positive_log_profile_violates_nonneg_ricci() {
        let n = 3;
        let g = Grid::boxed(n, &[-1.0; 3], &[1.0; 3], 1.0 / 16.0).unwrap();
        // phi = +log|x| capped: the opposite sign makes the cap mass negative
        let cap = capped_log_profile(n, -1.0, 0.2);
        let metric = ConformalMetric::new(ScalarField::from_fn(&g, cap)).unwrap();
        let (_, violations) = ricci_direction_density(&metric, 0.0, 1e-4);
        assert!(!violations.is_empty());
    }

    #[test]
    fn exhaustion_domains_nest_and_grow() {
        let n = 3;
        let g = Grid::boxed(n, &[-2.0; 3], &[2.0; 3], 0.1).unwrap();
        let metric =
            ConformalMetric::new(ScalarField::from_fn(&g, capped_log_profile(n, 0.5, 0.1))).unwrap();
        // a visible crossing radius e^{t/eps} needs eps of order one at this
        // grid extent; t must also clear the capped value at the origin
        let spec = |t: f64, sign| ExhaustionSpec {
            m: 0.5,
            eps: 3.0,
            t,
            sign,
        };
        let small = exhaustion_domain(&metric, spec(1.6, ComparisonSign::Plus)).unwrap();
        let large = exhaustion_domain(&metric, spec(1.9, ComparisonSign::Plus)).unwrap();
        assert!(small.bounded && large.bounded);
        assert!(small.cells.len() < large.cells.len());
        // nesting: every small cell appears in the large component
        for lin in &small.cells {
            assert!(large.cells.binary_search(lin).is_ok());
        }
        // t large enough swallows a fixed ball
        let want = g.cell_of(&[0.5, 0.0, 0.0, 0.0]).unwrap();
        assert!(large.cells.binary_search(&want).is_ok());
        // the minus-sign component is reported the same way
        let minus = exhaustion_domain(&metric, spec(1.6, ComparisonSign::Minus)).unwrap();
        assert!(minus.bounded && !minus.cells.is_empty());
    }

    #[test]
    fn curvature_truth_table() {
        // horosphere: all ones, Ricci equality case
        let horo = curvature_condition(&[1.0, 1.0, 1.0]).unwrap();
        assert!(horo.strictly_convex && horo.nonneg_ricci && horo.nonneg_sectional);
        // flat: everything fails
        let flat = curvature_condition(&[0.0, 0.0, 0.0]).unwrap();
        assert!(!flat.strictly_convex && !flat.nonneg_ricci && !flat.nonneg_sectional);
        // geodesic sphere at distance 1: coth(1) in every direction
        let c = 1.0 / ((1.0f64).tanh());
        let sphere = curvature_condition(&[c, c, c]).unwrap();
        assert!(sphere.strictly_convex && sphere.nonneg_ricci && sphere.nonneg_sectional);
        assert!(curvature_condition(&[1.0]).is_err());
    }

    #[test]
    fn sectional_implies_ricci_on_random_samples() {
        // deterministic pseudo-random sweep
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut checked = 0;
        for _ in 0..10_000 {
            let n = 3 + (next() * 2.0) as usize; // 3 or 4
            let kappa: Vec<f64> = (0..n).map(|_| 0.2 + 3.0 * next()).collect();
            let cls = curvature_condition(&kappa).unwrap();
            if cls.nonneg_sectional {
                checked += 1;
                assert!(cls.nonneg_ricci, "sectional without Ricci at {kappa:?}");
            }
        }
        assert!(checked > 100, "sweep too weak: {checked}");
    }

    #[test]
    fn inner_rotation_profiles() {
        let n = 3;
        // equidistant: rho = log|x| + C, affine in log r
        let rho = fn_field(n, |x: &Point| math::ln(math::norm(x, n)) + 0.7);
        let radii: Vec<f64> = (0..10).map(|k| 1.0 + 0.5 * k as f64).collect();
        let p = inner_rotation(&rho, &radii, 10).unwrap();
        assert!(p.nondecreasing && p.log_convex);
        match equidistant_bound(&p).unwrap() {
            EquidistantBound::Bound { c } => assert!((c - 0.7).abs() < 1e-6),
            EquidistantBound::Violation { .. } => panic!("equidistant must be bounded"),
        }

        // slope 0.5: bounded with finite C
        let rho = fn_field(n, |x: &Point| 0.5 * math::ln(math::norm(x, n)));
        let p = inner_rotation(&rho, &radii, 10).unwrap();
        assert!(matches!(equidistant_bound(&p).unwrap(), EquidistantBound::Bound { .. }));

        // slope 1.5: violation
        let rho = fn_field(n, |x: &Point| 1.5 * math::ln(math::norm(x, n)));
        let p = inner_rotation(&rho, &radii, 10).unwrap();
        match equidistant_bound(&p).unwrap() {
            EquidistantBound::Violation { slope } => assert!((slope - 1.5).abs() < 0.05),
            EquidistantBound::Bound { c } => panic!("slope 1.5 must violate, got C = {c}"),
        }

        // ripple around m log r stays within the ripple amplitude
        let rho = fn_field(n, |x: &Point| {
            let r = math::norm(x, n);
            0.6 * math::ln(r) + 0.1 * math::sin(3.0 * r)
        });
        let p = inner_rotation(&rho, &radii, 10).unwrap();
        for (r, s) in p.radii.iter().zip(&p.sup) {
            assert!((s - 0.6 * math::ln(*r)).abs() <= 0.1 + 1e-9);
        }
    }

    #[test]
    fn busemann_height_subharmonicity() {
        let n = 3;
        let h = 1.0 / 20.0;
        // center the grid on a cell so the pole is flagged and collared
        let g = Grid::ball(n, &[0.0; 3], 1.0, h).unwrap();
        // equidistant height log|x|: n-harmonic off the origin, positive pole
        let graph = HypersurfaceGraph::new(ScalarField::from_fn(&g, |x| {
            math::ln(math::norm(x, n))
        }));
        let rep = busemann_subharmonic_check(&graph, 0.0, 60.0 * h);
        // truncation noise of the discrete operator pollutes a fixed
        // neighborhood of the pole (residual ~ h / r^4 against tol ~ h);
        // away from it the height is n-harmonic to within tolerance
        assert!(rep.fraction_ok > 0.98, "{}", rep.fraction_ok);
        for &lin in &rep.violations {
            let r = math::norm(&g.center_of(lin), n);
            assert!(r < 0.45, "violation away from the pole at r = {r}");
        }
        // Delta_n log|x| carries positive mass at the origin
        assert!(rep.origin_mass.unwrap() > 0.0);

        // constant height: no violations, no pole
        let graph = HypersurfaceGraph::new(ScalarField::constant(&g, 2.0));
        let rep = busemann_subharmonic_check(&graph, 0.0, 1e-9);
        assert!(rep.violations.is_empty());
        assert!(rep.origin_mass.unwrap().abs() < 1e-9);

        // -log|x|: still n-harmonic off the origin, but the origin mass is
        // negative, the superharmonic-pole signature
        let graph = HypersurfaceGraph::new(ScalarField::from_fn(&g, |x| {
            -math::ln(math::norm(x, n))
        }));
        let rep = busemann_subharmonic_check(&graph, 0.0, 60.0 * h);
        assert!(rep.fraction_ok > 0.98);
        for &lin in &rep.violations {
            assert!(math::norm(&g.center_of(lin), n) < 0.45);
        }
        assert!(rep.origin_mass.unwrap() < 0.0);
    }

    #[test]
    fn hypersurface_asymptote_recovers_m() {
        let n = 3;
        let radii: Vec<f64> = (0..16)
            .map(|k| math::powf(10.0, -1.0 - 2.5 * k as f64 / 15.0))
            .collect();
        // equidistant: rho = log|x| + C -> m = 1
        let rho = fn_field(n, |x: &Point| math::ln(math::norm(x, n)) + 0.4);
        let rep = hypersurface_asymptote(&rho, &radii, 8).unwrap();
        assert!((rep.m - 1.0).abs() < 0.02, "{}", rep.m);
        assert!(rep.m_in_range);

        // horosphere: constant height -> m = 0
        let rho = fn_field(n, |_: &Point| 1.3);
        let rep = hypersurface_asymptote(&rho, &radii, 8).unwrap();
        assert!(rep.m.abs() < 0.02, "{}", rep.m);

        // intermediate slope with a bounded ripple
        let rho = fn_field(n, |x: &Point| {
            let r = math::norm(x, n);
            0.7 * math::ln(r) + 0.2 * math::cos(2.0 * r)
        });
        let rep = hypersurface_asymptote(&rho, &radii, 8).unwrap();
        assert!((rep.m - 0.7).abs() < 0.05, "{}", rep.m);
        assert!(rep.upper_c < 1.0);
    }

    #[test]
    fn divergence_identity_between_density_and_flux() {
        // integral of the density over B(0,R) equals the sphere flux
        let n = 3;
        let h = 1.0 / 28.0;
        let g = Grid::boxed(n, &[-1.0; 3], &[1.0; 3], h).unwrap();
        let metric =
            ConformalMetric::new(ScalarField::from_fn(&g, capped_log_profile(n, 0.5, 0.25))).unwrap();
        let (density, _) = ricci_direction_density(&metric, 0.0, 1e-6);
        let radius = 0.6;
        let mut integral = 0.0;
        for lin in g.active_cells() {
            if !density.is_singular(lin) && math::norm(&g.center_of(lin), n) <= radius {
                integral += density.values()[lin] * g.cell_volume();
            }
        }
        let flux = flux_through_sphere(&metric.phi, &[0.0; 3], radius).unwrap();
        assert!(
            (integral - flux).abs() / flux.abs() < 0.02,
            "{integral} vs {flux}"
        );
    }
}
