//! The acceptance suite: closed-form oracles and property checks run at
//! pinned resolutions and tolerances. Each criterion reports one pass/fail
//! line; the suite passes only when every criterion does.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use nlpot::annuli::Center;
use nlpot::asymptotics::{cutoff, quotient_profile, CutoffSpec};
use nlpot::capacity::{capacity, gehring_probe, level_set_capacity_check, Condenser};
use nlpot::expint::{bm_sweep, BMDomain};
use nlpot::field::fn_field;
use nlpot::geometry::{
    capped_log_profile, curvature_condition, equidistant_bound, flux_m, hypersurface_asymptote,
    inner_rotation, ConformalMetric, EquidistantBound,
};
use nlpot::math::{self, Point};
use nlpot::nlaplace::{flux_through_sphere, DirichletProblem};
use nlpot::thinness::{thinness_series, Ball, PointSet, SetGeometry, Verdict};
use nlpot::wolff::{du_bois_reymond_weights, km_sandwich, wolff_potential, wolff_value};
use nlpot::{Grid, RadonMeasure, ScalarField};

// ── pinned tolerances ────────────────────────────────────────────────

/// Radial capacity after Richardson extrapolation over two grids.
const CAPACITY_RTOL: f64 = 0.05;
/// Fundamental-solution flux at three radii.
const FLUX_RTOL: f64 = 0.01;
/// Level-set ratio band.
const LEVEL_SET_BAND: (f64, f64) = (0.9, 1.05);
/// Closed-form Wolff values and scaling.
const WOLFF_ATOL: f64 = 1e-6;
/// Cutoff calculus identities.
const CUTOFF_ATOL: f64 = 1e-12;
/// Slope recovery on the synthetic family.
const SLOPE_ATOL: f64 = 0.05;
/// Per-step slack of the sphere-minimum monotonicity.
const MONOTONE_SLACK: f64 = 1e-3;
/// Envelope uniformity across the density family.
const FAMILY_RATIO_MAX: f64 = 50.0;
/// Normalization invariance of the exponential integral.
const NORMALIZATION_RTOL: f64 = 1e-6;
/// Sandwich lower-ratio stability factor across base points.
const SANDWICH_FACTOR: f64 = 3.0;
/// Geometry slope agreement.
const GEOMETRY_ATOL: f64 = 0.05;
/// Gehring product spread.
const GEHRING_FACTOR: f64 = 10.0;

// ── pinned resolutions ───────────────────────────────────────────────

const CAP2_COARSE: f64 = core::f64::consts::E / 48.0;
const CAP2_FINE: f64 = core::f64::consts::E / 96.0;
const CAP3_COARSE: f64 = core::f64::consts::E / 24.0;
const CAP3_FINE: f64 = core::f64::consts::E / 48.0;
const FLUX_H: f64 = 1.0 / 48.0;
const LEVEL_SET_H: f64 = 1.0 / 192.0;
const MONOTONE_H2: f64 = 1.0 / 96.0;
const MONOTONE_H3: f64 = 1.0 / 24.0;
const THINNESS_H: f64 = 1.0 / 12.0;
const BM_H: f64 = 1.0 / 10.0;
const GEOMETRY_H: f64 = 1.0 / 20.0;
const GEHRING_H: f64 = 1.0 / 16.0;

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: usize, name: &'static str, passed: bool, detail: String) -> CriterionResult {
        CriterionResult {
            id,
            name,
            passed,
            detail,
        }
    }
}

pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    let runners: Vec<(usize, &'static str, Box<dyn Fn() -> (bool, String) + Send + Sync>)> = vec![
        (1, "radial capacity oracle", Box::new(radial_capacity)),
        (2, "fundamental-solution flux", Box::new(fundamental_flux)),
        (3, "level-set capacity sharp case", Box::new(level_set_sharp)),
        (4, "wolff closed forms", Box::new(wolff_closed_forms)),
        (5, "cutoff calculus", Box::new(cutoff_calculus)),
        (6, "slope recovery", Box::new(slope_recovery)),
        (7, "monotone sphere minimum", Box::new(monotone_minimum)),
        (8, "thinness verdicts", Box::new(thinness_verdicts)),
        (9, "summable weight construction", Box::new(move || weight_construction(seed))),
        (10, "exponential integral harness", Box::new(exp_integral)),
        (11, "sandwich lower ratio", Box::new(sandwich_ratio)),
        (12, "geometry applications", Box::new(geometry_applications)),
        (13, "segment capacity probe", Box::new(gehring)),
    ];
    runners
        .into_iter()
        .map(|(id, name, f)| {
            let (passed, detail) = f();
            CriterionResult::new(id, name, passed, detail)
        })
        .collect()
}

// ── 1: radial capacity with Richardson extrapolation ─────────────────

/// Independent 1-D quadrature of the radial minimizer's energy: the
/// minimizer of the condenser (|x| <= rho, |x| < R) is log(R/r)/log(R/rho),
/// so the capacity is omega int_rho^R |u'|^n r^{n-1} dr.
fn radial_energy_quadrature(n: usize, rho: f64, r_outer: f64) -> f64 {
    let steps = 200_000;
    let du = 1.0 / math::ln(r_outer / rho);
    let mut total = 0.0;
    for k in 0..steps {
        let r = rho + (r_outer - rho) * (k as f64 + 0.5) / steps as f64;
        let grad = du / r;
        total += math::powf(grad, n as f64) * math::powf(r, (n - 1) as f64);
    }
    math::sphere_area(n) * total * (r_outer - rho) / steps as f64
}

fn grid_capacity(n: usize, rho: f64, r_outer: f64, h: f64) -> f64 {
    let grid = Grid::ball(n, &vec![0.0; n], r_outer, h).unwrap();
    let c = Condenser::new(&grid, |x| math::norm(x, n) <= rho).unwrap();
    capacity(&c, h).unwrap().value
}

fn radial_capacity() -> (bool, String) {
    let e = core::f64::consts::E;
    let cases = [(2usize, CAP2_COARSE, CAP2_FINE), (3, CAP3_COARSE, CAP3_FINE)];
    let rows: Vec<(usize, f64, f64)> = cases
        .par_iter()
        .map(|&(n, hc, hf)| {
            let oracle = radial_energy_quadrature(n, 1.0, e);
            let coarse = grid_capacity(n, 1.0, e, hc);
            let fine = grid_capacity(n, 1.0, e, hf);
            let richardson = 2.0 * fine - coarse;
            (n, oracle, richardson)
        })
        .collect();
    let mut detail = String::new();
    let mut ok = true;
    for (n, oracle, rich) in rows {
        let rel = (rich - oracle).abs() / oracle;
        ok &= rel <= CAPACITY_RTOL;
        detail += &format!("n={n}: {rich:.4} vs {oracle:.4} (rel {rel:.4}); ");
    }
    (ok, detail)
}

// ── 2: flux of the fundamental profile ───────────────────────────────

fn fundamental_flux() -> (bool, String) {
    let n = 3;
    let grid = Grid::boxed(n, &[-1.0; 3], &[1.0; 3], FLUX_H).unwrap();
    let u = ScalarField::from_fn(&grid, |x| math::ln(1.0 / math::norm(x, n)));
    let exact = math::sphere_area(n);
    let mut detail = String::new();
    let mut ok = true;
    for radius in [0.3, 0.5, 0.8] {
        let f = flux_through_sphere(&u, &[0.0; 3], radius).unwrap();
        let rel = (f - exact).abs() / exact;
        ok &= rel <= FLUX_RTOL;
        detail += &format!("R={radius}: rel {rel:.4}; ");
    }
    (ok, detail)
}

// ── 3: the sharp level-set configuration ─────────────────────────────

fn level_set_sharp() -> (bool, String) {
    // u = omega^{-1/(n-1)} log(1/|x|) in B(0,1) has -Delta_n u = delta_0
    let n = 2;
    let grid = Grid::ball(n, &[0.0; 2], 1.0, LEVEL_SET_H).unwrap();
    let scale = math::powf(math::sphere_area(n), -1.0 / (n as f64 - 1.0));
    let u = ScalarField::from_fn(&grid, |x| scale * math::ln(1.0 / math::norm(x, n)));
    let mu = RadonMeasure::atom(n, &[0.0; 2], 1.0).unwrap();
    let lambdas = [0.10, 0.14, 0.18, 0.22, 0.26];
    let ratios: Vec<f64> = lambdas
        .par_iter()
        .map(|&l| {
            level_set_capacity_check(&u, &mu, l, LEVEL_SET_H)
                .unwrap()
                .ratio
        })
        .collect();
    let ok = ratios
        .iter()
        .all(|&r| r >= LEVEL_SET_BAND.0 && r <= LEVEL_SET_BAND.1);
    (ok, format!("ratios {ratios:.4?}"))
}

// ── 4: closed-form Wolff values ──────────────────────────────────────

fn wolff_closed_forms() -> (bool, String) {
    let mut ok = true;
    let mut detail = String::new();
    for n in [2usize, 3] {
        let mu = RadonMeasure::atom(n, &vec![0.0; n], 1.0).unwrap();
        for s in [0.1, 0.02, 0.37] {
            let x = math::point_from(&[s, 0.0, 0.0][..n.min(3)]);
            let w = wolff_potential(&mu, &x, 1.0).unwrap();
            let err = (w.value - math::ln(1.0 / s)).abs();
            ok &= err <= WOLFF_ATOL;
        }
        // exact scaling in the mass
        let atoms = vec![
            (math::point_from(&vec![0.2; n]), 0.7),
            (math::point_from(&vec![-0.1; n]), 1.9),
        ];
        let mu = RadonMeasure::new(n, atoms, None).unwrap();
        let x = math::point_from(&vec![0.55; n]);
        let base = wolff_value(&mu, &x, 1.3).unwrap();
        for c in [0.3, 7.0] {
            let scaled = wolff_value(&mu.scaled(c).unwrap(), &x, 1.3).unwrap();
            let expect = math::powf(c, 1.0 / (n as f64 - 1.0)) * base;
            let err = (scaled - expect).abs() / (1.0 + expect.abs());
            ok &= err <= WOLFF_ATOL;
        }
        detail += &format!("n={n} ok; ");
    }
    (ok, detail)
}

// ── 5: cutoff calculus identities ────────────────────────────────────

fn cutoff_calculus() -> (bool, String) {
    let mut ok = true;
    for n in 2usize..=4 {
        for alpha in [0.7, 2.0] {
            let spec = CutoffSpec::new(alpha, n).unwrap();
            let ceiling = spec.ceiling();
            // identity below the knot
            let (v, d) = cutoff(0.5 * alpha, &spec).unwrap();
            ok &= v == 0.5 * alpha && d == 1.0;
            // continuity and C^1 matching at the knot
            let (va, da) = cutoff(alpha, &spec).unwrap();
            ok &= (va - alpha).abs() <= CUTOFF_ATOL && (da - 1.0).abs() <= CUTOFF_ATOL;
            // bound and saturation
            for k in 1..200 {
                let s = 0.05 * k as f64 * alpha;
                let (v, d) = cutoff(s, &spec).unwrap();
                ok &= v <= ceiling + CUTOFF_ATOL && (0.0..=1.0 + CUTOFF_ATOL).contains(&d);
            }
            let (v, _) = cutoff(1e250, &spec).unwrap();
            ok &= (v - ceiling).abs() <= CUTOFF_ATOL * ceiling;
            // derivative formula cross-checked by finite differences
            let s = 2.5 * alpha;
            let (_, d) = cutoff(s, &spec).unwrap();
            let eps = 1e-6 * alpha;
            let fd = (cutoff(s + eps, &spec).unwrap().0 - cutoff(s - eps, &spec).unwrap().0)
                / (2.0 * eps);
            ok &= (d - fd).abs() <= 1e-7;
        }
    }
    (ok, "identities hold".into())
}

// ── 6: slope recovery on the synthetic family ────────────────────────

fn slope_recovery() -> (bool, String) {
    let n = 3;
    let radii: Vec<f64> = (0..24)
        .map(|k| math::powf(10.0, -1.0 - 4.0 * k as f64 / 23.0))
        .collect();
    let slopes = [0.0, 0.3, 0.5, 1.0, 1.5];
    let mut worst: f64 = 0.0;
    for &m in &slopes {
        for pert in 0..2 {
            let w = fn_field(n, move |x: &Point| {
                let r = math::norm(x, n);
                let bump = if pert == 0 {
                    0.5 * math::sin(5.0 * r)
                } else {
                    0.3 * math::cos(3.0 * x[0] / r) + 0.2
                };
                m * math::ln(1.0 / r) + bump
            });
            let p = quotient_profile(&w, &radii, 8).unwrap();
            worst = worst.max((p.slope_m - m).abs());
        }
    }
    (worst <= SLOPE_ATOL, format!("worst |m - truth| = {worst:.4}"))
}

// ── 7: monotone sphere minimum on solved problems ────────────────────

fn monotone_minimum() -> (bool, String) {
    struct Problem {
        n: usize,
        h: f64,
        atoms: Vec<(Vec<f64>, f64)>,
        uniform_mass: f64,
        boundary: f64,
    }
    let b2 = math::sphere_area(2);
    let b3 = math::sphere_area(3);
    // Each problem carries some density or boundary mass so its continuum
    // min-quotient strictly decreases. A pure atom sits at the lemma's
    // equality case (the quotient is exactly constant) where the sign is
    // resolution-limited: the discrete domain's effective radius differs
    // from 1 by O(h), which tilts a constant profile uphill by O(h) no
    // matter how the solve converges.
    let problems = vec![
        Problem { n: 2, h: MONOTONE_H2, atoms: vec![(vec![0.0, 0.0], b2)], uniform_mass: 0.5, boundary: 0.0 },
        Problem { n: 2, h: MONOTONE_H2, atoms: vec![(vec![0.0, 0.0], 0.5 * b2)], uniform_mass: 1.0, boundary: 0.0 },
        Problem { n: 2, h: MONOTONE_H2, atoms: vec![(vec![0.0, 0.0], b2)], uniform_mass: 3.0, boundary: 0.0 },
        Problem { n: 2, h: MONOTONE_H2, atoms: vec![], uniform_mass: 5.0, boundary: 0.0 },
        Problem { n: 2, h: MONOTONE_H2, atoms: vec![(vec![0.0, 0.0], b2), (vec![0.3, 0.0], 1.0)], uniform_mass: 1.0, boundary: 0.0 },
        Problem { n: 2, h: MONOTONE_H2, atoms: vec![(vec![0.0, 0.0], 0.5 * b2)], uniform_mass: 0.0, boundary: 0.5 },
        Problem { n: 3, h: MONOTONE_H3, atoms: vec![(vec![0.0; 3], b3)], uniform_mass: 8.0, boundary: 0.0 },
        Problem { n: 3, h: MONOTONE_H3, atoms: vec![(vec![0.0; 3], 8.0 * b3)], uniform_mass: 48.0, boundary: 0.0 },
        Problem { n: 3, h: MONOTONE_H3, atoms: vec![(vec![0.0; 3], b3)], uniform_mass: 16.0, boundary: 0.0 },
        Problem { n: 3, h: MONOTONE_H3, atoms: vec![], uniform_mass: 6.0, boundary: 0.0 },
    ];
    let results: Vec<(usize, f64)> = problems
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            let grid = Grid::ball(p.n, &vec![0.0; p.n], 1.0, p.h).unwrap();
            let density = if p.uniform_mass > 0.0 {
                Some(ScalarField::constant(&grid, p.uniform_mass / grid.volume()))
            } else {
                None
            };
            let atoms = p
                .atoms
                .iter()
                .map(|(x, m)| (math::point_from(x), *m))
                .collect();
            let mu = RadonMeasure::new(p.n, atoms, density).unwrap();
            let bd = p.boundary;
            let problem = DirichletProblem::new(&grid, |_| bd, mu, p.h).unwrap();
            let (w, rep) = problem.solve().unwrap();
            assert!(rep.converged, "problem {k} did not converge");
            let radii: Vec<f64> = (0..10)
                .map(|j| {
                    let lo = (6.0 * p.h).max(0.05);
                    lo * math::powf(0.6 / lo, j as f64 / 9.0)
                })
                .collect();
            let prof = quotient_profile(&w, &radii, 12).unwrap();
            // worst uphill step of the min profile toward r -> 0
            let mut worst: f64 = 0.0;
            for pair in prof.min.windows(2) {
                worst = worst.max(pair[1] - pair[0]);
            }
            (k, worst)
        })
        .collect();
    let worst = results.iter().map(|r| r.1).fold(0.0f64, f64::max);
    (
        worst <= MONOTONE_SLACK,
        format!("worst uphill step {worst:.2e} over {} problems", results.len()),
    )
}

// ── 8: thinness verdicts and inversion duality ───────────────────────

fn thin_chain(n: usize, count: i32) -> PointSet {
    let balls = (1..=count)
        .map(|i| {
            let s = math::pow2(-i);
            let mut c = [0.0; 4];
            c[0] = s;
            Ball {
                center: c,
                radius: s * math::exp(-((i * i) as f64)),
            }
        })
        .collect();
    PointSet::new(n, Center::origin(), SetGeometry::Balls(balls)).unwrap()
}

fn thinness_verdicts() -> (bool, String) {
    let n = 3;
    let chain = thin_chain(n, 12);
    let solid = PointSet::new(n, Center::origin(), SetGeometry::FullAnnuli).unwrap();
    let bounded = PointSet::new(
        n,
        Center::Infinity,
        SetGeometry::Balls(vec![Ball {
            center: [0.3, 0.0, 0.0, 0.0],
            radius: 0.2,
        }]),
    )
    .unwrap();
    let jobs: Vec<(&str, PointSet, i32, i32, Verdict)> = vec![
        ("chain", chain.clone(), 1, 12, Verdict::Thin),
        ("chain dual", chain.invert().unwrap(), 1, 12, Verdict::Thin),
        ("solid", solid.clone(), 1, 9, Verdict::NotThin),
        ("solid dual", solid.invert().unwrap(), 1, 9, Verdict::NotThin),
        ("bounded", bounded.clone(), 1, 10, Verdict::Thin),
        ("bounded dual", bounded.invert().unwrap(), 1, 10, Verdict::Thin),
    ];
    let results: Vec<(String, Verdict, Verdict)> = jobs
        .into_par_iter()
        .map(|(name, set, i0, i1, expect)| {
            let rep = thinness_series(&set, i0, i1, THINNESS_H).unwrap();
            (name.to_string(), rep.verdict, expect)
        })
        .collect();
    let ok = results.iter().all(|(_, got, expect)| got == expect);
    let detail = results
        .iter()
        .map(|(n, got, expect)| format!("{n}: {got:?} (want {expect:?})"))
        .collect::<Vec<_>>()
        .join("; ");
    (ok, detail)
}

// ── 9: the weight construction on random summable series ─────────────

fn weight_construction(seed: u64) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = true;
    for _ in 0..100 {
        let len = rng.gen_range(20..=60);
        let decay: f64 = rng.gen_range(0.3..0.95);
        let series: Vec<f64> = (0..len)
            .map(|i| rng.gen_range(0.1..1.0) * math::powf(decay, i as f64))
            .collect();
        let ws = du_bois_reymond_weights(&series).unwrap();
        let total: f64 = series.iter().sum();
        ok &= ws.weighted_sum <= 2.0 * math::sqrt(total) * (1.0 + 1e-12);
        ok &= ws.weights.windows(2).all(|w| w[1] <= w[0] + 1e-15);
        ok &= ws.weights.last().unwrap() <= &(0.8 * ws.weights[0]);
    }
    (ok, "100 random summable sequences".into())
}

// ── 10: the exponential-integral harness ─────────────────────────────

fn unit_bump(grid: &std::sync::Arc<Grid>, center: &[f64], radius: f64) -> ScalarField {
    let n = grid.dim();
    let c = math::point_from(center);
    let count = grid
        .active_cells()
        .filter(|&l| math::dist(&grid.center_of(l), &c, n) <= radius)
        .count();
    let rho = 1.0 / (count as f64 * grid.cell_volume());
    ScalarField::from_fn(grid, |x| {
        if math::dist(x, &c, n) <= radius {
            rho
        } else {
            0.0
        }
    })
}

fn exp_integral() -> (bool, String) {
    let n = 3;
    let grid = Grid::ball(n, &[0.0; 3], 1.0, BM_H).unwrap();
    let family = vec![
        unit_bump(&grid, &[0.0; 3], 0.5),
        ScalarField::constant(&grid, 1.0 / grid.volume()),
        unit_bump(&grid, &[0.0; 3], 0.125), // 4x concentrated
        {
            // two separated half-mass bumps
            let a = math::point_from(&[0.45, 0.0, 0.0]);
            let b = math::point_from(&[-0.45, 0.0, 0.0]);
            let count = grid
                .active_cells()
                .filter(|&l| {
                    let c = grid.center_of(l);
                    math::dist(&c, &a, n) <= 0.25 || math::dist(&c, &b, n) <= 0.25
                })
                .count();
            let rho = 1.0 / (count as f64 * grid.cell_volume());
            ScalarField::from_fn(&grid, |x| {
                if math::dist(x, &a, n) <= 0.25 || math::dist(x, &b, n) <= 0.25 {
                    rho
                } else {
                    0.0
                }
            })
        },
        unit_bump(&grid, &[0.2, 0.0, 0.0], 0.25),
    ];
    let refs: Vec<&ScalarField> = family.iter().collect();
    let deltas: Vec<f64> = (1..=9).map(|k| 0.1 * k as f64).collect();
    let report = bm_sweep(&refs, &deltas).unwrap();
    let mut ok = report.all_finite && report.family_ratio_max < FAMILY_RATIO_MAX;

    // normalization invariance under f -> 2f
    let base = BMDomain::prepare(family[0].clone()).unwrap();
    let doubled = BMDomain::prepare(family[0].map(|v| 2.0 * v)).unwrap();
    let mut norm_dev: f64 = 0.0;
    for &delta in &[0.2, 0.5, 0.8] {
        let a = base.lhs(delta);
        let b = doubled.lhs(delta);
        norm_dev = norm_dev.max((a - b).abs() / a);
    }
    ok &= norm_dev <= NORMALIZATION_RTOL;
    (
        ok,
        format!(
            "family ratio {:.2}, normalization dev {:.2e}, all finite {}",
            report.family_ratio_max, norm_dev, report.all_finite
        ),
    )
}

// ── 11: sandwich lower ratio on the radial family ────────────────────

fn sandwich_ratio() -> (bool, String) {
    let n = 3;
    let beta = math::sphere_area(n);
    let mu = RadonMeasure::atom(n, &[0.0; 3], beta).unwrap();
    let w = fn_field(n, move |x: &Point| math::ln(1.0 / math::norm(x, n)));
    let mut ratios = Vec::new();
    for k in 0..10 {
        let s = 0.004 * math::powf(20.0, k as f64 / 9.0); // 0.004 .. 0.08
        let r = if k % 2 == 0 {
            math::sqrt(s)
        } else {
            math::powf(s, 0.7)
        };
        let rep = km_sandwich(&w, &mu, &math::point_from(&[s, 0.0, 0.0]), r).unwrap();
        ratios.push(rep.lower_ratio);
    }
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ok = lo > 0.0 && hi.is_finite() && hi / lo < SANDWICH_FACTOR;
    (ok, format!("ratios in [{lo:.4}, {hi:.4}], spread {:.2}", hi / lo))
}

// ── 12: geometry applications ────────────────────────────────────────

fn geometry_applications() -> (bool, String) {
    let n = 3;
    let mut ok = true;
    let mut detail = String::new();

    // flux m against profile m on the capped radial family
    let slopes = [0.25, 0.5, 0.75];
    let rows: Vec<(f64, f64, Option<f64>)> = slopes
        .par_iter()
        .map(|&m| {
            let grid = Grid::boxed(n, &[-2.0; 3], &[2.0; 3], GEOMETRY_H).unwrap();
            let metric =
                ConformalMetric::new(ScalarField::from_fn(&grid, capped_log_profile(n, m, 0.15)))
                    .unwrap();
            let fm = flux_m(&metric, &[0.5, 0.8, 1.1, 1.3, 1.5, 1.7, 1.9]).unwrap();
            (m, fm.m_flux, fm.m_profile)
        })
        .collect();
    for (m, mf, mp) in rows {
        let mp = mp.unwrap_or(f64::NAN);
        let pass = (mf - m).abs() <= GEOMETRY_ATOL && (mp - mf).abs() <= GEOMETRY_ATOL;
        ok &= pass;
        detail += &format!("m={m}: flux {mf:.3}, profile {mp:.3}; ");
    }

    // curvature classifier truth table, horosphere equality included
    let horo = curvature_condition(&[1.0, 1.0, 1.0]).unwrap();
    ok &= horo.strictly_convex && horo.nonneg_ricci && horo.nonneg_sectional;
    let flat = curvature_condition(&[0.0, 0.0, 0.0]).unwrap();
    ok &= !flat.strictly_convex && !flat.nonneg_ricci && !flat.nonneg_sectional;
    let c = 1.0 / (1.0f64).tanh();
    let sphere = curvature_condition(&[c, c, c]).unwrap();
    ok &= sphere.strictly_convex && sphere.nonneg_ricci && sphere.nonneg_sectional;
    let mixed = curvature_condition(&[2.0, 0.4, 2.0]).unwrap();
    ok &= mixed.strictly_convex && !mixed.nonneg_ricci && !mixed.nonneg_sectional;

    // equidistant bound: C = 0 for rho = log|x|
    let rho = fn_field(n, |x: &Point| math::ln(math::norm(x, n)));
    let radii: Vec<f64> = (0..10).map(|k| 1.0 + 1.5 * k as f64).collect();
    let prof = inner_rotation(&rho, &radii, 10).unwrap();
    match equidistant_bound(&prof).unwrap() {
        EquidistantBound::Bound { c } => {
            ok &= c.abs() <= 1e-9;
            detail += &format!("equidistant C = {c:.2e}; ");
        }
        EquidistantBound::Violation { .. } => ok = false,
    }

    // hypersurface asymptote: equidistant -> 1, horosphere -> 0
    let y_radii: Vec<f64> = (0..16)
        .map(|k| math::powf(10.0, -1.0 - 2.5 * k as f64 / 15.0))
        .collect();
    let equi = hypersurface_asymptote(
        &fn_field(n, |x: &Point| math::ln(math::norm(x, n)) + 0.3),
        &y_radii,
        8,
    )
    .unwrap();
    ok &= (equi.m - 1.0).abs() <= 0.02 && equi.m_in_range;
    let horo = hypersurface_asymptote(&fn_field(n, |_: &Point| 0.8), &y_radii, 8).unwrap();
    ok &= horo.m.abs() <= 0.02 && horo.m_in_range;
    detail += &format!("asymptote m: {:.3}, {:.3}", equi.m, horo.m);
    (ok, detail)
}

// ── 13: segment-against-ray capacity probe ───────────────────────────

fn gehring() -> (bool, String) {
    let rows = gehring_probe(&[1.0, 0.5, 0.25], 3, GEHRING_H).unwrap();
    let products: Vec<f64> = rows.iter().filter(|r| !r.skipped).map(|r| r.product).collect();
    if products.len() != 3 {
        return (false, format!("{} products, expected 3", products.len()));
    }
    let lo = products.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = products.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ok = lo > 0.0 && hi / lo < GEHRING_FACTOR;
    (ok, format!("products {products:.4?}, spread {:.2}", hi / lo))
}
