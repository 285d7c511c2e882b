//! Scenario runners behind the CLI subcommands: each consumes its config
//! section, runs the library, and writes JSON reports plus CSV series under
//! the output directory.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use nlpot::annuli::Center;
use nlpot::asymptotics::{blow_down, quotient_profile};
use nlpot::capacity::{capacity, Condenser};
use nlpot::expint::bm_sweep;
use nlpot::field::fn_field;
use nlpot::geometry::{
    capped_log_profile, flux_m, hypersurface_asymptote, inner_rotation, ConformalMetric,
};
use nlpot::math::{self, Point};
use nlpot::nlaplace::DirichletProblem;
use nlpot::thinness::{thinness_series, Ball, PointSet, SetGeometry};
use nlpot::wolff::wolff_potential;
use nlpot::{Grid, ScalarField};

use crate::config::{BoundaryConfig, Config, ConfigError};
use crate::formats;
use crate::report::{write_report, ReportMeta};

pub struct RunContext {
    pub out: std::path::PathBuf,
    pub seed: u64,
    pub threads: usize,
    pub grid_h_override: Option<f64>,
    pub epsilon_override: Option<f64>,
}

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "{m}"),
            RunError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.0)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

fn config_err(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

fn build_grid(cfg: &Config, ctx: &RunContext) -> Result<std::sync::Arc<Grid>, RunError> {
    let mut gc = cfg
        .grid
        .clone()
        .ok_or_else(|| config_err("missing [grid] section"))?;
    if let Some(h) = ctx.grid_h_override {
        gc.h = h;
    }
    Ok(gc.build()?)
}

pub fn run_solve(cfg: &Config, ctx: &RunContext) -> Result<(), RunError> {
    let grid = build_grid(cfg, ctx)?;
    let mc = cfg
        .measure
        .clone()
        .ok_or_else(|| config_err("missing [measure] section"))?;
    let mu = mc.build(&grid)?;
    let sc = cfg.solve.clone().unwrap_or(crate::config::SolveConfig {
        epsilon: None,
        boundary: None,
    });
    let eps = ctx
        .epsilon_override
        .or(sc.epsilon)
        .unwrap_or(grid.spacing());
    let boundary_value = match &sc.boundary {
        None => 0.0,
        Some(BoundaryConfig::Constant(v)) => *v,
        Some(BoundaryConfig::Named(name)) if name == "zero" => 0.0,
        Some(BoundaryConfig::Named(name)) => {
            return Err(config_err(format!("[solve] unknown boundary \"{name}\"")))
        }
    };
    let problem = DirichletProblem::new(&grid, |_| boundary_value, mu.clone(), eps)
        .map_err(|e| config_err(format!("[solve] {e}")))?;
    let (field, rep) = problem
        .solve()
        .map_err(|e| config_err(format!("[solve] {e}")))?;

    formats::write_field(&ctx.out.join("solution.bin"), &field)?;
    formats::write_field_csv(&ctx.out.join("solution.csv"), &field)?;
    formats::write_measure_json(&ctx.out.join("measure.json"), &mu, None)?;

    #[derive(Serialize)]
    struct Body {
        iterations: usize,
        final_energy: f64,
        residual_norm: f64,
        converged: bool,
        energies: Vec<f64>,
    }
    let meta = ReportMeta::new("solve", ctx.seed, ctx.threads)
        .with_grid(grid.spacing())
        .with_epsilon(eps);
    write_report(
        &ctx.out.join("report.json"),
        meta,
        Body {
            iterations: rep.iterations,
            final_energy: rep.final_energy,
            residual_norm: rep.residual_norm,
            converged: rep.converged,
            energies: rep.energies,
        },
    )?;
    Ok(())
}

pub fn run_capacity(cfg: &Config, ctx: &RunContext, oracle: Option<&str>) -> Result<(), RunError> {
    let grid = build_grid(cfg, ctx)?;
    let cc = cfg
        .capacity
        .clone()
        .ok_or_else(|| config_err("missing [capacity] section"))?;
    let eps = ctx
        .epsilon_override
        .or(cc.epsilon)
        .unwrap_or(grid.spacing());
    let n = grid.dim();
    let rho = cc.plate_radius;
    let solve_at = |g: &std::sync::Arc<Grid>| -> Result<(f64, bool, usize), RunError> {
        let condenser = Condenser::new(g, |x| math::norm(x, n) <= rho)
            .map_err(|e| config_err(format!("[capacity] {e}")))?;
        let r = capacity(&condenser, eps.min(g.spacing()))
            .map_err(|e| config_err(format!("[capacity] {e}")))?;
        Ok((r.value, r.report.converged, r.report.iterations))
    };
    let (value, converged, iterations) = solve_at(&grid)?;
    let richardson = if cc.richardson.unwrap_or(false) {
        let fine = match grid.region() {
            nlpot::Region::Annulus { center, r_in, r_out } => Grid::annulus(
                n,
                &center[..n],
                *r_in,
                *r_out,
                grid.spacing() / 2.0,
            )
            .map_err(|e| config_err(format!("[capacity] {e}")))?,
            nlpot::Region::Box => return Err(config_err("[capacity] richardson needs a ball grid")),
        };
        let (v2, _, _) = solve_at(&fine)?;
        Some(2.0 * v2 - value)
    } else {
        None
    };
    let closed_form = match (oracle, grid.region()) {
        (Some("radial"), nlpot::Region::Annulus { r_out, .. }) => Some(
            math::sphere_area(n) * math::powf(math::ln(r_out / rho), 1.0 - n as f64),
        ),
        (Some(other), _) if other != "radial" => {
            return Err(config_err(format!("unknown oracle \"{other}\"")))
        }
        _ => None,
    };

    #[derive(Serialize)]
    struct Body {
        value: f64,
        richardson: Option<f64>,
        closed_form: Option<f64>,
        converged: bool,
        iterations: usize,
        plate_radius: f64,
        cells: usize,
    }
    let meta = ReportMeta::new("capacity", ctx.seed, ctx.threads)
        .with_grid(grid.spacing())
        .with_epsilon(eps);
    write_report(
        &ctx.out.join("report.json"),
        meta,
        Body {
            value,
            richardson,
            closed_form,
            converged,
            iterations,
            plate_radius: rho,
            cells: grid.active_count(),
        },
    )?;
    Ok(())
}

pub fn run_wolff(cfg: &Config, ctx: &RunContext) -> Result<(), RunError> {
    let grid = build_grid(cfg, ctx)?;
    let mc = cfg
        .measure
        .clone()
        .ok_or_else(|| config_err("missing [measure] section"))?;
    let mu = mc.build(&grid)?;
    let wc = cfg
        .wolff
        .clone()
        .ok_or_else(|| config_err("missing [wolff] section"))?;
    let n = grid.dim();
    let mut csv = std::io::BufWriter::new(std::fs::File::create(ctx.out.join("wolff.csv"))?);
    write!(csv, "{}", header(n))?;
    for (k, p) in wc.points.iter().enumerate() {
        if p.len() != n {
            return Err(config_err(format!(
                "[wolff] points[{k}] has {} coordinates, n = {n}",
                p.len()
            )));
        }
        let x = math::point_from(p);
        for &r in &wc.radii {
            let w = wolff_potential(&mu, &x, r).map_err(|e| config_err(format!("[wolff] {e}")))?;
            for d in 0..n {
                write!(csv, "{},", x[d])?;
            }
            writeln!(csv, "{r},{},{}", w.value, w.quad_error)?;
        }
    }
    csv.flush()?;
    let meta = ReportMeta::new("wolff", ctx.seed, ctx.threads).with_grid(grid.spacing());
    write_report(
        &ctx.out.join("report.json"),
        meta,
        serde_json::json!({ "points": wc.points.len(), "radii": wc.radii }),
    )?;
    return Ok(());

    fn header(n: usize) -> String {
        let mut s = String::new();
        for d in 0..n {
            s += &format!("x{},", d + 1);
        }
        s + "r,w,err\n"
    }
}

pub fn run_thinness(cfg: &Config, ctx: &RunContext) -> Result<(), RunError> {
    let tc = cfg
        .thinness
        .clone()
        .ok_or_else(|| config_err("missing [thinness] section"))?;
    let center = match tc.center.as_deref() {
        None | Some("origin") => Center::origin(),
        Some("infinity") => Center::Infinity,
        Some(other) => return Err(config_err(format!("[thinness] unknown center \"{other}\""))),
    };
    let geometry = match tc.set.as_str() {
        "empty" => SetGeometry::Empty,
        "full" => SetGeometry::FullAnnuli,
        "chain" => {
            let count = tc.chain_count.unwrap_or(tc.i_max);
            SetGeometry::Balls(
                (1..=count)
                    .map(|i| {
                        let s = math::pow2(-i);
                        let mut c = [0.0; 4];
                        c[0] = s;
                        Ball {
                            center: c,
                            radius: s * math::exp(-((i * i) as f64)),
                        }
                    })
                    .collect(),
            )
        }
        "balls" => {
            let rows = tc
                .balls
                .clone()
                .ok_or_else(|| config_err("[thinness] set \"balls\" needs balls"))?;
            let mut balls = Vec::new();
            for (k, row) in rows.iter().enumerate() {
                if row.len() != tc.n + 1 {
                    return Err(config_err(format!(
                        "[thinness] balls[{k}] needs {} coordinates plus a radius",
                        tc.n
                    )));
                }
                balls.push(Ball {
                    center: math::point_from(&row[..tc.n]),
                    radius: row[tc.n],
                });
            }
            SetGeometry::Balls(balls)
        }
        other => return Err(config_err(format!("[thinness] unknown set \"{other}\""))),
    };
    let mut set = PointSet::new(tc.n, center, geometry)
        .map_err(|e| config_err(format!("[thinness] {e}")))?;
    if tc.invert.unwrap_or(false) {
        set = set.invert().map_err(|e| config_err(format!("[thinness] {e}")))?;
    }
    let h_ref = ctx.grid_h_override.unwrap_or(tc.h_ref);
    let rep = thinness_series(&set, tc.i_min, tc.i_max, h_ref)
        .map_err(|e| config_err(format!("[thinness] {e}")))?;

    let mut csv = std::io::BufWriter::new(std::fs::File::create(ctx.out.join("series.csv"))?);
    writeln!(csv, "i,c_i,weighted,partial_sum,method")?;
    for (e, s) in rep.entries.iter().zip(&rep.partial_sums) {
        writeln!(
            csv,
            "{},{},{},{},{:?}",
            e.index, e.value, e.weighted, s, e.method
        )?;
    }
    csv.flush()?;
    let meta = ReportMeta::new("thinness", ctx.seed, ctx.threads).with_grid(h_ref);
    write_report(
        &ctx.out.join("report.json"),
        meta,
        serde_json::json!({
            "verdict": format!("{:?}", rep.verdict),
            "indices": rep.entries.len(),
            "truncated": rep.truncated,
            "final_partial_sum": rep.partial_sums.last(),
        }),
    )?;
    Ok(())
}

pub fn run_blowdown(cfg: &Config, ctx: &RunContext) -> Result<(), RunError> {
    let bc = cfg
        .blowdown
        .clone()
        .ok_or_else(|| config_err("missing [blowdown] section"))?;
    let n = bc.n;
    let slope = bc.slope;
    let ripple = bc.ripple.unwrap_or(0.0);
    let w = fn_field(n, move |x: &Point| {
        let r = math::norm(x, n);
        slope * math::ln(1.0 / r) + ripple * math::sin(5.0 * r)
    });
    let radii = bc.radii.clone().unwrap_or_else(|| {
        (0..24)
            .map(|k| math::powf(10.0, -1.0 - 4.0 * k as f64 / 23.0))
            .collect()
    });
    let profile =
        quotient_profile(&w, &radii, 10).map_err(|e| config_err(format!("[blowdown] {e}")))?;
    let mut csv = std::io::BufWriter::new(std::fs::File::create(ctx.out.join("profile.csv"))?);
    writeln!(csv, "r,min,median,max,quotient_min")?;
    for k in 0..profile.radii.len() {
        writeln!(
            csv,
            "{},{},{},{},{}",
            profile.radii[k], profile.min[k], profile.median[k], profile.max[k], profile.min[k]
        )?;
    }
    csv.flush()?;
    // one blow-down field per requested scale
    for (k, &scale) in bc.scales.iter().enumerate() {
        let bd = blow_down(&w, scale, 0.5, 2.0, 0.05, None)
            .map_err(|e| config_err(format!("[blowdown] {e}")))?;
        formats::write_field_csv(&ctx.out.join(format!("blowdown_{k}.csv")), &bd.field)?;
    }
    let meta = ReportMeta::new("blowdown", ctx.seed, ctx.threads);
    write_report(
        &ctx.out.join("report.json"),
        meta,
        serde_json::json!({
            "slope_estimate": profile.slope_m,
            "gamma_minus": profile.gamma_minus,
            "lower_bound_c": profile.lower_bound_c,
            "scales": bc.scales,
        }),
    )?;
    Ok(())
}

pub fn run_bm(cfg: &Config, ctx: &RunContext) -> Result<(), RunError> {
    let bc = cfg
        .bm
        .clone()
        .ok_or_else(|| config_err("missing [bm] section"))?;
    let h = ctx.grid_h_override.unwrap_or(bc.h);
    let grid = Grid::ball(bc.n, &vec![0.0; bc.n], 1.0, h)
        .map_err(|e| config_err(format!("[bm] {e}")))?;
    let mut family = Vec::new();
    for &radius in &bc.bump_radii {
        let count = grid
            .active_cells()
            .filter(|&l| math::norm(&grid.center_of(l), bc.n) <= radius)
            .count();
        if count == 0 {
            return Err(config_err(format!(
                "[bm] bump radius {radius} is below the grid resolution"
            )));
        }
        let rho = 1.0 / (count as f64 * grid.cell_volume());
        family.push(ScalarField::from_fn(&grid, move |x| {
            if math::norm(x, bc.n) <= radius {
                rho
            } else {
                0.0
            }
        }));
    }
    let refs: Vec<&ScalarField> = family.iter().collect();
    let report = bm_sweep(&refs, &bc.deltas).map_err(|e| config_err(format!("[bm] {e}")))?;
    let mut csv = std::io::BufWriter::new(std::fs::File::create(ctx.out.join("sweep.csv"))?);
    writeln!(csv, "member,delta,lhs,envelope")?;
    for row in &report.rows {
        writeln!(csv, "{},{},{},{}", row.member, row.delta, row.lhs, row.envelope)?;
    }
    csv.flush()?;
    let meta = ReportMeta::new("bm", ctx.seed, ctx.threads).with_grid(h);
    write_report(
        &ctx.out.join("report.json"),
        meta,
        serde_json::json!({
            "family_ratio_max": report.family_ratio_max,
            "all_finite": report.all_finite,
            "fitted_c": report.fitted_c,
        }),
    )?;
    Ok(())
}

pub fn run_geometry(cfg: &Config, ctx: &RunContext) -> Result<(), RunError> {
    let gc = cfg
        .geometry
        .clone()
        .ok_or_else(|| config_err("missing [geometry] section"))?;
    match gc.mode.as_str() {
        "conformal" => {
            let n = 3;
            let m = gc.m.unwrap_or(0.5);
            let cap = gc.cap_radius.unwrap_or(0.15);
            let h = ctx.grid_h_override.or(gc.h).unwrap_or(1.0 / 20.0);
            let grid = Grid::boxed(n, &[-2.0; 3], &[2.0; 3], h)
                .map_err(|e| config_err(format!("[geometry] {e}")))?;
            let metric = ConformalMetric::new(ScalarField::from_fn(
                &grid,
                capped_log_profile(n, m, cap),
            ))
            .map_err(|e| config_err(format!("[geometry] {e}")))?;
            let radii = gc
                .flux_radii
                .clone()
                .unwrap_or_else(|| vec![0.5, 0.8, 1.1, 1.3, 1.5, 1.7, 1.9]);
            let fm = flux_m(&metric, &radii).map_err(|e| config_err(format!("[geometry] {e}")))?;
            let mut csv =
                std::io::BufWriter::new(std::fs::File::create(ctx.out.join("flux.csv"))?);
            writeln!(csv, "r,s")?;
            for (r, s) in fm.radii.iter().zip(&fm.s_values) {
                writeln!(csv, "{r},{s}")?;
            }
            csv.flush()?;
            let meta = ReportMeta::new("geometry", ctx.seed, ctx.threads)
                .with_grid(h)
                .tolerance("slope_agreement", 0.05);
            write_report(
                &ctx.out.join("report.json"),
                meta,
                serde_json::json!({
                    "mode": "conformal",
                    "m_input": m,
                    "m_flux": fm.m_flux,
                    "m_profile": fm.m_profile,
                    "difference": fm.difference,
                    "stabilized": fm.stabilized,
                }),
            )?;
        }
        "hypersurface" => {
            let n = 3;
            let slope = gc.slope.unwrap_or(1.0);
            let rho = fn_field(n, move |x: &Point| slope * math::ln(math::norm(x, n)));
            let radii: Vec<f64> = (0..12).map(|k| 1.0 + 1.2 * k as f64).collect();
            let profile = inner_rotation(&rho, &radii, 10)
                .map_err(|e| config_err(format!("[geometry] {e}")))?;
            let mut csv =
                std::io::BufWriter::new(std::fs::File::create(ctx.out.join("profile.csv"))?);
            writeln!(csv, "r,sup")?;
            for (r, s) in profile.radii.iter().zip(&profile.sup) {
                writeln!(csv, "{r},{s}")?;
            }
            csv.flush()?;
            let y_radii: Vec<f64> = (0..16)
                .map(|k| math::powf(10.0, -1.0 - 2.5 * k as f64 / 15.0))
                .collect();
            let rep = hypersurface_asymptote(&rho, &y_radii, 8)
                .map_err(|e| config_err(format!("[geometry] {e}")))?;
            let meta = ReportMeta::new("geometry", ctx.seed, ctx.threads);
            write_report(
                &ctx.out.join("report.json"),
                meta,
                serde_json::json!({
                    "mode": "hypersurface",
                    "m": rep.m,
                    "upper_c": rep.upper_c,
                    "m_in_range": rep.m_in_range,
                    "nondecreasing": profile.nondecreasing,
                    "log_convex": profile.log_convex,
                }),
            )?;
        }
        other => return Err(config_err(format!("[geometry] unknown mode \"{other}\""))),
    }
    Ok(())
}

/// Run the acceptance suite, print the table, write the JSON report, and
/// report overall success.
pub fn run_acceptance(ctx: &RunContext, quiet: bool) -> Result<bool, RunError> {
    let results = crate::acceptance::run_all(ctx.seed);
    let all_ok = results.iter().all(|r| r.passed);
    let mut lines = Vec::new();
    for r in &results {
        let line = format!(
            "{} criterion {:2}: {} — {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.detail
        );
        if !quiet {
            println!("{line}");
        }
        lines.push(line);
    }
    let meta = ReportMeta::new("acceptance", ctx.seed, ctx.threads);
    #[derive(Serialize)]
    struct Item {
        id: usize,
        name: String,
        passed: bool,
        detail: String,
    }
    let body: Vec<Item> = results
        .iter()
        .map(|r| Item {
            id: r.id,
            name: r.name.to_string(),
            passed: r.passed,
            detail: r.detail.clone(),
        })
        .collect();
    write_report(&ctx.out.join("acceptance.json"), meta, body)?;
    std::fs::write(ctx.out.join("acceptance.txt"), lines.join("\n") + "\n")?;
    Ok(all_ok)
}

pub fn ensure_out_dir(path: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(path)?;
    Ok(())
}
