//! Wolff potential W(x, r) = int_0^r mu(B(x,t))^{1/(n-1)} dt/t, the
//! sandwich-estimate harness around it, and the summable-weight construction.
//!
//! The radial mass profile mu(B(x,t)) of an atom-plus-density measure is a
//! step function of t (atoms and density cells arrive at their distances from
//! x), so the potential integrates in closed form segment by segment. The
//! host cell of x is the exception: its density is ramped as rho*v_n*t^n
//! below the cell scale, which is where atoms and densities genuinely differ
//! at the origin of the integral. Atom-only potentials are exact to rounding.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::field::Field;
use crate::math::{self, Point};
use crate::measure::RadonMeasure;

#[derive(Debug, Clone)]
pub struct WolffEvaluation {
    pub point: Point,
    pub radius: f64,
    pub value: f64,
    /// Set when the base point carries an atom; `value` is +inf.
    pub infinite: bool,
    /// Integration segments used.
    pub node_count: usize,
    /// Attribution half-width from lumping density cells at their centers;
    /// zero for purely atomic measures.
    pub quad_error: f64,
}

pub fn wolff_potential(mu: &RadonMeasure, x: &Point, r: f64) -> Result<WolffEvaluation> {
    wolff_potential_impl(mu, x, r, true)
}

/// Same value without the error bracket (skips two extra shifted passes).
pub fn wolff_value(mu: &RadonMeasure, x: &Point, r: f64) -> Result<f64> {
    Ok(wolff_potential_impl(mu, x, r, false)?.value)
}

fn wolff_potential_impl(mu: &RadonMeasure, x: &Point, r: f64, with_error: bool) -> Result<WolffEvaluation> {
    if !(r > 0.0) || !r.is_finite() {
        invalid!("wolff potential needs a positive finite radius, got {r}");
    }
    let n = mu.dim();
    for (p, _) in mu.atoms() {
        if math::dist(p, x, n) == 0.0 {
            return Ok(WolffEvaluation {
                point: *x,
                radius: r,
                value: f64::INFINITY,
                infinite: true,
                node_count: 0,
                quad_error: 0.0,
            });
        }
    }
    let (value, segments) = integrate(mu, x, r, 0.0)?;
    let quad_error = if with_error && mu.density().is_some() {
        let h = mu.density().unwrap().grid().spacing();
        let hi = integrate(mu, x, r, -0.5 * h)?.0;
        let lo = integrate(mu, x, r, 0.5 * h)?.0;
        (hi - lo).abs() / 2.0
    } else {
        0.0
    };
    Ok(WolffEvaluation {
        point: *x,
        radius: r,
        value,
        infinite: false,
        node_count: segments,
        quad_error,
    })
}

/// Exact segment integration of the step-plus-ramp mass profile; `shift`
/// displaces density-cell arrival radii (for the attribution bracket).
fn integrate(mu: &RadonMeasure, x: &Point, r: f64, shift: f64) -> Result<(f64, usize)> {
    let n = mu.dim();
    let inv = 1.0 / (n as f64 - 1.0);

    let mut jumps: Vec<(f64, f64)> = Vec::new();
    for (p, m) in mu.atoms() {
        let d = math::dist(p, x, n);
        if d > 0.0 && d <= r {
            jumps.push((d, *m));
        }
    }
    // host-cell ramp parameters
    let mut ramp_rho = 0.0;
    let mut t_host = 0.0;
    if let Some(f) = mu.density() {
        let grid = f.grid();
        let host = grid.cell_of(x).filter(|&l| grid.is_active(l) && !f.is_singular(l));
        if let Some(hl) = host {
            ramp_rho = f.values()[hl];
            if ramp_rho > 0.0 {
                // equal-volume ball radius: ramp mass matches the cell mass there
                t_host = grid.spacing() * math::powf(1.0 / math::ball_volume(n), 1.0 / n as f64);
            }
        }
        for lin in grid.active_cells() {
            if f.is_singular(lin) || Some(lin) == host {
                continue;
            }
            let m = f.values()[lin] * grid.cell_volume();
            if m <= 0.0 {
                continue;
            }
            let d = (math::dist(&grid.center_of(lin), x, n) + shift).max(1e-14);
            if d <= r {
                jumps.push((d, m));
            }
        }
    }
    jumps.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let v_n = math::ball_volume(n);
    let ramp = |t: f64| {
        if ramp_rho > 0.0 {
            ramp_rho * v_n * math::powf(t.min(t_host), n as f64)
        } else {
            0.0
        }
    };
    // pure-ramp closed form: int_a^b (rho v t^n)^{1/(n-1)} dt/t
    let ramp_primitive = |t: f64| {
        let expo = n as f64 * inv;
        math::powf(ramp_rho * v_n, inv) * math::powf(t, expo) / expo
    };

    let mut breaks: Vec<f64> = jumps.iter().map(|j| j.0).collect();
    if ramp_rho > 0.0 && t_host < r {
        breaks.push(t_host);
    }
    breaks.push(r);
    breaks.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();

    let mut value = 0.0;
    let mut steps = 0.0; // cumulative jump mass
    let mut jump_idx = 0;
    let mut t_prev = 0.0;
    let mut segments = 0usize;
    for &t in &breaks {
        if t > t_prev {
            segments += 1;
            let ramp_active = ramp_rho > 0.0 && t_prev < t_host;
            if !ramp_active {
                let mass = steps + ramp(t_prev);
                if mass > 0.0 {
                    value += math::powf(mass, inv) * math::ln(t / t_prev);
                }
            } else if steps == 0.0 {
                let hi = t.min(t_host);
                value += ramp_primitive(hi) - ramp_primitive(t_prev);
                if t > t_host {
                    let mass = ramp(t_host);
                    value += math::powf(mass, inv) * math::ln(t / t_host);
                }
            } else {
                // mixed ramp+steps segment: short, smooth; log-midpoint rule
                let lo = t_prev.max(1e-300);
                let dl = math::ln(t / lo) / 5.0;
                for j in 0..5 {
                    let tj = lo * math::exp((j as f64 + 0.5) * dl);
                    value += math::powf(steps + ramp(tj), inv) * dl;
                }
            }
        }
        while jump_idx < jumps.len() && jumps[jump_idx].0 <= t {
            steps += jumps[jump_idx].1;
            jump_idx += 1;
        }
        t_prev = t;
    }
    Ok((value, segments))
}

/// Observables of the sandwich estimate around a base point:
/// the lower ratio w(x0)/W(x0,r), the ball infimum, and W at both radii.
#[derive(Debug, Clone)]
pub struct SandwichReport {
    pub w_center: f64,
    pub wolff_r: f64,
    pub wolff_2r: f64,
    pub inf_ball: f64,
    /// w(x0)/W(x0,r); +inf when W = 0 with w > 0 (consistent with the bound).
    pub lower_ratio: f64,
    /// w(x0)/inf ball, the Harnack-type observable when W vanishes.
    pub harnack_ratio: f64,
}

pub fn km_sandwich(
    w: &impl Field,
    mu: &RadonMeasure,
    x0: &Point,
    r: f64,
) -> Result<SandwichReport> {
    let n = mu.dim();
    if !(r > 0.0) {
        invalid!("sandwich radius must be positive");
    }
    // hypothesis: the 3r ball must be inside the field's domain
    let rule = math::sphere_rule(n, 6);
    for (dir, _) in &rule {
        let mut p = [0.0; 4];
        for d in 0..n {
            p[d] = x0[d] + 3.0 * r * dir[d];
        }
        if !w.contains(&p) {
            return Err(Error::OutOfDomain(
                "B(x0, 3r) is not contained in the field's domain".into(),
            ));
        }
    }
    let w0 = w.eval(x0);
    if !w0.is_finite() {
        return Err(Error::NonFinite("field value at the base point".into()));
    }
    let mut inf_ball = w0;
    let shells = 8;
    for k in 0..shells {
        let rho = r * (k as f64 + 0.5) / shells as f64;
        for (dir, _) in &rule {
            let mut p = [0.0; 4];
            for d in 0..n {
                p[d] = x0[d] + rho * dir[d];
            }
            let v = w.eval(&p);
            if v.is_finite() {
                inf_ball = inf_ball.min(v);
            }
        }
    }
    let wolff_r = wolff_value(mu, x0, r)?;
    let wolff_2r = wolff_value(mu, x0, 2.0 * r)?;
    let lower_ratio = if wolff_r > 0.0 {
        w0 / wolff_r
    } else if w0 > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    let harnack_ratio = if inf_ball != 0.0 { w0 / inf_ball } else { f64::INFINITY };
    Ok(SandwichReport {
        w_center: w0,
        wolff_r,
        wolff_2r,
        inf_ball,
        lower_ratio,
        harnack_ratio,
    })
}

/// Weights making a summable series summable against 1/zeta with control:
/// zeta_i = sqrt(tail_i) gives sum mu_i/zeta_i <= 2 sqrt(sum mu_i) by the
/// telescoping square-root bound, and zeta_i -> 0 along the tail.
#[derive(Debug, Clone)]
pub struct WeightSequence {
    pub input: Vec<f64>,
    pub weights: Vec<f64>,
    pub weighted_sum: f64,
    pub bound: f64,
}

pub fn du_bois_reymond_weights(series: &[f64]) -> Result<WeightSequence> {
    if series.is_empty() {
        invalid!("empty series");
    }
    for &m in series {
        if m < 0.0 || !m.is_finite() {
            invalid!("series terms must be finite and nonnegative, got {m}");
        }
    }
    let last_positive = match series.iter().rposition(|&m| m > 0.0) {
        Some(i) => i,
        None => {
            return Ok(WeightSequence {
                input: Vec::new(),
                weights: Vec::new(),
                weighted_sum: 0.0,
                bound: 0.0,
            })
        }
    };
    let input: Vec<f64> = series[..=last_positive].to_vec();
    let mut tails = vec_tails(&input);
    let weights: Vec<f64> = tails.drain(..).map(math::sqrt).collect();
    let mut weighted_sum = 0.0;
    for (m, z) in input.iter().zip(&weights) {
        if *m > 0.0 {
            weighted_sum += m / z;
        }
    }
    let bound = 2.0 * math::sqrt(input.iter().sum::<f64>());
    Ok(WeightSequence {
        input,
        weights,
        weighted_sum,
        bound,
    })
}

fn vec_tails(series: &[f64]) -> Vec<f64> {
    let mut tails = alloc::vec![0.0; series.len()];
    let mut acc = 0.0;
    for (i, &m) in series.iter().enumerate().rev() {
        acc += m;
        tails[i] = acc;
    }
    tails
}

/// W(y_k, |y_k|/2) / log(1/|y_k|) along a path toward the origin: the
/// quantity whose vanishing removes the exceptional thin set.
pub fn potential_quotient_decay(mu: &RadonMeasure, path: &[Point]) -> Result<Vec<f64>> {
    let n = mu.dim();
    let mut out = Vec::with_capacity(path.len());
    for y in path {
        let r = math::norm(y, n);
        if !(r > 0.0 && r < 1.0) {
            invalid!("path points must satisfy 0 < |y| < 1");
        }
        let w = wolff_value(mu, y, r / 2.0)?;
        out.push(w / math::ln(1.0 / r));
    }
    Ok(out)
}
