//! Float shims and small numeric helpers shared across the crate.
//!
//! Transcendental functions go through here so the crate builds without
//! `std` (via `libm`) and with it (native intrinsics).

use alloc::vec::Vec;

pub use core::f64::consts::PI;

macro_rules! shim1 {
    ($name:ident, $libm:ident) => {
        #[inline]
        pub fn $name(x: f64) -> f64 {
            #[cfg(feature = "std")]
            {
                x.$name()
            }
            #[cfg(not(feature = "std"))]
            {
                libm::$libm(x)
            }
        }
    };
}

shim1!(ln, log);
shim1!(exp, exp);
shim1!(sqrt, sqrt);
shim1!(sin, sin);
shim1!(cos, cos);
shim1!(asin, asin);
shim1!(acos, acos);
shim1!(floor, floor);
shim1!(ceil, ceil);
shim1!(abs, fabs);

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.powf(y)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::pow(x, y)
    }
}

/// Exact power of two; dyadic annulus radii must be bit-reproducible.
#[inline]
pub fn pow2(i: i32) -> f64 {
    #[cfg(feature = "std")]
    {
        (2.0f64).powi(i)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::scalbn(1.0, i)
    }
}

/// Surface area of the unit sphere S^{n-1} in R^n.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        _ => panic!("unsupported dimension {n}"),
    }
}

/// Volume of the unit ball in R^n.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

/// Point in R^n, padded with zeros beyond the active dimension.
pub type Point = [f64; 4];

pub fn point_from(coords: &[f64]) -> Point {
    let mut p = [0.0; 4];
    p[..coords.len()].copy_from_slice(coords);
    p
}

pub fn dist(a: &Point, b: &Point, n: usize) -> f64 {
    let mut s = 0.0;
    for d in 0..n {
        let t = a[d] - b[d];
        s += t * t;
    }
    sqrt(s)
}

pub fn norm(a: &Point, n: usize) -> f64 {
    let mut s = 0.0;
    for d in 0..n {
        s += a[d] * a[d];
    }
    sqrt(s)
}

pub fn dot(a: &Point, b: &Point, n: usize) -> f64 {
    let mut s = 0.0;
    for d in 0..n {
        s += a[d] * b[d];
    }
    s
}

/// Least-squares line through (x_i, y_i); returns (slope, intercept).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points for a line fit");
    let m = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = m * sxx - sx * sx;
    if denom == 0.0 {
        return (0.0, sy / m);
    }
    let slope = (m * sxy - sx * sy) / denom;
    (slope, (sy - slope * sx) / m)
}

/// Midpoint product rule on the unit sphere S^{n-1}.
///
/// Weights are normalized so they sum to `sphere_area(n)` exactly, which
/// makes the rule exact for constants (radial integrands in particular).
pub fn sphere_rule(n: usize, res: usize) -> Vec<(Point, f64)> {
    assert!(res >= 2);
    let mut nodes = Vec::new();
    match n {
        2 => {
            let k = 4 * res;
            for j in 0..k {
                let th = 2.0 * PI * (j as f64 + 0.5) / k as f64;
                nodes.push((point_from(&[cos(th), sin(th)]), 1.0));
            }
        }
        3 => {
            let (a, b) = (res, 2 * res);
            for i in 0..a {
                let th = PI * (i as f64 + 0.5) / a as f64;
                let w = sin(th);
                for j in 0..b {
                    let ph = 2.0 * PI * (j as f64 + 0.5) / b as f64;
                    let dir = [sin(th) * cos(ph), sin(th) * sin(ph), cos(th), 0.0];
                    nodes.push((dir, w));
                }
            }
        }
        4 => {
            let (a, b, c) = (res, res, 2 * res);
            for i in 0..a {
                let ps = PI * (i as f64 + 0.5) / a as f64;
                for j in 0..b {
                    let th = PI * (j as f64 + 0.5) / b as f64;
                    let w = sin(ps) * sin(ps) * sin(th);
                    for k in 0..c {
                        let ph = 2.0 * PI * (k as f64 + 0.5) / c as f64;
                        let dir = [
                            sin(ps) * sin(th) * cos(ph),
                            sin(ps) * sin(th) * sin(ph),
                            sin(ps) * cos(th),
                            cos(ps),
                        ];
                        nodes.push((dir, w));
                    }
                }
            }
        }
        _ => panic!("unsupported dimension {n}"),
    }
    let total: f64 = nodes.iter().map(|(_, w)| *w).sum();
    let scale = sphere_area(n) / total;
    for (_, w) in nodes.iter_mut() {
        *w *= scale;
    }
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_rule_weights_sum_to_area() {
        for n in 2..=4 {
            let rule = sphere_rule(n, 8);
            let sum: f64 = rule.iter().map(|(_, w)| w).sum();
            assert!((sum - sphere_area(n)).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_rule_integrates_linear_to_zero() {
        // odd integrand over the sphere
        for n in 2..=4 {
            let rule = sphere_rule(n, 10);
            let s: f64 = rule.iter().map(|(d, w)| d[0] * w).sum();
            assert!(abs(s) < 1e-10, "n={n}: {s}");
        }
    }

    #[test]
    fn linear_fit_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let (m, b) = linear_fit(&xs, &ys);
        assert!(abs(m - 2.0) < 1e-12 && abs(b - 1.0) < 1e-12);
    }

    #[test]
    fn pow2_is_exact() {
        assert_eq!(pow2(3), 8.0);
        assert_eq!(pow2(-2), 0.25);
    }
}
