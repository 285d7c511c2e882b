//! Dyadic annuli around a finite center or around infinity: the index
//! geometry behind the thinness series.

use crate::error::{invalid, Result};
use crate::math::{self, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Center {
    Point(Point),
    Infinity,
}

impl Center {
    pub fn origin() -> Center {
        Center::Point([0.0; 4])
    }
}

/// Closed tight annulus and open enlarged annulus radii for one index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusPair {
    pub omega_in: f64,
    pub omega_out: f64,
    pub big_in: f64,
    pub big_out: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct DyadicAnnuli {
    center: Center,
    i_min: i32,
    i_max: i32,
}

impl DyadicAnnuli {
    pub fn new(center: Center, i_min: i32, i_max: i32) -> Result<DyadicAnnuli> {
        if i_min > i_max {
            invalid!("index range is empty: [{i_min}, {i_max}]");
        }
        Ok(DyadicAnnuli { center, i_min, i_max })
    }

    pub fn center(&self) -> Center {
        self.center
    }

    pub fn indices(&self) -> impl Iterator<Item = i32> {
        self.i_min..=self.i_max
    }

    pub fn i_min(&self) -> i32 {
        self.i_min
    }

    pub fn i_max(&self) -> i32 {
        self.i_max
    }

    pub fn pair(&self, i: i32) -> AnnulusPair {
        radii(self.center, i)
    }

    /// Tight annulus membership (closed).
    pub fn in_omega(&self, i: i32, x: &Point, n: usize) -> bool {
        let r = self.pair(i);
        let d = self.radial(x, n);
        r.omega_in <= d && d <= r.omega_out
    }

    /// Enlarged annulus membership (open).
    pub fn in_big(&self, i: i32, x: &Point, n: usize) -> bool {
        let r = self.pair(i);
        let d = self.radial(x, n);
        r.big_in < d && d < r.big_out
    }

    fn radial(&self, x: &Point, n: usize) -> f64 {
        match self.center {
            Center::Point(c) => math::dist(x, &c, n),
            Center::Infinity => math::norm(x, n),
        }
    }

    /// Factor mapping annulus `i` onto the reference annulus (index 0).
    pub fn scale_to_reference(&self, i: i32) -> f64 {
        match self.center {
            Center::Point(_) => math::pow2(i),
            Center::Infinity => math::pow2(-i),
        }
    }
}

/// Radii for one dyadic index; exact powers of two.
pub fn radii(center: Center, i: i32) -> AnnulusPair {
    match center {
        Center::Point(_) => AnnulusPair {
            omega_in: math::pow2(-i - 1),
            omega_out: math::pow2(-i),
            big_in: math::pow2(-i - 2),
            big_out: math::pow2(-i + 1),
        },
        Center::Infinity => AnnulusPair {
            omega_in: math::pow2(i),
            omega_out: math::pow2(i + 1),
            big_in: math::pow2(i - 1),
            big_out: math::pow2(i + 2),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radii_match_definition() {
        let r = radii(Center::origin(), 1);
        assert_eq!((r.omega_in, r.omega_out), (0.25, 0.5));
        assert_eq!((r.big_in, r.big_out), (0.125, 1.0));
        let r = radii(Center::Infinity, 0);
        assert_eq!((r.omega_in, r.omega_out), (1.0, 2.0));
        assert_eq!((r.big_in, r.big_out), (0.5, 4.0));
    }

    #[test]
    fn tight_annulus_nested_in_enlarged() {
        for center in [Center::origin(), Center::Infinity] {
            let ann = DyadicAnnuli::new(center, -3, 12).unwrap();
            for i in ann.indices() {
                let r = ann.pair(i);
                assert!(r.big_in < r.omega_in && r.omega_out < r.big_out);
            }
        }
    }

    #[test]
    fn annuli_tile_the_punctured_ball() {
        // consecutive tight annuli share exactly one sphere
        let ann = DyadicAnnuli::new(Center::origin(), 0, 20).unwrap();
        for i in ann.indices().take(19) {
            let a = ann.pair(i);
            let b = ann.pair(i + 1);
            assert_eq!(b.omega_out, a.omega_in);
        }
        // sampled points of the punctured ball land in some annulus
        for k in 1..500 {
            let d = 0.002 * k as f64;
            if d > 1.0 {
                break;
            }
            let x = math::point_from(&[d, 0.0]);
            let hit = ann.indices().filter(|&i| ann.in_omega(i, &x, 2)).count();
            assert!(hit >= 1, "no annulus covers radius {d}");
        }
    }

    #[test]
    fn empty_range_rejected() {
        assert!(DyadicAnnuli::new(Center::Infinity, 3, 2).is_err());
    }
}
