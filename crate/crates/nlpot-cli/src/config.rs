//! Scenario configuration: one TOML (or JSON) file per run, with sections
//! mirroring the library modules. Unknown keys are rejected so a typo names
//! itself in the error.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use nlpot::{Grid, RadonMeasure, ScalarField};

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub grid: Option<GridConfig>,
    pub measure: Option<MeasureConfig>,
    pub solve: Option<SolveConfig>,
    pub capacity: Option<CapacityConfig>,
    pub wolff: Option<WolffConfig>,
    pub thinness: Option<ThinnessConfig>,
    pub blowdown: Option<BlowdownConfig>,
    pub bm: Option<BmConfig>,
    pub geometry: Option<GeometryConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub h: f64,
    pub shape: String, // "ball" | "annulus" | "box"
    pub radius: Option<f64>,
    pub r_in: Option<f64>,
    pub r_out: Option<f64>,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    pub center: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    /// Each atom is [x_1, ..., x_n, mass].
    pub atoms: Option<Vec<Vec<f64>>>,
    /// Constant density over the grid, by total mass.
    pub uniform_mass: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub epsilon: Option<f64>,
    /// "zero" or a constant value.
    pub boundary: Option<BoundaryConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BoundaryConfig {
    Constant(f64),
    Named(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityConfig {
    /// Plate = closed ball of this radius about the grid center.
    pub plate_radius: f64,
    pub epsilon: Option<f64>,
    /// Closed-form comparison rows for `--oracle radial`.
    pub richardson: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WolffConfig {
    pub points: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThinnessConfig {
    /// "chain" | "full" | "empty" | "balls"
    pub set: String,
    pub center: Option<String>, // "origin" | "infinity"
    pub i_min: i32,
    pub i_max: i32,
    pub h_ref: f64,
    pub chain_count: Option<i32>,
    /// Explicit balls [x_1.., radius] when set = "balls".
    pub balls: Option<Vec<Vec<f64>>>,
    pub n: usize,
    pub invert: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowdownConfig {
    pub n: usize,
    /// Synthetic profile slope and ripple amplitude.
    pub slope: f64,
    pub ripple: Option<f64>,
    pub scales: Vec<f64>,
    pub radii: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BmConfig {
    pub n: usize,
    pub h: f64,
    pub deltas: Vec<f64>,
    /// Bump radii of the unit-mass family (centered).
    pub bump_radii: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// "conformal" | "hypersurface"
    pub mode: String,
    pub m: Option<f64>,
    pub cap_radius: Option<f64>,
    pub h: Option<f64>,
    pub flux_radii: Option<Vec<f64>>,
    /// Height profile slope for the hypersurface mode.
    pub slope: Option<f64>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn load(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let is_json = path.extension().map(|e| e == "json").unwrap_or(false)
        || text.trim_start().starts_with('{');
    if is_json {
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{e}")))
    } else {
        toml::from_str(&text).map_err(|e| ConfigError(format!("{e}")))
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<Arc<Grid>, ConfigError> {
        let err = |m: String| ConfigError(m);
        let center = self.center.clone().unwrap_or_else(|| vec![0.0; self.n]);
        if center.len() != self.n {
            return Err(err(format!(
                "[grid] center has {} coordinates, n = {}",
                center.len(),
                self.n
            )));
        }
        match self.shape.as_str() {
            "ball" => {
                let r = self
                    .radius
                    .ok_or_else(|| err("[grid] shape \"ball\" needs radius".into()))?;
                Grid::ball(self.n, &center, r, self.h).map_err(|e| err(format!("[grid] {e}")))
            }
            "annulus" => {
                let r_in = self
                    .r_in
                    .ok_or_else(|| err("[grid] shape \"annulus\" needs r_in".into()))?;
                let r_out = self
                    .r_out
                    .ok_or_else(|| err("[grid] shape \"annulus\" needs r_out".into()))?;
                Grid::annulus(self.n, &center, r_in, r_out, self.h)
                    .map_err(|e| err(format!("[grid] {e}")))
            }
            "box" => {
                let lo = self
                    .lo
                    .clone()
                    .ok_or_else(|| err("[grid] shape \"box\" needs lo".into()))?;
                let hi = self
                    .hi
                    .clone()
                    .ok_or_else(|| err("[grid] shape \"box\" needs hi".into()))?;
                Grid::boxed(self.n, &lo, &hi, self.h).map_err(|e| err(format!("[grid] {e}")))
            }
            other => Err(err(format!("[grid] unknown shape \"{other}\""))),
        }
    }
}

impl MeasureConfig {
    pub fn build(&self, grid: &Arc<Grid>) -> Result<RadonMeasure, ConfigError> {
        let n = grid.dim();
        let mut atoms = Vec::new();
        for (k, row) in self.atoms.iter().flatten().enumerate() {
            if row.len() != n + 1 {
                return Err(ConfigError(format!(
                    "[measure] atoms[{k}] needs {n} coordinates plus a mass"
                )));
            }
            atoms.push((nlpot::math::point_from(&row[..n]), row[n]));
        }
        let density = match self.uniform_mass {
            None => None,
            Some(mass) => {
                if !(mass >= 0.0) {
                    return Err(ConfigError("[measure] uniform_mass must be >= 0".into()));
                }
                let rho = mass / grid.volume();
                Some(ScalarField::constant(grid, rho))
            }
        };
        RadonMeasure::new(n, atoms, density).map_err(|e| ConfigError(format!("[measure] {e}")))
    }
}
