//! JSON run configuration.
//!
//! Every section rejects unknown keys, and [`RunConfig::validate`] builds all
//! derived objects up front so that a bad file fails before any solve.

use std::path::{Path, PathBuf};

use optpot::convex::LawKind;
use optpot::{CostIntegrand, Field, Grid, GridKind, MonotoneGraph, OptimizeOptions, PotentialLaw};
use serde::{Deserialize, Serialize};

/// Radius of the four balls of the `fourballs` right-hand side.
pub const FOUR_BALL_RADIUS: f64 = 0.173_205_080_756_887_72;
pub const FOUR_BALL_CENTERS: [(f64, f64); 4] = [(0.0, 0.5), (0.0, -0.5), (0.5, 0.0), (-0.5, 0.0)];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl From<optpot::Error> for ConfigError {
    fn from(e: optpot::Error) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub law: Option<LawConfig>,
    #[serde(default)]
    pub cost: Option<CostConfig>,
    pub rhs: FieldSpec,
    #[serde(default)]
    pub opt: OptConfig,
    #[serde(default)]
    pub graph: Option<GraphConfig>,
    #[serde(default)]
    pub semilinear: SemilinearConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub kind: GridKind,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LawConfig {
    pub kind: LawKind,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub p: Option<f64>,
}

impl LawConfig {
    pub fn build(&self) -> Result<PotentialLaw, ConfigError> {
        let alpha = self.alpha.unwrap_or(0.0);
        let beta = self.beta.unwrap_or(f64::INFINITY);
        let k = self.k.unwrap_or(0.0);
        let p = self.p.unwrap_or(1.0);
        Ok(PotentialLaw::new(self.kind, alpha, beta, k, p)?)
    }
}

/// A scalar field on the grid.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant { value: f64 },
    /// Sum of the indicators of four balls of radius √3/10 centred at
    /// `(0, ±0.5)` and `(±0.5, 0)`, scaled by `value`.
    Fourballs {
        #[serde(default = "one")]
        value: f64,
    },
    /// `10 (x² + y²) sin(13 arctan|y/x|)` where `|x| > 1e−10`, else 0.
    Oscillatory,
    /// `x² − y²`.
    Saddle,
    /// Values read from a field CSV written for the same grid.
    Csv { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

impl FieldSpec {
    pub fn build(&self, grid: &Grid, base: &Path) -> Result<Field, ConfigError> {
        Ok(match self {
            FieldSpec::Constant { value } => Field::constant(grid, *value),
            FieldSpec::Fourballs { value } => Field::from_fn(grid, |x, y| {
                let hits = FOUR_BALL_CENTERS
                    .iter()
                    .filter(|(cx, cy)| (x - cx).hypot(y - cy) < FOUR_BALL_RADIUS)
                    .count();
                value * hits as f64
            }),
            FieldSpec::Oscillatory => Field::from_fn(grid, |x, y| {
                if x.abs() > 1e-10 {
                    10.0 * (x * x + y * y) * (13.0 * (y / x).abs().atan()).sin()
                } else {
                    0.0
                }
            }),
            FieldSpec::Saddle => Field::from_fn(grid, |x, y| x * x - y * y),
            FieldSpec::Csv { path } => {
                let full = if path.is_absolute() { path.clone() } else { base.join(path) };
                optpot::io::read_field_csv(&full, grid)
                    .map_err(|e| ConfigError::Invalid(format!("{}: {e}", full.display())))?
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostConfig {
    /// `γ(x) s`.
    Linear { gamma: FieldSpec },
    /// `½ |s − target(x)|²`.
    Tracking { target: FieldSpec },
    /// `sign · f(x) s` with `f` the right-hand side.
    Energy {
        #[serde(default = "one")]
        sign: f64,
    },
}

impl CostConfig {
    pub fn build(&self, grid: &Grid, f: &Field, base: &Path) -> Result<CostIntegrand, ConfigError> {
        Ok(match self {
            CostConfig::Linear { gamma } => CostIntegrand::linear(gamma.build(grid, base)?),
            CostConfig::Tracking { target } => CostIntegrand::tracking(target.build(grid, base)?),
            CostConfig::Energy { sign } => CostIntegrand::energy(*sign, f.clone()),
        })
    }
}

/// Initial potential: `"midpoint"` of the domain (0 for unbounded laws),
/// `"zero"`, or a constant.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum M0Spec {
    Named(M0Name),
    Constant(f64),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum M0Name {
    Midpoint,
    Zero,
}

impl Default for M0Spec {
    fn default() -> Self {
        M0Spec::Named(M0Name::Midpoint)
    }
}

impl M0Spec {
    pub fn value(&self, law: Option<&PotentialLaw>) -> f64 {
        match self {
            M0Spec::Named(M0Name::Midpoint) => law.map_or(0.0, PotentialLaw::default_start),
            M0Spec::Named(M0Name::Zero) => 0.0,
            M0Spec::Constant(c) => *c,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OptConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub eps0: f64,
    pub backtrack: f64,
    pub max_halvings: usize,
    pub solve_tol: f64,
    pub m0: M0Spec,
    pub reversed_box_plus_linear_sign: bool,
}

impl Default for OptConfig {
    fn default() -> Self {
        let d = OptimizeOptions::default();
        OptConfig {
            tol: d.tol,
            max_iter: d.max_iter,
            eps0: d.eps0,
            backtrack: d.backtrack,
            max_halvings: d.max_halvings,
            solve_tol: d.solve_tol,
            m0: M0Spec::default(),
            reversed_box_plus_linear_sign: d.reversed_box_plus_linear_sign,
        }
    }
}

impl OptConfig {
    pub fn options(&self) -> OptimizeOptions {
        OptimizeOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            eps0: self.eps0,
            backtrack: self.backtrack,
            max_halvings: self.max_halvings,
            solve_tol: self.solve_tol,
            reversed_box_plus_linear_sign: self.reversed_box_plus_linear_sign,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphConfig {
    Linear { slope: f64 },
    Step { threshold: f64, low: f64, high: f64 },
    Power { coeff: f64, exponent: f64 },
    /// `s h(s²)` built from the configured law.
    Auxiliary,
}

impl GraphConfig {
    pub fn build(&self, law: Option<&PotentialLaw>) -> Result<MonotoneGraph, ConfigError> {
        Ok(match *self {
            GraphConfig::Linear { slope } => MonotoneGraph::Linear { slope },
            GraphConfig::Step { threshold, low, high } => MonotoneGraph::Step { threshold, low, high },
            GraphConfig::Power { coeff, exponent } => MonotoneGraph::Power { coeff, exponent },
            GraphConfig::Auxiliary => law
                .ok_or_else(|| ConfigError::Invalid("auxiliary graph needs a law".into()))?
                .auxiliary_graph()?,
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SemilinearConfig {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SemilinearConfig {
    fn default() -> Self {
        let d = optpot::SemilinearOptions::default();
        SemilinearConfig { tol: d.tol, max_sweeps: d.max_sweeps }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub emit_pgm: bool,
}

/// A configuration with every derived object built.
pub struct Prepared {
    pub grid: Grid,
    pub f: Field,
    pub law: Option<PotentialLaw>,
    pub cost: Option<CostIntegrand>,
    pub graph: Option<MonotoneGraph>,
    pub m0: Field,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
        Self::from_json(&text)
    }

    /// Builds grid, fields, law, cost and graph. Relative CSV paths resolve
    /// against `base`.
    pub fn validate(&self, base: &Path) -> Result<Prepared, ConfigError> {
        let grid = Grid::build(self.grid.kind, self.grid.n)?;
        let f = self.rhs.build(&grid, base)?;
        let law = self.law.as_ref().map(LawConfig::build).transpose()?;
        let cost = self.cost.as_ref().map(|c| c.build(&grid, &f, base)).transpose()?;
        let graph = self.graph.as_ref().map(|g| g.build(law.as_ref())).transpose()?;
        let m0_value = self.opt.m0.value(law.as_ref());
        if let Some(law) = &law {
            if !law.contains(m0_value) {
                return Err(ConfigError::Invalid(format!("m0 = {m0_value} lies outside the law's domain")));
            }
        } else if m0_value < 0.0 {
            return Err(ConfigError::Invalid(format!("m0 = {m0_value} is negative")));
        }
        self.opt.options().validate()?;
        if !(self.semilinear.tol > 0.0) || self.semilinear.max_sweeps == 0 {
            return Err(ConfigError::Invalid("semilinear tol and max_sweeps must be positive".into()));
        }
        Ok(Prepared { m0: Field::constant(&grid, m0_value), grid, f, law, cost, graph })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"grid": {"kind": "radial", "n": 11, "extra": 1}, "rhs": {"kind": "constant", "value": 1}}"#;
        assert!(matches!(RunConfig::from_json(text), Err(ConfigError::Parse(_))));
        let text = r#"{"grid": {"kind": "radial", "n": 11}, "rhs": {"kind": "constant", "value": 1}, "foo": 2}"#;
        assert!(matches!(RunConfig::from_json(text), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let text = r#"{"grid": {"kind": "disc", "n": 17}, "rhs": {"kind": "fourballs"},
                       "law": {"kind": "box_plus_linear", "alpha": 0, "beta": 1, "k": 0.001, "p": 1},
                       "cost": {"kind": "energy"}, "opt": {"m0": 0.25}}"#;
        let cfg = RunConfig::from_json(text).unwrap();
        assert_eq!(cfg.opt.tol, 1e-6);
        assert_eq!(cfg.opt.m0, M0Spec::Constant(0.25));
        let prep = cfg.validate(Path::new(".")).unwrap();
        assert_eq!(prep.m0.values()[0], 0.25);
        assert!(prep.f.values().iter().any(|&v| v == 1.0));
    }

    #[test]
    fn named_initial_potentials() {
        let text = r#"{"grid": {"kind": "radial", "n": 11}, "rhs": {"kind": "constant", "value": 1},
                       "law": {"kind": "box", "alpha": 1, "beta": 3}, "opt": {"m0": "midpoint"}}"#;
        let prep = RunConfig::from_json(text).unwrap().validate(Path::new(".")).unwrap();
        assert_eq!(prep.m0.values()[0], 2.0);
        let text = text.replace("\"midpoint\"", "\"zero\"");
        assert!(matches!(
            RunConfig::from_json(&text).unwrap().validate(Path::new(".")),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn invalid_law_is_a_config_error() {
        let text = r#"{"grid": {"kind": "radial", "n": 11}, "rhs": {"kind": "constant", "value": 1},
                       "law": {"kind": "power", "k": -1, "p": 2}}"#;
        assert!(matches!(
            RunConfig::from_json(text).unwrap().validate(Path::new(".")),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn oscillatory_rhs_guards_the_axis() {
        let grid = Grid::build_disc(9).unwrap();
        let f = FieldSpec::Oscillatory.build(&grid, Path::new(".")).unwrap();
        for (c, v) in grid.coords().iter().zip(f.values()) {
            if c[0] == 0.0 {
                assert_eq!(*v, 0.0);
            }
        }
        assert!((FOUR_BALL_RADIUS - 3f64.sqrt() / 10.0).abs() < 1e-17);
    }
}
