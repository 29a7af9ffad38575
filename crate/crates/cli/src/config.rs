//! Problem configuration files (TOML).

use std::path::{Path, PathBuf};

use hyperasym_core::expansion::{EpsPolicy, ExpansionOptions};
use hyperasym_core::{AnalyticDatum, Complex64, PoleTerm};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub theta: f64,
    pub delta: f64,
    pub t_grid: Vec<f64>,
    #[serde(default = "origin")]
    pub z_points: Vec<[f64; 2]>,
    pub levels: usize,
    /// Clearance `eps`; chosen from the geometry when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Growth constant of the datum; estimated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_tilde: Option<f64>,
    pub datum: DatumSpec,
    pub equation: EquationSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
    /// Knobs for negative controls in `verify`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overrides: Option<Overrides>,
}

fn origin() -> Vec<[f64; 2]> {
    vec![[0.0, 0.0]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumSpec {
    #[serde(default)]
    pub poles: Vec<PoleSpec>,
    /// Coefficients of the polynomial part, lowest degree first.
    #[serde(default)]
    pub polynomial: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_tilde: Option<f64>,
}

/// `coefficient / (location - z)^order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleSpec {
    pub location: [f64; 2],
    #[serde(default = "unit")]
    pub coefficient: [f64; 2],
    #[serde(default = "one")]
    pub order: u32,
}

fn unit() -> [f64; 2] {
    [1.0, 0.0]
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EquationSpec {
    Heat,
    Simple { lambda: [f64; 2], q: u32, beta: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance of the kernel quadrature rules.
    pub quadrature: f64,
    /// Target accuracy of the contour integrals and coefficient series.
    pub series: f64,
    /// The truncation scan stops at `scan_cap * R_n`.
    pub scan_cap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let o = ExpansionOptions::default();
        Self {
            quadrature: o.quad_tol,
            series: o.contour_tol,
            scan_cap: o.scan_factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Replaces the kernel decay constant in the envelope check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_q: Option<f64>,
}

pub fn complex(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// 1-based line of the first `key =` (or `[key]` table) in `src`.
fn line_of(src: &str, key: &str) -> Option<usize> {
    src.lines()
        .position(|l| {
            let l = l.trim_start();
            let table = l.strip_prefix('[').map(|r| r.trim_start_matches('['));
            match table {
                Some(r) => r.starts_with(key),
                None => l
                    .strip_prefix(key)
                    .is_some_and(|r| r.trim_start().starts_with('=')),
            }
        })
        .map(|i| i + 1)
}

impl ProblemConfig {
    pub fn from_toml(src: &str) -> Result<Self, CliError> {
        let cfg: ProblemConfig =
            toml::from_str(src).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        cfg.validate()
            .map_err(|(key, msg)| match line_of(src, key) {
                Some(line) => CliError::Validation(format!("config line {line} (`{key}`): {msg}")),
                None => CliError::Validation(format!("config `{key}`: {msg}")),
            })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&src)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Checks that do not need the engine; each failure names the
    /// offending key.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if !self.theta.is_finite() {
            return Err(("theta", "must be finite".into()));
        }
        if !(self.delta > 0.0) {
            return Err(("delta", format!("must be positive, got {}", self.delta)));
        }
        if self.t_grid.is_empty() {
            return Err(("t_grid", "must not be empty".into()));
        }
        if let Some(t) = self.t_grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err((
                "t_grid",
                format!("entries are |t| and must be positive, got {t}"),
            ));
        }
        if self.z_points.is_empty() {
            return Err(("z_points", "must not be empty".into()));
        }
        if self.z_points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(("z_points", "entries must be finite".into()));
        }
        if let Some(e) = self.eps {
            if !(e > 0.0) {
                return Err(("eps", format!("must be positive, got {e}")));
            }
        }
        if let Some(b) = self.b_tilde {
            if !(b >= 0.0) {
                return Err(("b_tilde", format!("must be nonnegative, got {b}")));
            }
        }
        let tol = &self.tolerances;
        for (key, v) in [("quadrature", tol.quadrature), ("series", tol.series)] {
            if !(v > 0.0 && v < 1.0) {
                return Err((key, format!("tolerance must lie in (0, 1), got {v}")));
            }
        }
        if !(tol.scan_cap > 1.0) {
            return Err(("scan_cap", format!("must exceed 1, got {}", tol.scan_cap)));
        }
        if let EquationSpec::Simple { q, beta, lambda } = &self.equation {
            if *q < 2 {
                return Err(("q", format!("symbol degree must be >= 2, got {q}")));
            }
            if *beta < 1 {
                return Err(("beta", "must be >= 1".into()));
            }
            if complex(*lambda).norm() == 0.0 {
                return Err(("lambda", "must be nonzero".into()));
            }
        }
        Ok(())
    }

    pub fn datum(&self) -> Result<AnalyticDatum, CliError> {
        let terms = self
            .datum
            .poles
            .iter()
            .map(|p| PoleTerm::new(complex(p.coefficient), complex(p.location), p.order))
            .collect();
        let poly = self.datum.polynomial.iter().copied().map(complex).collect();
        AnalyticDatum::new(terms, poly, self.datum.eps_tilde).map_err(CliError::from)
    }

    pub fn options(&self) -> ExpansionOptions {
        ExpansionOptions {
            eps: self.eps.map_or(EpsPolicy::Auto, EpsPolicy::Fixed),
            b_tilde: self.b_tilde,
            contour_tol: self.tolerances.series,
            quad_tol: self.tolerances.quadrature,
            scan_factor: self.tolerances.scan_cap,
            ..Default::default()
        }
    }

    pub fn z_values(&self) -> Vec<Complex64> {
        self.z_points.iter().copied().map(complex).collect()
    }

    /// The heat problem with `phi = 1/(1 - z)` used throughout the tests.
    pub fn reference() -> Self {
        Self::from_toml(REFERENCE).expect("reference config is valid")
    }
}

pub const REFERENCE: &str = include_str!("../configs/reference.toml");
