use hyperasym_core::borel_engine::SimpleSource;
use hyperasym_core::expansion::{BorelSource, ExpansionEngine};
use hyperasym_core::heat_engine::HeatSource;
use hyperasym_core::oracle;
use hyperasym_core::{
    AnalyticDatum, Calibration, Complex64, Direction, HeatEngine, HyperExpansion, RemainderReport,
    SimpleEngine, SimpleEquation,
};

use crate::config::{complex, EquationSpec, ProblemConfig};
use crate::CliError;

/// Engine for the configured equation.
pub enum Problem {
    Heat(HeatEngine),
    Simple(SimpleEngine),
}

impl Problem {
    pub fn build(cfg: &ProblemConfig) -> Result<Self, CliError> {
        let datum = cfg.datum()?;
        let options = cfg.options();
        Ok(match cfg.equation {
            EquationSpec::Heat => {
                Problem::Heat(HeatEngine::new(datum, cfg.theta, cfg.delta, options)?)
            }
            EquationSpec::Simple { lambda, q, beta } => {
                let eq = SimpleEquation::new(complex(lambda), q, beta)?;
                Problem::Simple(SimpleEngine::new(eq, datum, cfg.theta, cfg.delta, options)?)
            }
        })
    }

    pub fn engine(&self) -> &ExpansionEngine {
        match self {
            Problem::Heat(e) => &e.engine,
            Problem::Simple(e) => &e.engine,
        }
    }

    pub fn datum(&self) -> &AnalyticDatum {
        match self {
            Problem::Heat(e) => &e.datum,
            Problem::Simple(e) => &e.datum,
        }
    }

    pub fn direction(&self) -> &Direction {
        match self {
            Problem::Heat(e) => &e.direction,
            Problem::Simple(e) => &e.direction,
        }
    }

    pub fn theta(&self) -> f64 {
        self.direction().theta
    }

    pub fn name(&self) -> String {
        match self {
            Problem::Heat(_) => "heat".into(),
            Problem::Simple(e) => format!(
                "simple(lambda = {}, q = {}, beta = {})",
                e.equation.lambda, e.equation.q, e.equation.beta
            ),
        }
    }

    /// `t = |t| e^{i theta}`.
    pub fn t(&self, t_abs: f64) -> Complex64 {
        Complex64::from_polar(t_abs, self.theta())
    }

    pub fn source(&self, z: Complex64) -> Box<dyn BorelSource + '_> {
        match self {
            Problem::Heat(e) => Box::new(HeatSource {
                datum: &e.datum,
                z,
                theta: e.theta(),
            }),
            Problem::Simple(e) => Box::new(SimpleSource {
                equation: &e.equation,
                datum: &e.datum,
                z,
                theta: e.theta(),
            }),
        }
    }

    pub fn calibrate(&self, z: Complex64, levels: usize) -> Result<Calibration, CliError> {
        Ok(match self {
            Problem::Heat(e) => e.calibrate(z, levels)?,
            Problem::Simple(e) => e.calibrate(z, levels)?,
        })
    }

    pub fn expand(
        &self,
        t_abs: f64,
        z: Complex64,
        level: usize,
        cal: Option<&Calibration>,
    ) -> Result<HyperExpansion, CliError> {
        let t = self.t(t_abs);
        Ok(match self {
            Problem::Heat(e) => e.expand(t, z, level, cal)?,
            Problem::Simple(e) => e.expand(t, z, level, cal)?,
        })
    }

    pub fn hyper_expand(
        &self,
        t_abs: f64,
        z: Complex64,
        level: usize,
        cal: Option<&Calibration>,
    ) -> Result<(HyperExpansion, RemainderReport), CliError> {
        let t = self.t(t_abs);
        Ok(match self {
            Problem::Heat(e) => e.hyper_expand(t, z, level, cal)?,
            Problem::Simple(e) => e.generalized_hyper_expand(t, z, level, cal)?,
        })
    }

    /// Reference value of the solution by direct quadrature.
    pub fn exact(&self, t_abs: f64, z: Complex64) -> Result<Complex64, CliError> {
        let t = self.t(t_abs);
        Ok(match self {
            Problem::Heat(e) => {
                oracle::heat_direct(&e.datum, &e.direction, t, z, e.engine.b_tilde)?
            }
            Problem::Simple(e) => oracle::simple_direct(&e.equation, &e.datum, &e.direction, t, z)?,
        })
    }
}
