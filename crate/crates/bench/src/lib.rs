//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use hyperasym_core::expansion::EpsPolicy;
use hyperasym_core::{AnalyticDatum, ExpansionOptions, HeatEngine, SimpleEngine, SimpleEquation};
use num_complex::Complex64;

/// Heat equation with `phi = 1/(1 - z)` along `theta = pi`.
pub fn reference_heat() -> HeatEngine {
    let datum = AnalyticDatum::simple_pole(Complex64::new(1.0, 0.0))
        .and_then(|d| d.with_eps_tilde(0.005))
        .expect("valid datum");
    let options = ExpansionOptions {
        eps: EpsPolicy::Fixed(0.04),
        ..Default::default()
    };
    HeatEngine::new(datum, PI, 0.1, options).expect("valid engine")
}

/// Cubic symbol with the same datum.
pub fn cubic() -> SimpleEngine {
    let eq = SimpleEquation::new(Complex64::new(1.0, 0.0), 3, 1).expect("valid equation");
    let datum = AnalyticDatum::simple_pole(Complex64::new(1.0, 0.0)).expect("valid datum");
    SimpleEngine::new(eq, datum, PI, 0.1, ExpansionOptions::default()).expect("valid engine")
}

pub fn ray(t_abs: f64) -> Complex64 {
    Complex64::from_polar(t_abs, PI)
}
