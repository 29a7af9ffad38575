//! Reference values of the exact solutions by direct quadrature.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::borel_engine::SimpleEquation;
use crate::datum::{angle_distance, AnalyticDatum, Direction};
use crate::quadrature::{self, CompensatedSum};
use crate::special_fn::LaplaceKernel;
use crate::{Error, Result};

/// One approximation checked against a reference value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub t: Complex64,
    pub z: Complex64,
    pub level: usize,
    pub approx: Complex64,
    pub exact: Complex64,
    pub abs_err: f64,
    pub predicted_bound: Option<f64>,
}

pub fn compare(
    t: Complex64,
    z: Complex64,
    level: usize,
    approx: Complex64,
    exact: Complex64,
    predicted_bound: Option<f64>,
) -> ErrorReport {
    ErrorReport {
        t,
        z,
        level,
        approx,
        exact,
        abs_err: (approx - exact).norm(),
        predicted_bound,
    }
}

/// Integration window and panel width for the heat line integral.
struct HeatLine {
    scale: f64,
    half_width: f64,
    panel: f64,
    dir: Complex64,
}

fn heat_line(datum: &AnalyticDatum, t: Complex64, z: Complex64, b_tilde: f64) -> Result<HeatLine> {
    let t_abs = t.norm();
    let rate = 1.0 / (4.0 * t_abs) - b_tilde;
    if !(rate > 0.0) {
        return Err(Error::TailNotDominated(format!(
            "growth constant B = {b_tilde} is not dominated by the Gaussian at |t| = {t_abs}"
        )));
    }
    let dir = Complex64::from_polar(1.0, 0.5 * t.arg());
    let degree = datum.polynomial_part().len().saturating_sub(1) as f64;
    let mut half_width = (60.0 / rate).sqrt();
    for _ in 0..3 {
        half_width = ((60.0 + degree * (1.0 + half_width + z.norm()).ln()) / rate).sqrt();
    }
    // distance from the poles to the line z + dir R
    let mut clearance = f64::INFINITY;
    for a in datum.singularities().points() {
        let rel = (a - z) / dir;
        clearance = clearance.min(rel.im.abs());
    }
    if clearance == 0.0 {
        return Err(Error::Singularity(z));
    }
    let panel = (0.5 * t_abs.sqrt()).min(0.5 * clearance);
    Ok(HeatLine {
        scale: 1.0 / (2.0 * (std::f64::consts::PI * t_abs).sqrt()),
        half_width,
        panel,
        dir,
    })
}

/// `(1/(2 sqrt(pi |t|))) int_R exp(-x^2/(4|t|)) phi(z + e^{i arg t/2} x) dx` on
/// a fixed composite rule with `refine` times the base number of panels.
pub fn heat_direct_rule(
    datum: &AnalyticDatum,
    t: Complex64,
    z: Complex64,
    b_tilde: f64,
    refine: usize,
) -> Result<Complex64> {
    let line = heat_line(datum, t, z, b_tilde)?;
    let panels = ((2.0 * line.half_width / line.panel).ceil() as usize).max(4) * refine.max(1);
    let t_abs = t.norm();
    let (v, _) = quadrature::composite(-line.half_width, line.half_width, panels, &|x: f64| {
        Ok(datum.eval(z + line.dir * x)? * (-x * x / (4.0 * t_abs)).exp())
    })?;
    Ok(v * line.scale)
}

/// Exact heat solution `u(t, z)` along the direction of `t` to about 1e-13
/// relative accuracy.
pub fn heat_direct(
    datum: &AnalyticDatum,
    direction: &Direction,
    t: Complex64,
    z: Complex64,
    b_tilde: f64,
) -> Result<Complex64> {
    check_ray(direction, t)?;
    if z.norm() >= datum.eps_tilde() {
        return Err(Error::OutsideDisc {
            point: z,
            radius: datum.eps_tilde(),
        });
    }
    let line = heat_line(datum, t, z, b_tilde)?;
    let t_abs = t.norm();
    let panels = ((2.0 * line.half_width / line.panel).ceil() as usize).max(4);
    let est = quadrature::adaptive(
        -line.half_width,
        line.half_width,
        panels,
        1e-14,
        0.0,
        panels << 8,
        |x| Ok(datum.eval(z + line.dir * x)? * (-x * x / (4.0 * t_abs)).exp()),
    )?;
    Ok(est.value * line.scale)
}

fn check_ray(direction: &Direction, t: Complex64) -> Result<()> {
    if !(t.norm() > 0.0) {
        return Err(Error::InvalidParameter("t must be nonzero".into()));
    }
    let arg = t.arg().rem_euclid(std::f64::consts::TAU);
    if angle_distance(arg, direction.theta) > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "arg t = {arg} is off the direction {}",
            direction.theta
        )));
    }
    Ok(())
}

/// Borel sum of the simple equation, `int_0^inf C_q(tau) v(t tau^q, z) d tau`,
/// with `v` in closed form and tight quadrature tolerances.
pub fn simple_direct(
    equation: &SimpleEquation,
    datum: &AnalyticDatum,
    direction: &Direction,
    t: Complex64,
    z: Complex64,
) -> Result<Complex64> {
    check_ray(direction, t)?;
    let kernel = LaplaceKernel::Ecalle(equation.kernel);
    crate::borel_engine::laplace_sum(&kernel, t, 1e-13, |x| equation.v_closed(datum, x, z))
}

/// Exact finite sum `sum_n u_n t^n / n!` for polynomial data, where the
/// formal series terminates.
pub fn polynomial_solution(
    equation: &SimpleEquation,
    datum: &AnalyticDatum,
    t: Complex64,
    z: Complex64,
) -> Result<Complex64> {
    if !datum.terms().is_empty() {
        return Err(Error::InvalidParameter("datum is not a polynomial".into()));
    }
    let degree = datum.polynomial_part().len();
    let count = degree / equation.q as usize + 2;
    let u = equation.formal_coefficients(datum, z, count);
    let mut acc = CompensatedSum::new();
    let mut fact = 1.0;
    for (n, &un) in u.iter().enumerate() {
        if n > 0 {
            fact *= n as f64;
        }
        acc.add(un * t.powu(n as u32) / fact);
    }
    Ok(acc.value())
}
