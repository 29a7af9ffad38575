//! Composite Gauss-Legendre quadrature on real intervals with panel doubling.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

use crate::{Error, Result};

/// Points per Gauss-Legendre panel.
pub const PANEL_DEGREE: usize = 20;

/// Nodes and weights of the reference rule on `[-1, 1]`.
pub fn reference_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let rule = GaussLegendre::new(NonZeroUsize::new(PANEL_DEGREE).unwrap());
        let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs
    })
}

/// Result of an adaptive quadrature: the value, the difference between the
/// last two refinements and the L1 norm of the integrand.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
    pub l1: f64,
    pub nodes: usize,
}

/// Composite rule with `panels` equal panels on `[a, b]`.
pub fn composite<F>(a: f64, b: f64, panels: usize, f: &F) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let rule = reference_rule();
    let h = (b - a) / panels as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut l1 = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        let mut panel = Complex64::new(0.0, 0.0);
        for &(x, w) in rule {
            let v = f(mid + 0.5 * h * x)?;
            panel += v * w;
            l1 += v.norm() * w;
        }
        sum += panel * (0.5 * h);
    }
    Ok((sum, l1 * 0.5 * h))
}

/// Doubles the number of panels until two successive estimates agree to
/// `rel_tol` relative to the integrand's L1 norm (or to `abs_tol`).
pub fn adaptive<F>(
    a: f64,
    b: f64,
    initial_panels: usize,
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
    f: F,
) -> Result<Estimate>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let mut panels = initial_panels.max(1);
    let (mut prev, _) = composite(a, b, panels, &f)?;
    loop {
        panels *= 2;
        let (cur, l1) = composite(a, b, panels, &f)?;
        let err = (cur - prev).norm();
        if err <= rel_tol * l1 || err <= abs_tol {
            return Ok(Estimate {
                value: cur,
                error: err,
                l1,
                nodes: panels * PANEL_DEGREE,
            });
        }
        if panels >= max_panels {
            return Err(Error::Quadrature {
                estimate: cur.norm(),
                error: err,
                nodes: panels * PANEL_DEGREE,
            });
        }
        prev = cur;
    }
}

/// Smallest `x >= x_peak` with `log_f(x) - log_f(x_peak) <= log_tol`, found by
/// bisection on the logarithm. `log_f` must be unimodal with its maximum at
/// `x_peak`.
pub fn log_tail_cutoff<F>(x_peak: f64, log_tol: f64, log_f: F) -> f64
where
    F: Fn(f64) -> f64,
{
    let peak = log_f(x_peak);
    let mut lo = x_peak;
    let mut hi = x_peak.max(1.0) * 2.0;
    while log_f(hi) - peak > log_tol {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return hi;
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if log_f(mid) - peak > log_tol {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    hi
}

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    comp: Complex64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: Complex64) {
        self.sum.re = neumaier(self.sum.re, x.re, &mut self.comp.re);
        self.sum.im = neumaier(self.sum.im, x.im, &mut self.comp.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

fn neumaier(sum: f64, x: f64, comp: &mut f64) -> f64 {
    let t = sum + x;
    if sum.abs() >= x.abs() {
        *comp += (sum - t) + x;
    } else {
        *comp += (x - t) + sum;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let (v, _) = composite(0.0, 2.0, 1, &|x| Ok(Complex64::new(x.powi(7), 0.0))).unwrap();
        assert!((v.re - 32.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_gaussian() {
        let est = adaptive(-10.0, 10.0, 2, 1e-14, 0.0, 1 << 10, |x| {
            Ok(Complex64::new((-x * x).exp(), 0.0))
        })
        .unwrap();
        assert!((est.value.re - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn cutoff_of_gaussian_tail() {
        let x = log_tail_cutoff(0.0, -30.0, |x| -x * x);
        assert!((x * x - 30.0).abs() < 1e-8);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(Complex64::new(1e16, 0.0));
        for _ in 0..10 {
            s.add(Complex64::new(1.0, 0.0));
        }
        s.add(Complex64::new(-1e16, 0.0));
        assert_eq!(s.value().re, 10.0);
    }
}
