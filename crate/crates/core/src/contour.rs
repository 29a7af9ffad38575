//! Boundaries of unions of two discs, contour quadrature on them, and the
//! singularity clearance check for nested contour chains.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;

use crate::datum::SingularGeometry;
use crate::quadrature;
use crate::{Error, Result};

/// Starting node count per arc.
pub const DEFAULT_NODES: usize = 64;
/// Largest node count per arc before giving up.
pub const MAX_NODES: usize = 1 << 14;

/// Circular arc `center + radius e^{i phi}`, `phi` running from `start` to
/// `start + sweep` (counter-clockwise for positive sweep).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub center: Complex64,
    pub radius: f64,
    pub start: f64,
    pub sweep: f64,
}

impl Arc {
    pub fn circle(center: Complex64, radius: f64) -> Self {
        Self {
            center,
            radius,
            start: 0.0,
            sweep: TAU,
        }
    }

    pub fn is_full_circle(&self) -> bool {
        (self.sweep - TAU).abs() < 1e-15
    }

    pub fn point(&self, phi: f64) -> Complex64 {
        self.center + Complex64::from_polar(self.radius, phi)
    }

    pub fn length(&self) -> f64 {
        self.radius * self.sweep.abs()
    }

    /// Integral of `f(w) dw` with `n` nodes; returns the value and the L1
    /// norm `int |f| |dw|`. Full circles use the trapezoid rule, partial arcs
    /// composite Gauss-Legendre.
    fn rule<F>(&self, n: usize, f: &F) -> Result<(Complex64, f64)>
    where
        F: Fn(Complex64) -> Result<Complex64>,
    {
        let eval = |phi: f64| -> Result<Complex64> {
            let e = Complex64::from_polar(1.0, phi);
            Ok(f(self.center + e * self.radius)? * Complex64::i() * e * self.radius)
        };
        if self.is_full_circle() {
            let h = TAU / n as f64;
            let mut sum = Complex64::new(0.0, 0.0);
            let mut l1 = 0.0;
            for j in 0..n {
                let v = eval(self.start + h * j as f64)?;
                sum += v;
                l1 += v.norm();
            }
            Ok((sum * h, l1 * h))
        } else {
            let panels = n.div_ceil(quadrature::PANEL_DEGREE).max(1);
            quadrature::composite(self.start, self.start + self.sweep, panels, &eval)
        }
    }
}

/// Value of a contour integral with the difference between the last two
/// refinements and the number of integrand evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integration {
    pub value: Complex64,
    pub error: f64,
    pub nodes: usize,
}

/// Positively oriented boundary of the union of a big disc around `sigma`
/// and a small disc around `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourSpec {
    pub big_center: Complex64,
    pub big_radius: f64,
    pub small_center: Complex64,
    pub small_radius: f64,
    pub arcs: Vec<Arc>,
}

impl ContourSpec {
    pub fn two_discs(
        big_center: Complex64,
        big_radius: f64,
        small_center: Complex64,
        small_radius: f64,
    ) -> Result<Self> {
        if !(big_radius > 0.0) || !(small_radius > 0.0) {
            return Err(Error::DegenerateContour(format!(
                "radii must be positive, got R = {big_radius}, rho = {small_radius}"
            )));
        }
        let offset = small_center - big_center;
        let d = offset.norm();
        let (r, rho) = (big_radius, small_radius);
        let arcs = if d + rho <= r {
            vec![Arc::circle(big_center, r)]
        } else if d + r <= rho {
            vec![Arc::circle(small_center, rho)]
        } else if d >= r + rho {
            vec![Arc::circle(big_center, r), Arc::circle(small_center, rho)]
        } else {
            let phi_s = offset.arg();
            let alpha_b = ((d * d + r * r - rho * rho) / (2.0 * d * r))
                .clamp(-1.0, 1.0)
                .acos();
            let alpha_s = ((d * d + rho * rho - r * r) / (2.0 * d * rho))
                .clamp(-1.0, 1.0)
                .acos();
            vec![
                Arc {
                    center: big_center,
                    radius: r,
                    start: phi_s + alpha_b,
                    sweep: TAU - 2.0 * alpha_b,
                },
                Arc {
                    center: small_center,
                    radius: rho,
                    start: phi_s - (PI - alpha_s),
                    sweep: 2.0 * (PI - alpha_s),
                },
            ]
        };
        Ok(Self {
            big_center,
            big_radius,
            small_center,
            small_radius,
            arcs,
        })
    }

    /// True when the small disc lies inside the big one and the contour is
    /// the big circle alone.
    pub fn is_single_circle(&self) -> bool {
        self.arcs.len() == 1
    }

    /// `int f(w) dw` over the contour.
    ///
    /// Every arc is refined by node doubling from [`DEFAULT_NODES`] until two
    /// successive estimates differ by at most `tol` times the L1 norm of the
    /// integrand on that arc.
    pub fn integrate<F>(&self, tol: f64, f: F) -> Result<Integration>
    where
        F: Fn(Complex64) -> Result<Complex64>,
    {
        let mut total = Complex64::new(0.0, 0.0);
        let mut error = 0.0;
        let mut nodes = 0;
        for arc in &self.arcs {
            let mut n = DEFAULT_NODES;
            let (mut prev, _) = arc.rule(n, &f)?;
            nodes += n;
            loop {
                n *= 2;
                let (cur, l1) = arc.rule(n, &f)?;
                nodes += n;
                let diff = (cur - prev).norm();
                if diff <= tol * l1 || l1 == 0.0 {
                    total += cur;
                    error += diff;
                    break;
                }
                if n >= MAX_NODES {
                    return Err(Error::Quadrature {
                        estimate: cur.norm(),
                        error: diff,
                        nodes,
                    });
                }
                prev = cur;
            }
        }
        Ok(Integration {
            value: total,
            error,
            nodes,
        })
    }

    /// `(1/(2 pi i)) int f(w) dw`.
    pub fn cauchy<F>(&self, tol: f64, f: F) -> Result<Integration>
    where
        F: Fn(Complex64) -> Result<Complex64>,
    {
        let mut r = self.integrate(tol, f)?;
        r.value /= Complex64::new(0.0, TAU);
        r.error /= TAU;
        Ok(r)
    }

    /// Winding number of the contour around `p`.
    pub fn winding_number(&self, p: Complex64) -> Result<i64> {
        let r = self.cauchy(1e-10, |w| Ok(1.0 / (w - p)))?;
        Ok(r.value.re.round() as i64)
    }

    pub fn length(&self) -> f64 {
        self.arcs.iter().map(Arc::length).sum()
    }

    /// Point at arc-length fraction `u` in `[0, 1)`.
    pub fn point_at(&self, u: f64) -> Complex64 {
        let mut left = u.rem_euclid(1.0) * self.length();
        for arc in &self.arcs {
            let len = arc.length();
            if left <= len {
                return arc.point(arc.start + arc.sweep * left / len);
            }
            left -= len;
        }
        let last = self.arcs.last().expect("contour has arcs");
        last.point(last.start + last.sweep)
    }
}

/// `rho_n = 2 - 2^{-n}`.
pub fn rho(n: usize) -> f64 {
    2.0 - 0.5f64.powi(n as i32)
}

/// Radius of the level-`n` big disc: `r^q/|lambda| - eps` at level 0 and
/// `d(sigma_n) - rho_n eps` above.
pub fn big_radius(n: usize, sigma: f64, eps: f64, geometry: &SingularGeometry) -> f64 {
    if n == 0 {
        geometry.r_eff(eps)
    } else {
        geometry.singular_distance(Complex64::new(sigma, 0.0)) - rho(n) * eps
    }
}

/// `Omega_n(sigma_n, s)`: big disc of radius [`big_radius`] around
/// `sigma_n` joined with the disc of radius `2^{-n-1} eps` around `s`.
pub fn build_omega(
    n: usize,
    sigma: f64,
    s: Complex64,
    eps: f64,
    geometry: &SingularGeometry,
) -> Result<ContourSpec> {
    let r = big_radius(n, sigma, eps, geometry);
    ContourSpec::two_discs(
        Complex64::new(sigma, 0.0),
        r,
        s,
        eps * 0.5f64.powi(n as i32 + 1),
    )
}

/// True iff `d(x_0) >= eps` for the first point of the chain.
pub fn clearance_check(chain: &[Complex64], eps: f64, geometry: &SingularGeometry) -> bool {
    match chain.first() {
        Some(&x0) => geometry.singular_distance(x0) >= eps * (1.0 - 1e-12),
        None => false,
    }
}

/// Random admissible chain `x_0, ..., x_{n+1} = s` with
/// `x_k` on `Omega_k(sigma_k, x_{k+1})`, where `sigmas[k]` is `sigma_k`
/// (`sigmas[0] = 0`).
pub fn random_chain<R: Rng>(
    rng: &mut R,
    sigmas: &[f64],
    s: Complex64,
    eps: f64,
    geometry: &SingularGeometry,
) -> Result<Vec<Complex64>> {
    let mut chain = vec![s];
    let mut next = s;
    for (k, &sigma) in sigmas.iter().enumerate().rev() {
        let omega = build_omega(k, sigma, next, eps, geometry)?;
        next = omega.point_at(rng.random::<f64>());
        chain.push(next);
    }
    chain.reverse();
    Ok(chain)
}
