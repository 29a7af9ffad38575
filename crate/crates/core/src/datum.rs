//! Pole-type Cauchy data and the geometry of their singularities.
//!
//! A datum is a finite sum of pole terms `c / (a - z)^m` plus a polynomial.
//! Its singular points are grouped into rays from the origin; the singular
//! set `H` is the union of the half-lines `{a_i1 t : t >= 1}` starting at the
//! innermost point of every ray.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Angular tolerance used to group singular points into rays.
const RAY_TOL: f64 = 1e-12;

/// `coefficient / (location - z)^order`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleTerm {
    pub coefficient: Complex64,
    pub location: Complex64,
    pub order: u32,
}

impl PoleTerm {
    pub fn new(coefficient: Complex64, location: Complex64, order: u32) -> Self {
        Self {
            coefficient,
            location,
            order,
        }
    }

    /// `1 / (a - z)`.
    pub fn simple(location: Complex64) -> Self {
        Self::new(Complex64::new(1.0, 0.0), location, 1)
    }

    fn eval(&self, z: Complex64) -> Complex64 {
        self.coefficient / (self.location - z).powi(self.order as i32)
    }

    /// Taylor coefficients at `z0` from
    /// `(a - z)^-m = sum_n C(n+m-1, m-1) (z - z0)^n / (a - z0)^(n+m)`.
    fn taylor(&self, z0: Complex64, count: usize, out: &mut [Complex64]) {
        let d = self.location - z0;
        let inv = 1.0 / d;
        let m = self.order as f64;
        let mut c = self.coefficient * inv.powi(self.order as i32);
        for (n, slot) in out.iter_mut().enumerate().take(count) {
            if n > 0 {
                c = c * inv * ((n as f64 + m - 1.0) / n as f64);
            }
            *slot += c;
        }
    }
}

/// One ray of singular points, sorted by modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularRay {
    pub angle: f64,
    pub points: Vec<Complex64>,
}

impl SingularRay {
    /// The innermost point `a_i1`, where the half-line of `H` starts.
    pub fn start(&self) -> Complex64 {
        self.points[0]
    }

    /// Distance from `y` to the half-line `{a_i1 t : t >= 1}`.
    pub fn distance(&self, y: Complex64) -> f64 {
        let a = self.start();
        let dir = a / a.norm();
        let proj = (y * dir.conj()).re;
        if proj <= a.norm() {
            (y - a).norm()
        } else {
            (y * dir.conj()).im.abs()
        }
    }
}

/// Singular points of a datum grouped into rays with increasing angle.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SingularitySet {
    pub rays: Vec<SingularRay>,
}

impl SingularitySet {
    pub fn from_points(points: &[Complex64]) -> Result<Self> {
        let mut rays: Vec<SingularRay> = Vec::new();
        for &a in points {
            if a.norm() == 0.0 {
                return Err(Error::InvalidParameter(
                    "singular point at the origin".to_string(),
                ));
            }
            let angle = a.arg().rem_euclid(TAU);
            match rays
                .iter_mut()
                .find(|r| angle_distance(r.angle, angle) < RAY_TOL)
            {
                Some(ray) => {
                    if !ray
                        .points
                        .iter()
                        .any(|p| (*p - a).norm() <= RAY_TOL * a.norm())
                    {
                        ray.points.push(a);
                    }
                }
                None => rays.push(SingularRay {
                    angle,
                    points: vec![a],
                }),
            }
        }
        for ray in &mut rays {
            ray.points.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
        }
        rays.sort_by(|x, y| x.angle.total_cmp(&y.angle));
        Ok(Self { rays })
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }

    /// `r = min_i |a_i1|`.
    pub fn r(&self) -> f64 {
        self.rays
            .iter()
            .map(|ray| ray.start().norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// All singular points `a_ij`.
    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.rays.iter().flat_map(|r| r.points.iter().copied())
    }

    /// Distance from `y` to `H`.
    pub fn distance_to_h(&self, y: Complex64) -> f64 {
        self.rays
            .iter()
            .map(|r| r.distance(y))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Distance between two angles on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Pole-type Cauchy datum.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticDatum {
    terms: Vec<PoleTerm>,
    polynomial: Vec<Complex64>,
    singularities: SingularitySet,
    eps_tilde: f64,
}

impl AnalyticDatum {
    /// Builds a datum; `eps_tilde` defaults to `0.1 r`.
    pub fn new(
        terms: Vec<PoleTerm>,
        polynomial: Vec<Complex64>,
        eps_tilde: Option<f64>,
    ) -> Result<Self> {
        for t in &terms {
            if t.order == 0 {
                return Err(Error::InvalidParameter("pole order must be >= 1".into()));
            }
        }
        let points: Vec<Complex64> = terms
            .iter()
            .filter(|t| t.coefficient != Complex64::new(0.0, 0.0))
            .map(|t| t.location)
            .collect();
        let singularities = SingularitySet::from_points(&points)?;
        let r = singularities.r();
        let eps_tilde = match eps_tilde {
            Some(e) => e,
            None if r.is_finite() => 0.1 * r,
            None => 1.0,
        };
        if !(eps_tilde > 0.0) || (r.is_finite() && eps_tilde >= r) {
            return Err(Error::InvalidParameter(format!(
                "holomorphy radius eps_tilde = {eps_tilde} must lie in (0, r = {r})"
            )));
        }
        let mut polynomial = polynomial;
        while polynomial.last() == Some(&Complex64::new(0.0, 0.0)) {
            polynomial.pop();
        }
        Ok(Self {
            terms,
            polynomial,
            singularities,
            eps_tilde,
        })
    }

    /// `1 / (a - z)` for a single simple pole.
    pub fn simple_pole(a: Complex64) -> Result<Self> {
        Self::new(vec![PoleTerm::simple(a)], Vec::new(), None)
    }

    pub fn polynomial(coeffs: Vec<Complex64>) -> Result<Self> {
        Self::new(Vec::new(), coeffs, None)
    }

    pub fn with_eps_tilde(mut self, eps_tilde: f64) -> Result<Self> {
        let r = self.r();
        if !(eps_tilde > 0.0) || (r.is_finite() && eps_tilde >= r) {
            return Err(Error::InvalidParameter(format!(
                "holomorphy radius eps_tilde = {eps_tilde} must lie in (0, r = {r})"
            )));
        }
        self.eps_tilde = eps_tilde;
        Ok(self)
    }

    pub fn terms(&self) -> &[PoleTerm] {
        &self.terms
    }

    pub fn polynomial_part(&self) -> &[Complex64] {
        &self.polynomial
    }

    pub fn singularities(&self) -> &SingularitySet {
        &self.singularities
    }

    /// Radius of the disc around 0 on which the datum is holomorphic.
    pub fn eps_tilde(&self) -> f64 {
        self.eps_tilde
    }

    /// Distance from the origin to the nearest singular point (infinite for
    /// entire data).
    pub fn r(&self) -> f64 {
        self.singularities.r()
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let mut v = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            if t.location == z {
                return Err(Error::Singularity(z));
            }
            v += t.eval(z);
        }
        let mut p = Complex64::new(0.0, 0.0);
        for &c in self.polynomial.iter().rev() {
            p = p * z + c;
        }
        let v = v + p;
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::Singularity(z));
        }
        Ok(v)
    }

    /// `phi^(n)(z0)/n!` for `n < count`, from exact shift recurrences.
    pub fn taylor_coeffs(&self, z0: Complex64, count: usize) -> Result<Vec<Complex64>> {
        if z0.norm() >= self.eps_tilde {
            return Err(Error::OutsideDisc {
                point: z0,
                radius: self.eps_tilde,
            });
        }
        Ok(self.taylor_coeffs_unchecked(z0, count))
    }

    /// As [`taylor_coeffs`](Self::taylor_coeffs) without the holomorphy-disc
    /// check; valid anywhere off the poles.
    pub fn taylor_coeffs_unchecked(&self, z0: Complex64, count: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); count];
        for t in &self.terms {
            t.taylor(z0, count, &mut out);
        }
        // polynomial shifted to z0: coefficient n = sum_j p_j C(j, n) z0^(j-n)
        for (n, slot) in out.iter_mut().enumerate() {
            for (j, &p) in self.polynomial.iter().enumerate().skip(n) {
                *slot +=
                    p * crate::special_fn::binomial(j as u64, n as u64) * z0.powi((j - n) as i32);
            }
        }
        out
    }

    /// `phi^(n)(z)`.
    pub fn derivative(&self, n: usize, z: Complex64) -> Complex64 {
        let c = self.taylor_coeffs_unchecked(z, n + 1)[n];
        let fact: f64 = (1..=n).map(|i| i as f64).product();
        c * fact
    }

    /// Directions `q lambda_i - arg lambda mod 2 pi`, sorted and without
    /// duplicates.
    pub fn stokes_directions(&self, q: f64, arg_lambda: f64) -> Vec<f64> {
        let mut dirs: Vec<f64> = self
            .singularities
            .rays
            .iter()
            .map(|r| (q * r.angle - arg_lambda).rem_euclid(TAU))
            .map(|d| if TAU - d < RAY_TOL { 0.0 } else { d })
            .collect();
        dirs.sort_by(f64::total_cmp);
        dirs.dedup_by(|a, b| angle_distance(*a, *b) < 1e-10);
        dirs
    }

    /// Growth constants `(C, B)` with `|phi(z)| <= C exp(B |z|^p)` off the
    /// `xi`-neighbourhood of `H`.
    ///
    /// Pure pole data are bounded there, so `B = 0` and `C` is the sampled
    /// maximum (inflated by 10%). A polynomial part of degree `d` is not
    /// bounded; it is covered with `B = 1e-2` and the constant fitted on the
    /// same sample set, which always reaches the maximum of
    /// `|z|^d exp(-B |z|^p)`.
    pub fn growth_bound(&self, p: f64, xi: f64) -> Result<(f64, f64)> {
        if !(p > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "growth order must be positive, got {p}"
            )));
        }
        let b = if self.polynomial.len() > 1 { 1e-2 } else { 0.0 };
        let reach = if self.polynomial.len() > 1 {
            // |z|^d e^{-B|z|^p} peaks at |z| = (d/(B p))^{1/p}
            let d = (self.polynomial.len() - 1) as f64;
            4.0 * (d / (b * p)).powf(1.0 / p)
        } else {
            let far = self
                .singularities
                .points()
                .map(|a| a.norm())
                .fold(1.0, f64::max);
            8.0 * far
        };
        let samples = self.growth_samples(reach, xi);
        let mut c: f64 = 0.0;
        for z in &samples {
            let v = self.eval(*z)?.norm();
            c = c.max(v * (-b * z.norm().powf(p)).exp());
        }
        Ok((1.1 * c.max(f64::MIN_POSITIVE), b))
    }

    /// Sample points off the `xi`-neighbourhood of `H`: polar grid with
    /// geometrically spaced radii up to `reach`.
    pub fn growth_samples(&self, reach: f64, xi: f64) -> Vec<Complex64> {
        let mut pts = Vec::new();
        let n_rad = 60;
        for i in 0..=n_rad {
            let rad = if i == 0 {
                0.0
            } else {
                1e-2 * (reach / 1e-2).powf(i as f64 / n_rad as f64)
            };
            for k in 0..96 {
                let z = Complex64::from_polar(rad, TAU * k as f64 / 96.0);
                if self.singularities.distance_to_h(z) > xi
                    && self.terms.iter().all(|t| (t.location - z).norm() > xi)
                {
                    pts.push(z);
                }
                if rad == 0.0 {
                    break;
                }
            }
        }
        pts
    }
}

/// Checks `|f(z)| <= C exp(B |z|^p)` on the given sample points.
pub fn check_growth_envelope<F>(f: F, p: f64, c: f64, b: f64, samples: &[Complex64]) -> Result<()>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    for &z in samples {
        let value = f(z)?.norm();
        let log_bound = c.ln() + b * z.norm().powf(p);
        if value.ln() > log_bound {
            return Err(Error::GrowthViolation {
                point: z,
                value,
                bound: log_bound.exp(),
            });
        }
    }
    Ok(())
}

/// Summation direction `theta` kept at least `delta` away from every Stokes
/// direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub theta: f64,
    pub delta: f64,
    pub stokes: Vec<f64>,
}

impl Direction {
    pub fn new(theta: f64, delta: f64, stokes: Vec<f64>) -> Result<Self> {
        if !(delta > 0.0) || !theta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "direction needs finite theta and delta > 0, got theta = {theta}, delta = {delta}"
            )));
        }
        let theta = theta.rem_euclid(TAU);
        for &s in &stokes {
            let distance = angle_distance(theta, s);
            if distance < delta {
                return Err(Error::StokesDirection {
                    theta,
                    stokes: s,
                    distance,
                    delta,
                });
            }
        }
        Ok(Self {
            theta,
            delta,
            stokes,
        })
    }

    /// Direction for the heat equation (`q = 2`, `lambda = 1`).
    pub fn for_heat(datum: &AnalyticDatum, theta: f64, delta: f64) -> Result<Self> {
        Self::new(theta, delta, datum.stokes_directions(2.0, 0.0))
    }
}

/// Borel-plane geometry of a datum for the symbol `lambda zeta^q` along the
/// direction `theta`: the singular points of `f_0(s)` sit at
/// `e^{-i theta} (zeta - z)^q / lambda` for `zeta` in `H` and `|z| <= eps_tilde`.
#[derive(Debug, Clone)]
pub struct SingularGeometry {
    rays: Vec<SingularRay>,
    pub q: u32,
    pub lambda: Complex64,
    pub theta: f64,
    pub eps_tilde: f64,
}

impl SingularGeometry {
    pub fn new(datum: &AnalyticDatum, q: u32, lambda: Complex64, theta: f64) -> Result<Self> {
        Self::with_disc(datum, q, lambda, theta, datum.eps_tilde())
    }

    /// Same geometry with an explicit disc radius for `z`.
    pub fn with_disc(
        datum: &AnalyticDatum,
        q: u32,
        lambda: Complex64,
        theta: f64,
        eps_tilde: f64,
    ) -> Result<Self> {
        if q < 1 || lambda.norm() == 0.0 {
            return Err(Error::InvalidParameter(
                "symbol needs q >= 1 and lambda != 0".into(),
            ));
        }
        Ok(Self {
            rays: datum.singularities().rays.clone(),
            q,
            lambda,
            theta,
            eps_tilde,
        })
    }

    pub fn is_entire(&self) -> bool {
        self.rays.is_empty()
    }

    /// `e^{-i theta} x^q / lambda`.
    pub fn image(&self, x: Complex64) -> Complex64 {
        Complex64::from_polar(1.0, -self.theta) * x.powi(self.q as i32) / self.lambda
    }

    /// `(r - eps_tilde)^q / |lambda| = d(0)`, the radius of the disc around
    /// the origin that stays clear of the singularities of `f_0(., z)` for
    /// every `|z| <= eps_tilde`.
    pub fn full_radius(&self) -> f64 {
        let r = self
            .rays
            .iter()
            .map(|ray| ray.start().norm())
            .fold(f64::INFINITY, f64::min);
        (r - self.eps_tilde).powi(self.q as i32) / self.lambda.norm()
    }

    /// `(r - eps_tilde)^q/|lambda| - eps`.
    pub fn r_eff(&self, eps: f64) -> f64 {
        self.full_radius() - eps
    }

    /// `d(w) = inf |w - e^{-i theta}(zeta - z)^q / lambda|` over `zeta` in `H`
    /// and `|z| <= eps_tilde`.
    ///
    /// Zero is detected exactly through the `q`-th roots of
    /// `lambda w e^{i theta}`. Otherwise the infimum is attained on the
    /// boundary of `H - D`, which is swept over the disc angle with a golden
    /// section search along each ray.
    pub fn singular_distance(&self, w: Complex64) -> f64 {
        if self.rays.is_empty() {
            return f64::INFINITY;
        }
        let target = self.lambda * w * Complex64::from_polar(1.0, self.theta);
        let q = self.q as f64;
        if target.norm() > 0.0 {
            let root = target.powf(1.0 / q);
            for j in 0..self.q {
                let y = root * Complex64::from_polar(1.0, TAU * j as f64 / q);
                if self
                    .rays
                    .iter()
                    .any(|r| r.distance(y) <= self.eps_tilde + 1e-12 * (1.0 + y.norm()))
                {
                    return 0.0;
                }
            }
        }
        let mut best = f64::INFINITY;
        for ray in &self.rays {
            best = best.min(self.ray_distance(ray, w));
        }
        best
    }

    fn ray_distance(&self, ray: &SingularRay, w: Complex64) -> f64 {
        let a = ray.start();
        let eps = self.eps_tilde;
        let dist_at = |phi: f64, tau: f64| {
            let x = a * tau - Complex64::from_polar(eps, phi);
            (w - self.image(x)).norm()
        };
        // far end: beyond tau_max the image modulus exceeds 2|w| + 1
        let scale = ((2.0 * w.norm() + 1.0) * self.lambda.norm()).powf(1.0 / self.q as f64);
        let tau_max = (scale + eps) / a.norm() + 2.0;
        let min_over_tau = |phi: f64| -> (f64, f64) {
            let n = 64;
            let grid = |i: usize| (tau_max.ln() * i as f64 / n as f64).exp();
            let mut bi = 0;
            let mut bv = f64::INFINITY;
            for i in 0..=n {
                let v = dist_at(phi, grid(i));
                if v < bv {
                    bv = v;
                    bi = i;
                }
            }
            let lo = grid(bi.saturating_sub(1));
            let hi = grid((bi + 1).min(n));
            let (t, v) = golden_min(lo, hi, |t| dist_at(phi, t));
            if v < bv {
                (t, v)
            } else {
                (grid(bi), bv)
            }
        };
        if eps == 0.0 {
            return min_over_tau(0.0).1;
        }
        let n_phi = 48;
        let mut best_phi = 0.0;
        let mut best = f64::INFINITY;
        for k in 0..n_phi {
            let phi = TAU * k as f64 / n_phi as f64;
            let v = min_over_tau(phi).1;
            if v < best {
                best = v;
                best_phi = phi;
            }
        }
        let h = TAU / n_phi as f64;
        let (_, v) = golden_min(best_phi - h, best_phi + h, |phi| min_over_tau(phi).1);
        best.min(v)
    }

    /// Lower bound of `dist(w_ij(z), R_+)` over `|z| <= eps_tilde` for all
    /// singular points, sampled on a polar grid of the disc.
    pub fn positive_axis_clearance(&self, points: &[Complex64]) -> f64 {
        let mut best = f64::INFINITY;
        for k in 0..=8 {
            let rad = self.eps_tilde * k as f64 / 8.0;
            let n_ang = if k == 0 { 1 } else { 64 };
            for j in 0..n_ang {
                let z = Complex64::from_polar(rad, TAU * j as f64 / n_ang as f64);
                for &a in points {
                    best = best.min(distance_to_positive_axis(self.image(a - z)));
                }
            }
        }
        best
    }

    /// `min(R/4, clearance/4)` with `R` the [`full_radius`](Self::full_radius).
    pub fn auto_eps(&self, points: &[Complex64]) -> f64 {
        (self.full_radius() / 4.0).min(self.positive_axis_clearance(points) / 4.0)
    }
}

/// Distance from `w` to the closed half-line `[0, inf)`.
pub fn distance_to_positive_axis(w: Complex64) -> f64 {
    if w.re >= 0.0 {
        w.im.abs()
    } else {
        w.norm()
    }
}

/// Golden-section minimisation on `[lo, hi]`.
fn golden_min<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, f: F) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
        if (hi - lo).abs() < 1e-13 * (1.0 + lo.abs()) {
            break;
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reference() -> AnalyticDatum {
        AnalyticDatum::simple_pole(c(1.0, 0.0)).unwrap()
    }

    #[test]
    fn eval_examples() {
        let d = reference();
        assert_eq!(d.eval(c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert!(matches!(d.eval(c(1.0, 0.0)), Err(Error::Singularity(_))));
        let v = d.eval(c(0.0, 1.0)).unwrap();
        assert!((v - c(0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn taylor_examples() {
        let d = reference();
        let t = d.taylor_coeffs(c(0.0, 0.0), 4).unwrap();
        assert!(t.iter().all(|x| (*x - c(1.0, 0.0)).norm() < 1e-15));
        let d2 = AnalyticDatum::simple_pole(c(2.0, 0.0)).unwrap();
        let t = d2.taylor_coeffs(c(0.0, 0.0), 3).unwrap();
        for (x, e) in t.iter().zip([0.5, 0.25, 0.125]) {
            assert!((x - c(e, 0.0)).norm() < 1e-15);
        }
        assert!(matches!(
            d.taylor_coeffs(c(0.5, 0.0), 3),
            Err(Error::OutsideDisc { .. })
        ));
    }

    #[test]
    fn taylor_matches_finite_differences() {
        let d = AnalyticDatum::new(
            vec![
                PoleTerm::new(c(0.3, -1.0), c(2.0, 0.5), 2),
                PoleTerm::simple(c(-1.0, 1.5)),
            ],
            vec![c(1.0, 0.0), c(0.0, 2.0)],
            None,
        )
        .unwrap();
        let z0 = c(0.05, -0.02);
        let t = d.taylor_coeffs(z0, 4).unwrap();
        // Cauchy formula on a small circle as an independent path
        let rho = 0.3;
        let n = 256;
        for (k, tk) in t.iter().enumerate() {
            let mut s = c(0.0, 0.0);
            for j in 0..n {
                let e = Complex64::from_polar(1.0, TAU * j as f64 / n as f64);
                s += d.eval(z0 + e * rho).unwrap() / (e * rho).powi(k as i32);
            }
            s /= n as f64;
            assert!((s - tk).norm() < 1e-12, "k = {k}: {s} vs {tk}");
        }
    }

    #[test]
    fn taylor_is_linear_over_terms() {
        let terms = vec![
            PoleTerm::new(c(1.0, 0.0), c(1.0, 0.0), 1),
            PoleTerm::new(c(0.0, 2.0), c(0.0, 2.0), 3),
        ];
        let z0 = c(0.01, 0.02);
        let whole = AnalyticDatum::new(terms.clone(), vec![], None)
            .unwrap()
            .taylor_coeffs(z0, 12)
            .unwrap();
        let mut sum = vec![c(0.0, 0.0); 12];
        for t in terms {
            let part = AnalyticDatum::new(vec![t], vec![], Some(0.05))
                .unwrap()
                .taylor_coeffs(z0, 12)
                .unwrap();
            for (s, p) in sum.iter_mut().zip(part) {
                *s += p;
            }
        }
        for (a, b) in whole.iter().zip(&sum) {
            assert!((a - b).norm() <= 1e-13 * a.norm().max(1.0));
        }
    }

    #[test]
    fn polynomial_taylor_shift() {
        let d = AnalyticDatum::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let t = d.taylor_coeffs(c(0.5, 0.0), 4).unwrap();
        assert_eq!(t, vec![c(0.25, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(d.derivative(2, c(0.3, 0.0)), c(2.0, 0.0));
    }

    #[test]
    fn stokes_examples() {
        assert_eq!(reference().stokes_directions(2.0, 0.0), vec![0.0]);
        let di = AnalyticDatum::simple_pole(c(0.0, 1.0)).unwrap();
        let s = di.stokes_directions(2.0, 0.0);
        assert_eq!(s.len(), 1);
        assert!((s[0] - PI).abs() < 1e-12);
        let two = AnalyticDatum::new(
            vec![
                PoleTerm::simple(c(1.0, 0.0)),
                PoleTerm::simple(c(-1.0, 0.0)),
            ],
            vec![],
            None,
        )
        .unwrap();
        assert_eq!(two.stokes_directions(2.0, 0.0), vec![0.0]);
    }

    #[test]
    fn rays_group_points() {
        let d = AnalyticDatum::new(
            vec![
                PoleTerm::simple(c(3.0, 0.0)),
                PoleTerm::simple(c(1.0, 0.0)),
                PoleTerm::simple(c(0.0, 2.0)),
            ],
            vec![],
            None,
        )
        .unwrap();
        let s = d.singularities();
        assert_eq!(s.rays.len(), 2);
        assert_eq!(s.rays[0].points, vec![c(1.0, 0.0), c(3.0, 0.0)]);
        assert_eq!(s.r(), 1.0);
    }

    #[test]
    fn direction_gate() {
        let d = reference();
        assert!(matches!(
            Direction::for_heat(&d, 0.01, 0.1),
            Err(Error::StokesDirection { .. })
        ));
        assert!(Direction::for_heat(&d, TAU - 0.05, 0.1).is_err());
        let ok = Direction::for_heat(&d, PI, 0.1).unwrap();
        assert_eq!(ok.theta, PI);
    }

    #[test]
    fn distance_examples() {
        let d = reference();
        let g = SingularGeometry::with_disc(&d, 2, c(1.0, 0.0), PI, 0.0).unwrap();
        assert!((g.singular_distance(c(0.0, 0.0)) - 1.0).abs() < 1e-9);
        for sigma in [0.3, 1.0, 2.5] {
            assert!((g.singular_distance(c(sigma, 0.0)) - (sigma + 1.0)).abs() < 1e-9);
        }
        assert_eq!(g.singular_distance(c(-1.0, 0.0)), 0.0);
        assert_eq!(g.singular_distance(c(-4.0, 0.0)), 0.0);
    }

    #[test]
    fn distance_with_disc_matches_closed_form_on_real_axis() {
        let d = reference().with_eps_tilde(0.005).unwrap();
        let g = SingularGeometry::new(&d, 2, c(1.0, 0.0), PI).unwrap();
        for w in [0.0, 0.95, 2.77] {
            let exact = w + 0.995f64.powi(2);
            assert!((g.singular_distance(c(w, 0.0)) - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn distance_against_brute_force_grid() {
        let d = AnalyticDatum::new(
            vec![
                PoleTerm::simple(c(1.0, 1.0)),
                PoleTerm::simple(c(-2.0, 0.5)),
            ],
            vec![],
            Some(0.1),
        )
        .unwrap();
        let g = SingularGeometry::new(&d, 3, c(0.5, 0.5), 2.0).unwrap();
        for w in [c(0.3, 0.2), c(-1.0, 2.0), c(4.0, -3.0)] {
            let fast = g.singular_distance(w);
            let mut brute = f64::INFINITY;
            for ray in &d.singularities().rays {
                for i in 0..=3000 {
                    let tau = 1.0 + 6.0 * (i as f64 / 3000.0).powi(2);
                    for k in 0..=10 {
                        let rad = 0.1 * k as f64 / 10.0;
                        for j in 0..72 {
                            let z = Complex64::from_polar(rad, TAU * j as f64 / 72.0);
                            let x = ray.start() * tau - z;
                            brute = brute.min((w - g.image(x)).norm());
                        }
                    }
                }
            }
            assert!(fast <= brute + 1e-9, "{w}: {fast} vs {brute}");
            assert!(
                brute - fast < 2e-3 * (1.0 + brute),
                "{w}: {fast} vs {brute}"
            );
        }
    }

    #[test]
    fn image_points_have_zero_distance() {
        let d = reference().with_eps_tilde(0.05).unwrap();
        let g = SingularGeometry::new(&d, 2, c(1.0, 0.0), 2.0).unwrap();
        for tau in [1.0, 1.5, 3.0] {
            for j in 0..12 {
                let z = Complex64::from_polar(0.05, TAU * j as f64 / 12.0);
                let w = g.image(c(tau, 0.0) - z);
                assert_eq!(g.singular_distance(w), 0.0);
            }
        }
        // just outside the image set
        let w = g.image(c(0.9, 0.0));
        assert!(g.singular_distance(w) > 0.0);
    }

    #[test]
    fn w_ij_stay_off_positive_axis_for_valid_direction() {
        let d = reference();
        let dir = Direction::for_heat(&d, 2.5, 0.3).unwrap();
        let g = SingularGeometry::new(&d, 2, c(1.0, 0.0), dir.theta).unwrap();
        let pts: Vec<_> = d.singularities().points().collect();
        assert!(g.positive_axis_clearance(&pts) > 0.0);
    }

    #[test]
    fn auto_eps_for_reference_problem() {
        let d = reference();
        let g = SingularGeometry::new(&d, 2, c(1.0, 0.0), PI).unwrap();
        let pts: Vec<_> = d.singularities().points().collect();
        let eps = g.auto_eps(&pts);
        assert!((eps - 0.81 / 4.0).abs() < 1e-12, "{eps}");
    }

    #[test]
    fn growth_examples() {
        let d = reference();
        let (cc, b) = d.growth_bound(2.0, 0.1).unwrap();
        assert_eq!(b, 0.0);
        assert!(cc > 1.1 && cc <= 11.0 + 1e-9, "{cc}");
        let d2 = AnalyticDatum::new(
            vec![
                // 1/((1-z)(2i-z)) in partial fractions
                PoleTerm::new(1.0 / c(-1.0, 2.0), c(1.0, 0.0), 1),
                PoleTerm::new(1.0 / c(1.0, -2.0), c(0.0, 2.0), 1),
            ],
            vec![],
            None,
        )
        .unwrap();
        let (_, b) = d2.growth_bound(2.0, 0.1).unwrap();
        assert_eq!(b, 0.0);
        let samples = d.growth_samples(50.0, 0.1);
        // exp(z) is not of order p < 1
        assert!(matches!(
            check_growth_envelope(|z| Ok(z.exp()), 0.5, 10.0, 1.0, &samples),
            Err(Error::GrowthViolation { .. })
        ));
        assert!(check_growth_envelope(|z| Ok(z.exp()), 1.0, 1.001, 1.0, &samples).is_ok());
    }
}
