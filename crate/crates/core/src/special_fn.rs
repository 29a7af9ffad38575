//! Special functions behind the summation kernels: gamma, Mittag-Leffler
//! functions, the Ecalle kernel `C_alpha` and the kernel moments.
//!
//! Conventions:
//!
//! * `E_b(z) = sum_n z^n / Gamma(1 + b n)` (one-parameter Mittag-Leffler).
//! * `C_a(tau) = sum_n (-tau)^n / (n! Gamma(1 - (n+1)/a))`, with terms whose
//!   gamma argument is a pole contributing exactly zero.
//! * For `q > 1`, `k = 1/(q-1)` and `c_q = (k+1)^(k+1) k^(-k)`; the kernel
//!   decays like `exp(-tau^(k+1)/c_q)` on the positive axis.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Ratio;
use twofloat::TwoFloat;

use crate::quadrature::{self, CompensatedSum};
use crate::{Error, Result};

/// `Gamma(x)` for real `x`; errors at the poles `0, -1, -2, ...`.
pub fn gamma_real(x: f64) -> Result<f64> {
    if is_gamma_pole(x) {
        return Err(Error::GammaPole(x));
    }
    Ok(libm::tgamma(x))
}

/// `1/Gamma(x)`, defined as zero at the poles of gamma.
pub fn rgamma(x: f64) -> f64 {
    if is_gamma_pole(x) {
        return 0.0;
    }
    if x < 0.5 {
        // reflection keeps the result finite where Gamma(x) underflows
        return libm::tgamma(1.0 - x) * (PI * x).sin() / PI;
    }
    1.0 / libm::tgamma(x)
}

/// `ln |Gamma(x)|`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

fn is_gamma_pole(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// Parameters of the order-`q` summation kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    order: Ratio<u32>,
    /// Pole order `q > 1`.
    pub q: f64,
    /// Summation level `k = 1/(q-1)`.
    pub k: f64,
    /// Kernel index `alpha = (k+1)/k`, equal to `q`.
    pub alpha: f64,
    /// Decay constant `c_q = (k+1)^(k+1) k^(-k)`.
    pub c_q: f64,
}

impl KernelParams {
    /// Kernel for the rational order `q = num/den`.
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if den == 0 || num <= den {
            return Err(Error::InvalidParameter(format!(
                "kernel order must be a rational q > 1, got {num}/{den}"
            )));
        }
        let order = Ratio::new(num, den);
        let q = *order.numer() as f64 / *order.denom() as f64;
        let k = 1.0 / (q - 1.0);
        let c_q = (k + 1.0).powf(k + 1.0) * k.powf(-k);
        Ok(Self {
            order,
            q,
            k,
            alpha: (k + 1.0) / k,
            c_q,
        })
    }

    pub fn integer(q: u32) -> Result<Self> {
        Self::new(q, 1)
    }

    /// The exact rational order `q`.
    pub fn order(&self) -> Ratio<u32> {
        self.order
    }

    /// Same kernel with a different decay constant. Only useful to build
    /// deliberately wrong envelopes.
    pub fn with_c_q(mut self, c_q: f64) -> Self {
        self.c_q = c_q;
        self
    }

    /// `exp(-tau^(k+1) / c_q)`.
    pub fn envelope(&self, tau: f64) -> f64 {
        (-self.envelope_exponent(tau)).exp()
    }

    /// `tau^(k+1) / c_q`.
    pub fn envelope_exponent(&self, tau: f64) -> f64 {
        tau.max(0.0).powf(self.k + 1.0) / self.c_q
    }

    /// `C_q(tau)`; see [`ecalle_kernel`].
    pub fn kernel(&self, tau: f64) -> Result<f64> {
        ecalle_kernel(self, Complex64::new(tau, 0.0)).map(|c| c.re)
    }
}

// ---------------------------------------------------------------------------
// Mittag-Leffler functions

/// Below this modulus the Mittag-Leffler series is tried first.
const ML_SERIES_RADIUS: f64 = 30.0;
const ML_TOL: f64 = 1e-10;

/// `E_b(z) = sum_n z^n / Gamma(1 + b n)` for `b > 0`.
///
/// Integer orders use the root-of-unity identity
/// `E_q(y^q) = (1/q) sum_{w^q = 1} exp(w y)`, which is exact for any `z`.
/// Other orders use the power series (compensated) for `|z| <= 30` and the
/// exponential-plus-algebraic asymptotic expansion beyond; when neither
/// reaches a relative accuracy of `1e-10` a [`Error::NonConvergence`] is
/// returned.
pub fn mittag_leffler(order: f64, z: Complex64) -> Result<Complex64> {
    if !(order > 0.0) || !order.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Mittag-Leffler order must be positive, got {order}"
        )));
    }
    let rounded = order.round();
    if rounded >= 1.0 && (order - rounded).abs() < 1e-12 {
        return Ok(mittag_leffler_binomial(
            rounded as u32,
            0,
            principal_root(z, rounded as u32),
        ));
    }
    let series = if z.norm() <= ML_SERIES_RADIUS {
        ml_series(order, z)
    } else {
        None
    };
    if let Some((value, err)) = series {
        if err <= ML_TOL * value.norm().max(f64::MIN_POSITIVE) {
            return Ok(value);
        }
    }
    if let Some((value, err)) = ml_asymptotic(order, z) {
        if err <= ML_TOL * value.norm() {
            return Ok(value);
        }
    }
    if let Some((value, err)) = series {
        if err <= ML_TOL * value.norm() {
            return Ok(value);
        }
    }
    Err(Error::NonConvergence(format!(
        "Mittag-Leffler E_{order}({z}) not reachable to relative accuracy {ML_TOL:e}"
    )))
}

fn principal_root(z: Complex64, q: u32) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        return z;
    }
    z.powf(1.0 / q as f64)
}

/// Returns the compensated series value and an estimate of its rounding error.
fn ml_series(order: f64, z: Complex64) -> Option<(Complex64, f64)> {
    if z.norm() == 0.0 {
        return Some((Complex64::new(1.0, 0.0), 0.0));
    }
    let ln_z = z.ln();
    let mut acc = CompensatedSum::new();
    let mut max_term: f64 = 0.0;
    let mut small = 0;
    let start_decay = z.norm().powf(1.0 / order);
    for n in 0..20_000usize {
        let nf = n as f64;
        let log_mag = nf * ln_z.re - ln_gamma(1.0 + order * nf);
        if log_mag > 700.0 {
            return None;
        }
        let term = Complex64::from_polar(log_mag.exp(), nf * ln_z.im);
        acc.add(term);
        max_term = max_term.max(term.norm());
        let s = acc.value().norm();
        if nf > start_decay && term.norm() <= 1e-17 * s.max(f64::MIN_POSITIVE) {
            small += 1;
            if small >= 3 {
                return Some((acc.value(), 4.0 * f64::EPSILON * max_term));
            }
        } else {
            small = 0;
        }
    }
    None
}

/// Exponential sum over admissible branches plus the optimally truncated
/// algebraic series `-sum_j z^{-j} / Gamma(1 - b j)`.
fn ml_asymptotic(order: f64, z: Complex64) -> Option<(Complex64, f64)> {
    let r = z.norm();
    if r == 0.0 {
        return None;
    }
    let arg = z.arg();
    let root = r.powf(1.0 / order);
    let mut exp_part = Complex64::new(0.0, 0.0);
    let m_range = (order / 2.0).ceil() as i64 + 1;
    for m in -m_range..=m_range {
        let phase = arg + 2.0 * PI * m as f64;
        if phase.abs() < order * PI {
            exp_part += Complex64::from_polar(1.0, phase / order).scale(root).exp();
        }
    }
    exp_part /= order;
    let mut alg = Complex64::new(0.0, 0.0);
    let mut last = f64::INFINITY;
    let inv = 1.0 / z;
    let mut pow = Complex64::new(1.0, 0.0);
    let mut err = 0.0;
    for j in 1..200 {
        pow *= inv;
        let c = rgamma(1.0 - order * j as f64);
        let term = pow * c;
        let mag = term.norm();
        if c != 0.0 && mag > last {
            break;
        }
        alg -= term;
        if c != 0.0 {
            last = mag;
            err = mag;
        }
        if c != 0.0 && mag < 1e-18 * (exp_part + alg).norm() {
            break;
        }
    }
    if !exp_part.re.is_finite() || !exp_part.im.is_finite() {
        return None;
    }
    Some((exp_part + alg, err))
}

/// `F_b(y) = sum_n C(n, b) y^{q n} / (q n)!` for integer `q >= 1`.
///
/// With `x = y^q` this is `(x^b / b!) E_q^{(b)}(x)`, i.e. the Mittag-Leffler
/// kernel after applying `t^b/b! d_t^b` to `E_q(t c)`. For `|y|` large the
/// value is obtained from `F_b = C(D/q, b) E` with `D = y d/dy`, which turns
/// into `(1/q) sum_w exp(w y) Q_b(w y)` for an explicit polynomial `Q_b`.
pub fn mittag_leffler_binomial(q: u32, b: u32, y: Complex64) -> Complex64 {
    assert!(q >= 1, "order must be at least 1");
    let switch = 1.5 + 0.5 * (q * b) as f64;
    if y.norm() <= switch {
        return ml_binomial_series(q, b, y);
    }
    let poly = binomial_touchard_poly(q, b);
    let mut sum = CompensatedSum::new();
    for j in 0..q {
        let w = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / q as f64);
        let x = w * y;
        let mut p = Complex64::new(0.0, 0.0);
        for &c in poly.iter().rev() {
            p = p * x + c;
        }
        sum.add(x.exp() * p);
    }
    sum.value() / q as f64
}

fn ml_binomial_series(q: u32, b: u32, y: Complex64) -> Complex64 {
    let mut acc = CompensatedSum::new();
    // y^{qn}/(qn)! built incrementally
    let mut pow = Complex64::new(1.0, 0.0);
    let mut small = 0;
    for n in 0..10_000u64 {
        if n > 0 {
            for i in 0..q as u64 {
                pow = pow * y / ((q as u64 * (n - 1) + i + 1) as f64);
            }
        }
        if n >= b as u64 {
            let term = pow * binomial(n, b as u64);
            acc.add(term);
            if term.norm() <= 1e-18 * acc.value().norm() {
                small += 1;
                if small >= 3 {
                    break;
                }
            } else {
                small = 0;
            }
        }
        if pow.norm() == 0.0 && n >= b as u64 {
            break;
        }
    }
    acc.value()
}

/// Coefficients `d_k` of `Q_b(x) = sum_k d_k x^k` where
/// `C(D/q, b) exp(x) = Q_b(x) exp(x)` for `D = x d/dx`.
pub(crate) fn binomial_touchard_poly(q: u32, b: u32) -> Vec<Complex64> {
    let b = b as usize;
    // signed Stirling numbers of the first kind s(b, p)
    let mut s1 = vec![vec![0.0f64; b + 1]; b + 1];
    s1[0][0] = 1.0;
    for n in 1..=b {
        for p in 1..=n {
            s1[n][p] = s1[n - 1][p - 1] - (n - 1) as f64 * s1[n - 1][p];
        }
    }
    // Stirling numbers of the second kind S(p, k)
    let mut s2 = vec![vec![0.0f64; b + 1]; b + 1];
    s2[0][0] = 1.0;
    for n in 1..=b {
        for k in 1..=n {
            s2[n][k] = k as f64 * s2[n - 1][k] + s2[n - 1][k - 1];
        }
    }
    let b_fact: f64 = (1..=b).map(|i| i as f64).product();
    let mut d = vec![Complex64::new(0.0, 0.0); b + 1];
    for p in 0..=b {
        let c_p = s1[b][p] / (b_fact * (q as f64).powi(p as i32));
        for k in 0..=p {
            d[k] += c_p * s2[p][k];
        }
    }
    d
}

/// Binomial coefficient as a float.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

// ---------------------------------------------------------------------------
// Ecalle kernel

/// Series value with an estimate of its absolute error.
#[derive(Debug, Clone, Copy)]
pub struct SeriesValue {
    pub value: Complex64,
    pub error: f64,
    pub terms: usize,
}

#[derive(Clone, Copy)]
struct DdComplex {
    re: TwoFloat,
    im: TwoFloat,
}

impl DdComplex {
    fn from_f64(re: f64, im: f64) -> Self {
        Self {
            re: TwoFloat::from(re),
            im: TwoFloat::from(im),
        }
    }

    fn mul_c(self, c: Complex64) -> Self {
        Self {
            re: self.re * c.re - self.im * c.im,
            im: self.re * c.im + self.im * c.re,
        }
    }

    fn scale_dd(self, s: TwoFloat) -> Self {
        Self {
            re: self.re * s,
            im: self.im * s,
        }
    }

    fn div_f(self, d: f64) -> Self {
        Self {
            re: self.re / d,
            im: self.im / d,
        }
    }

    fn add(self, o: Self) -> Self {
        Self {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }

    fn to_c(self) -> Complex64 {
        Complex64::new(f64::from(self.re), f64::from(self.im))
    }
}

/// Above this exponent `tau^(k+1)/c_q` the series is not attempted.
const SERIES_MAX_EXPONENT: f64 = 25.0;
const SERIES_REL_ACCEPT: f64 = 1e-13;

/// Sums the defining series of `C_alpha(tau)` in double-double arithmetic.
///
/// Reciprocal gammas are propagated exactly within each residue class
/// `n mod num(alpha)`; the class seeds carry `f64` accuracy, so the returned
/// error estimate is `eps * sum_c |S_c|` plus the double-double rounding of
/// the largest term.
pub fn ecalle_kernel_series(params: &KernelParams, tau: Complex64) -> Result<SeriesValue> {
    let mu = *params.order().numer() as usize;
    let nu = *params.order().denom() as usize;
    // class seeds 1/Gamma(x_n), x_n = 1 - (n+1) nu / mu, n < mu
    let mut g: Vec<TwoFloat> = (0..mu)
        .map(|n| {
            let x = 1.0 - ((n + 1) * nu) as f64 / mu as f64;
            TwoFloat::from(rgamma(x))
        })
        .collect();
    let mut class_sum = vec![DdComplex::from_f64(0.0, 0.0); mu];
    let neg_tau = -tau;
    let mut power = DdComplex::from_f64(1.0, 0.0);
    let mut max_term: f64 = 0.0;
    let mut small = 0;
    let min_terms = 2 * mu + (tau.norm().powf(params.k + 1.0) * 2.0) as usize;
    for n in 0..20_000usize {
        if n > 0 {
            power = power.mul_c(neg_tau).div_f(n as f64);
        }
        let class = n % mu;
        if n >= mu {
            // g_n = g_{n-mu} * prod_{i=1..nu} (x_{n-mu} - i)
            let x_prev_num = mu as f64 - ((n - mu + 1) * nu) as f64;
            let mut factor = TwoFloat::from(1.0);
            for i in 1..=nu {
                let num = TwoFloat::from(x_prev_num - (i * mu) as f64);
                factor *= num / mu as f64;
            }
            g[class] *= factor;
        }
        let term = power.scale_dd(g[class]);
        class_sum[class] = class_sum[class].add(term);
        let mag = term.to_c().norm();
        if !mag.is_finite() || mag > 1e300 {
            return Err(Error::NonConvergence(format!(
                "Ecalle kernel series overflow at tau = {tau}"
            )));
        }
        max_term = max_term.max(mag);
        let sum = class_sum
            .iter()
            .fold(DdComplex::from_f64(0.0, 0.0), |a, &c| a.add(c))
            .to_c();
        if mag <= 1e-20 * sum.norm() {
            small += 1;
        } else {
            small = 0;
        }
        if n >= min_terms && small >= 3 {
            // seeds carry f64 rounding; everything after is double-double
            let seed_err: f64 =
                class_sum.iter().map(|c| c.to_c().norm()).sum::<f64>() * 2.0 * f64::EPSILON;
            return Ok(SeriesValue {
                value: sum,
                error: seed_err + 1e-30 * max_term * n as f64,
                terms: n + 1,
            });
        }
    }
    Err(Error::NonConvergence(format!(
        "Ecalle kernel series did not converge at tau = {tau}"
    )))
}

/// Angle of the integration rays leaving the saddle point in
/// [`ecalle_kernel_contour`].
fn contour_ray_angle(alpha: f64) -> f64 {
    let lo = (PI / 4.0).max(PI / (2.0 * alpha));
    let hi = (3.0 * PI / 4.0).min(3.0 * PI / (2.0 * alpha));
    if lo < hi {
        0.5 * (lo + hi)
    } else {
        PI / alpha
    }
}

fn complex_pow(v: Complex64, alpha: f64) -> Complex64 {
    let r = alpha.round();
    if (alpha - r).abs() < 1e-12 {
        v.powi(r as i32)
    } else {
        v.powf(alpha)
    }
}

/// `C_alpha(tau)` for real `tau >= 0` from the saddle-point representation
/// `C_alpha(tau) = (alpha / 2 pi i) int exp(v^alpha - tau v) dv`, the
/// contour passing through the saddle `v0 = (tau/alpha)^(1/(alpha-1))` and
/// leaving along the rays `v0 + rho exp(+-i psi)`.
pub fn ecalle_kernel_contour(params: &KernelParams, tau: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "contour kernel needs real tau >= 0, got {tau}"
        )));
    }
    let alpha = params.alpha;
    let v0 = (tau / alpha).powf(1.0 / (alpha - 1.0));
    let psi = contour_ray_angle(alpha);
    let dir = Complex64::from_polar(1.0, psi);
    let phase = |v: Complex64| complex_pow(v, alpha) - v * tau;
    let f0 = phase(Complex64::new(v0, 0.0)).re;
    let rel = |rho: f64| phase(Complex64::new(v0, 0.0) + dir * rho) - f0;
    let rho_max = quadrature::log_tail_cutoff(0.0, -60.0, |rho| rel(rho).re);
    let curvature = alpha * (alpha - 1.0) * v0.powf(alpha - 2.0).min(1e12);
    let width = 1.0 / (curvature.abs() + 1.0).sqrt();
    let panels = ((rho_max / width).ceil() as usize).clamp(2, 1 << 12);
    let est = quadrature::adaptive(0.0, rho_max, panels, 2e-14, 0.0, 1 << 14, |rho| {
        Ok(rel(rho).exp())
    })?;
    let value = alpha / PI * (dir * est.value).im * f0.exp();
    Ok(value)
}

/// Ecalle kernel `C_alpha(tau)`.
///
/// The double-double series is used whenever its error estimate is below
/// `1e-13` relative; on the positive real axis the saddle-point contour takes
/// over for large `tau`. Complex `tau` outside the reach of the series is
/// reported as [`Error::NonConvergence`].
pub fn ecalle_kernel(params: &KernelParams, tau: Complex64) -> Result<Complex64> {
    let on_axis = tau.im == 0.0 && tau.re >= 0.0;
    if !on_axis || params.envelope_exponent(tau.norm()) <= SERIES_MAX_EXPONENT {
        match ecalle_kernel_series(params, tau) {
            Ok(s) if s.error <= SERIES_REL_ACCEPT * s.value.norm() => return Ok(s.value),
            Ok(s) if !on_axis => {
                return Err(Error::NonConvergence(format!(
                    "Ecalle kernel series at tau = {tau} only accurate to {:e}",
                    s.error
                )))
            }
            Err(e) if !on_axis => return Err(e),
            _ => {}
        }
    }
    ecalle_kernel_contour(params, tau.re).map(|v| Complex64::new(v, 0.0))
}

/// Closed form of the order-2 kernel, `exp(-tau^2/4)/sqrt(pi)`.
pub fn gaussian_kernel(tau: f64) -> f64 {
    (-0.25 * tau * tau).exp() / PI.sqrt()
}

/// Kernel of the Laplace-type summation integral
/// `u = int_0^inf C(tau) f_0(|t| tau^q) d tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LaplaceKernel {
    /// `exp(-tau^2/4)/sqrt(pi)`, the closed form for `q = 2`.
    Gaussian,
    /// The Ecalle kernel `C_q` evaluated from its series / contour forms.
    Ecalle(KernelParams),
}

impl LaplaceKernel {
    pub fn params(&self) -> KernelParams {
        match self {
            LaplaceKernel::Gaussian => KernelParams::integer(2).expect("q = 2 is valid"),
            LaplaceKernel::Ecalle(p) => *p,
        }
    }

    pub fn eval(&self, tau: f64) -> Result<f64> {
        match self {
            LaplaceKernel::Gaussian => Ok(gaussian_kernel(tau)),
            LaplaceKernel::Ecalle(p) => p.kernel(tau),
        }
    }
}

// ---------------------------------------------------------------------------
// Moments

/// `Gamma(1+q l)/l! * |t|^l * exp(-i theta l)`, the image of `t^l` under the
/// kernel integral along the ray `arg t = theta`.
pub fn gamma_moment(l: u32, q: f64, t_abs: f64, theta: f64) -> Complex64 {
    let lf = l as f64;
    let log_mag =
        ln_gamma(1.0 + q * lf) - ln_gamma(1.0 + lf) + if l == 0 { 0.0 } else { lf * t_abs.ln() };
    Complex64::from_polar(log_mag.exp(), -theta * lf)
}

/// `Gamma(1+q l)/l!`.
pub fn moment_ratio(l: u32, q: f64) -> f64 {
    let lf = l as f64;
    (ln_gamma(1.0 + q * lf) - ln_gamma(1.0 + lf)).exp()
}

/// Quadrature of `(1/(q|t|^{1/q})) int_0^inf C_q((s/|t|)^{1/q}) s^{l-1+1/q} ds`,
/// computed in the variable `tau = (s/|t|)^{1/q}` as `|t|^l int tau^{q l} C_q(tau)`.
/// Independent of [`gamma_moment`].
pub fn gamma_moment_quadrature(l: u32, params: &KernelParams, t_abs: f64) -> Result<f64> {
    let p = params.q * l as f64;
    let kp1 = params.k + 1.0;
    let peak = if p > 0.0 {
        (p * params.c_q / kp1).powf(1.0 / kp1)
    } else {
        0.0
    };
    let log_f = |tau: f64| {
        let lp = if p > 0.0 { p * tau.ln() } else { 0.0 };
        lp - params.envelope_exponent(tau)
    };
    let tau_max = quadrature::log_tail_cutoff(peak, -45.0, log_f);
    // scale out the peak so the integrand stays O(1)
    let log_peak = if p > 0.0 { log_f(peak) } else { 0.0 };
    let est = quadrature::adaptive(0.0, tau_max, 16, 1e-12, 0.0, 1 << 12, |tau| {
        let c = params.kernel(tau)?;
        let w = if p > 0.0 {
            (p * tau.ln() - log_peak).exp()
        } else {
            1.0
        };
        Ok(Complex64::new(c * w, 0.0))
    })?;
    Ok(est.value.re * (log_peak + l as f64 * t_abs.ln()).exp())
}
