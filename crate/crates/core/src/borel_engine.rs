//! Borel summation of `(d_t - lambda d_z^q)^beta u = 0` with
//! `d_t^j u(0, z) = 0` for `j < beta - 1` and `d_t^{beta-1} u(0, z) = lambda^{beta-1} d_z^{q(beta-1)} phi(z)`,
//! and its hyperasymptotic expansion.
//!
//! The formal solution is `u = sum_n C(n, beta-1) lambda^n phi^{(qn)}(z) t^n / n!`.
//! Its `k`-Borel transform (`k = 1/(q-1)`) is
//! `v(x, z) = sum_n C(n, beta-1) lambda^n phi^{(qn)}(z) x^n / (qn)!`, and the
//! sum along `arg t = theta` is `u = int_0^inf C_q(tau) v(t tau^q, z) d tau`.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::datum::{AnalyticDatum, Direction, SingularGeometry};
use crate::expansion::{
    BorelSource, Calibration, ExpansionEngine, ExpansionOptions, HyperExpansion, RemainderReport,
    Truncation, TruncationSchedule,
};
use crate::quadrature::{self, CompensatedSum};
use crate::special_fn::{
    binomial, binomial_touchard_poly, ln_gamma, mittag_leffler_binomial, KernelParams,
    LaplaceKernel,
};
use crate::{Error, Result};

/// `(d_t - lambda d_z^q)^beta u = 0` with a monomial symbol and integer `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpleEquation {
    pub lambda: Complex64,
    pub q: u32,
    pub beta: u32,
    pub kernel: KernelParams,
}

impl SimpleEquation {
    pub fn new(lambda: Complex64, q: u32, beta: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidParameter(format!(
                "order q must be at least 2, got {q}"
            )));
        }
        if beta < 1 {
            return Err(Error::InvalidParameter(
                "multiplicity beta must be at least 1".into(),
            ));
        }
        if !(lambda.norm() > 0.0) {
            return Err(Error::InvalidParameter("lambda must be nonzero".into()));
        }
        Ok(Self {
            lambda,
            q,
            beta,
            kernel: KernelParams::integer(q)?,
        })
    }

    /// `u_t = u_zz`.
    pub fn heat() -> Self {
        Self::new(Complex64::new(1.0, 0.0), 2, 1).expect("heat parameters are valid")
    }

    /// `1/(q - 1)`.
    pub fn k(&self) -> f64 {
        self.kernel.k
    }

    pub fn stokes_directions(&self, datum: &AnalyticDatum) -> Vec<f64> {
        datum.stokes_directions(self.q as f64, self.lambda.arg())
    }

    /// `u_n` in `u = sum_n u_n t^n / n!`, i.e. `C(n, beta-1) lambda^n phi^{(qn)}(z)`.
    pub fn formal_coefficients(
        &self,
        datum: &AnalyticDatum,
        z: Complex64,
        count: usize,
    ) -> Vec<Complex64> {
        let q = self.q as usize;
        let taylor = datum.taylor_coeffs_unchecked(z, q * count.saturating_sub(1) + 1);
        let b = (self.beta - 1) as u64;
        (0..count)
            .map(|n| {
                let log_fact = ln_gamma(1.0 + (q * n) as f64);
                taylor[q * n] * log_fact.exp() * self.lambda.powu(n as u32) * binomial(n as u64, b)
            })
            .collect()
    }

    /// Taylor coefficients of `v(x, z)` in `x`:
    /// `C(n, beta-1) lambda^n phi^{(qn)}(z)/(qn)!`.
    pub fn borel_coefficients(
        &self,
        datum: &AnalyticDatum,
        z: Complex64,
        count: usize,
    ) -> Vec<Complex64> {
        let q = self.q as usize;
        let taylor = datum.taylor_coeffs_unchecked(z, q * count.saturating_sub(1) + 1);
        let b = (self.beta - 1) as u64;
        (0..count)
            .map(|n| taylor[q * n] * self.lambda.powu(n as u32) * binomial(n as u64, b))
            .collect()
    }

    /// `v(x, z)` from the root-of-unity closed form
    /// `(1/q) sum_w sum_k d_k (w y)^k phi^{(k)}(z + w y)`, `y^q = lambda x`,
    /// or from its Taylor series near `x = 0`.
    pub fn v_closed(&self, datum: &AnalyticDatum, x: Complex64, z: Complex64) -> Result<Complex64> {
        let y = (self.lambda * x).powf(1.0 / self.q as f64);
        let reach = datum.singularities().distance_to_h(z);
        if y.norm() <= 0.25 * reach.min(4.0) {
            return Ok(self.v_series(datum, x, z));
        }
        let d = binomial_touchard_poly(self.q, self.beta - 1);
        let mut acc = CompensatedSum::new();
        for j in 0..self.q {
            let wy = Complex64::from_polar(1.0, TAU * j as f64 / self.q as f64) * y;
            let point = z + wy;
            if d.len() == 1 {
                acc.add(d[0] * datum.eval(point)?);
            } else {
                datum.eval(point)?;
                let taylor = datum.taylor_coeffs_unchecked(point, d.len());
                let mut fact = 1.0;
                let mut pow = Complex64::new(1.0, 0.0);
                for (k, &dk) in d.iter().enumerate() {
                    if k > 0 {
                        fact *= k as f64;
                        pow *= wy;
                    }
                    acc.add(dk * pow * taylor[k] * fact);
                }
            }
        }
        Ok(acc.value() / self.q as f64)
    }

    fn v_series(&self, datum: &AnalyticDatum, x: Complex64, z: Complex64) -> Complex64 {
        let mut count = 16;
        loop {
            let c = self.borel_coefficients(datum, z, count);
            let mut acc = CompensatedSum::new();
            let mut pow = Complex64::new(1.0, 0.0);
            let mut last = 0.0;
            for &cn in &c {
                let term = cn * pow;
                acc.add(term);
                last = term.norm();
                pow *= x;
            }
            let v = acc.value();
            if last <= 1e-17 * v.norm().max(1e-300) || count >= 512 || pow.norm() == 0.0 {
                return v;
            }
            count *= 2;
        }
    }

    /// `v(t, z)` from the double integral
    /// `t^b/b! d_t^b (1/2 pi i) oint_{|w| = e} phi(w) int_{e^{i a} r0}^{e^{i a} inf} E_q(t lambda zeta^q) e^{zeta z} e^{-zeta w} d zeta dw`
    /// with `b = beta - 1` and `a = -arg w`. The derivative is taken
    /// termwise in the Mittag-Leffler series. The ray starts at `r0 = 0`:
    /// its start point `r0 e^{-i arg w}` would otherwise depend on `w`, and
    /// the dropped piece does not integrate to zero over the circle.
    pub fn v_integral(
        &self,
        datum: &AnalyticDatum,
        t: Complex64,
        z: Complex64,
    ) -> Result<Complex64> {
        let r = datum.r();
        let c = (t * self.lambda).powf(1.0 / self.q as f64);
        let need = z.norm() + c.norm();
        if need >= r {
            return Err(Error::OutsideHolomorphy(format!(
                "|t| = {} outside the disc of radius (r - |z|)^q/|lambda| = {}",
                t.norm(),
                (r - z.norm()).powi(self.q as i32) / self.lambda.norm()
            )));
        }
        // circle radius halfway between the decay threshold and the poles
        let eps_w = if r.is_finite() {
            0.5 * (need + r)
        } else {
            need + 1.0
        };
        let decay = eps_w - need;
        let r0: f64 = 0.0;
        let b = self.beta - 1;
        let rho_max = r0 + (45.0 + b as f64 * (1.0 + c.norm() * (r0 + 100.0 / decay)).ln()) / decay;
        let inner = |w: Complex64| -> Result<Complex64> {
            let dir = Complex64::from_polar(1.0, -w.arg());
            let est = quadrature::adaptive(r0, rho_max, 8, 1e-13, 0.0, 1 << 12, |rho| {
                let zeta = dir * rho;
                Ok(mittag_leffler_binomial(self.q, b, c * zeta) * (zeta * (z - w)).exp() * dir)
            })?;
            Ok(est.value)
        };
        let outer = |nodes: usize| -> Result<(Complex64, f64)> {
            let mut acc = CompensatedSum::new();
            let mut l1 = 0.0;
            for j in 0..nodes {
                let w = Complex64::from_polar(eps_w, TAU * (j as f64 + 0.5) / nodes as f64);
                // dw / (2 pi i) = w d phi / (2 pi)
                let term = datum.eval(w)? * inner(w)? * w;
                l1 += term.norm();
                acc.add(term);
            }
            Ok((acc.value() / nodes as f64, l1 / nodes as f64))
        };
        let mut nodes = 32;
        let (mut prev, _) = outer(nodes)?;
        loop {
            nodes *= 2;
            let (cur, l1) = outer(nodes)?;
            let err = (cur - prev).norm();
            if err <= 1e-12 * l1.max(cur.norm()) {
                return Ok(cur);
            }
            if nodes >= 1 << 11 {
                return Err(Error::Quadrature {
                    estimate: cur.norm(),
                    error: err,
                    nodes,
                });
            }
            prev = cur;
        }
    }
}

/// Series part of a `k`-Borel transform `v(s) = sum_n u_n s^n / Gamma(1 + q n)`,
/// `q = 1 + 1/k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BorelFunction {
    pub q: f64,
    /// `u_n / Gamma(1 + q n)`.
    pub coefficients: Vec<Complex64>,
    /// Radius of holomorphy in `s` (infinite for polynomials).
    pub radius: f64,
}

impl BorelFunction {
    pub fn coefficient(&self, n: usize) -> Complex64 {
        self.coefficients.get(n).copied().unwrap_or_default()
    }

    pub fn is_polynomial(&self) -> bool {
        self.radius.is_infinite()
    }

    /// Partial sum of the series; only inside the holomorphy radius unless
    /// the function is a polynomial.
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        if !self.is_polynomial() && s.norm() >= self.radius {
            return Err(Error::OutsideHolomorphy(format!(
                "|s| = {} beyond the series radius {}",
                s.norm(),
                self.radius
            )));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coefficients.iter().rev() {
            acc = acc * s + c;
        }
        Ok(acc)
    }
}

/// `k`-Borel transform of `u = sum_n u_n t^n / n!` (finitely many terms).
pub fn borel_transform(u: &[Complex64], k: f64) -> BorelFunction {
    let q = 1.0 + 1.0 / k;
    let coefficients = u
        .iter()
        .enumerate()
        .map(|(n, &un)| un * (-ln_gamma(1.0 + q * n as f64)).exp())
        .collect();
    BorelFunction {
        q,
        coefficients,
        radius: f64::INFINITY,
    }
}

/// `int_0^inf C(tau) v(t tau^q) d tau` with `C` the order-`q` kernel.
///
/// The half-line is covered by doubling segments until both the kernel
/// envelope and the integrand have decayed; a segment whose mass grows
/// while the kernel has already decayed signals that `v` grows faster than
/// the kernel decays.
pub fn laplace_sum<F>(kernel: &LaplaceKernel, t: Complex64, rel_tol: f64, v: F) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let params = kernel.params();
    let q = params.q;
    let f = |tau: f64| -> Result<Complex64> {
        let c = kernel.eval(tau)?;
        if c == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(v(t * tau.powf(q))? * c)
    };
    let mut acc = CompensatedSum::new();
    let mut total_l1 = 0.0;
    let mut a = 0.0;
    let mut b = 4.0;
    let mut prev_l1 = f64::INFINITY;
    loop {
        let est = quadrature::adaptive(a, b, 4, rel_tol, 0.0, 1 << 12, f)?;
        acc.add(est.value);
        total_l1 += est.l1 * (b - a);
        let seg = est.l1 * (b - a);
        let envelope = params.envelope_exponent(b);
        if seg <= 1e-17 * total_l1 && envelope > 40.0 {
            return Ok(acc.value());
        }
        if envelope > 40.0 && seg > prev_l1 {
            return Err(Error::TailNotDominated(format!(
                "integrand mass on [{a}, {b}] is {seg:e} and still growing"
            )));
        }
        if b > 1e4 {
            return Err(Error::TailNotDominated(format!(
                "no decay of the summation integrand up to tau = {b}"
            )));
        }
        prev_l1 = seg;
        a = b;
        b *= 2.0;
    }
}

/// `f_0(s) = v(s e^{i theta}, z)` of the simple equation.
#[derive(Debug, Clone)]
pub struct SimpleSource<'a> {
    pub equation: &'a SimpleEquation,
    pub datum: &'a AnalyticDatum,
    pub z: Complex64,
    pub theta: f64,
}

impl BorelSource for SimpleSource<'_> {
    fn f0(&self, s: Complex64) -> Result<Complex64> {
        self.equation.v_closed(
            self.datum,
            s * Complex64::from_polar(1.0, self.theta),
            self.z,
        )
    }

    fn f0_taylor(&self, count: usize) -> Result<Vec<Complex64>> {
        let c = self.equation.borel_coefficients(self.datum, self.z, count);
        Ok(c.into_iter()
            .enumerate()
            .map(|(l, cl)| cl * Complex64::from_polar(1.0, self.theta * l as f64))
            .collect())
    }
}

/// Hyperasymptotic engine for the simple equation along one direction.
#[derive(Debug, Clone)]
pub struct SimpleEngine {
    pub equation: SimpleEquation,
    pub datum: AnalyticDatum,
    pub direction: Direction,
    pub engine: ExpansionEngine,
}

impl SimpleEngine {
    pub fn new(
        equation: SimpleEquation,
        datum: AnalyticDatum,
        theta: f64,
        delta: f64,
        options: ExpansionOptions,
    ) -> Result<Self> {
        let direction = Direction::new(theta, delta, equation.stokes_directions(&datum))?;
        let geometry = SingularGeometry::new(&datum, equation.q, equation.lambda, direction.theta)?;
        let b_tilde = match options.b_tilde {
            Some(b) => b,
            None => {
                let p = equation.k() * equation.q as f64;
                datum.growth_bound(p, 0.5 * datum.eps_tilde())?.1
            }
        };
        let points: Vec<Complex64> = datum.singularities().points().collect();
        let kernel = LaplaceKernel::Ecalle(equation.kernel);
        let engine = ExpansionEngine::new(geometry, kernel, &points, b_tilde, options)?;
        Ok(Self {
            equation,
            datum,
            direction,
            engine,
        })
    }

    pub fn theta(&self) -> f64 {
        self.direction.theta
    }

    pub fn source(&self, z: Complex64) -> SimpleSource<'_> {
        SimpleSource {
            equation: &self.equation,
            datum: &self.datum,
            z,
            theta: self.direction.theta,
        }
    }

    /// Series part of `v(., z)` with its radius `(r - |z|)^q / |lambda|`.
    pub fn borel_function(&self, z: Complex64, count: usize) -> BorelFunction {
        let r = self.datum.r();
        BorelFunction {
            q: self.equation.q as f64,
            coefficients: self.equation.borel_coefficients(&self.datum, z, count),
            radius: (r - z.norm()).powi(self.equation.q as i32) / self.equation.lambda.norm(),
        }
    }

    /// `N_0 = floor(k R^k (1/(c_q |t|^k) - B) + 1 - 1/q)` and
    /// `sigma_1 = ((N_0 - 1 + 1/q)/(k (1/(c_q |t|^k) - B)))^{1/k}`.
    pub fn generalized_schedule(&self, t_abs: f64) -> Result<TruncationSchedule> {
        self.engine.level0_schedule(t_abs)
    }

    pub fn schedule(&self, t_abs: f64, level: usize) -> Result<TruncationSchedule> {
        self.engine.schedule(t_abs, level)
    }

    /// Optimal `N_n`, `sigma_{n+1}` for a schedule through level `n - 1`.
    pub fn generalized_condition_solve(
        &self,
        sched: &TruncationSchedule,
        n: usize,
    ) -> Result<Truncation> {
        let mut s = sched.through(n - 1);
        s.radii.push(self.engine.big_radius(n, s.sigma(n)));
        self.engine.next_truncation(&s, n)
    }

    /// `sum_{j = beta-1}^{N_0 - 1} C(j, beta-1) lambda^j phi^{(qj)}(z) t^j / j!`.
    pub fn leading_sum(&self, t: Complex64, z: Complex64, n0: usize) -> Complex64 {
        let u = self.equation.formal_coefficients(&self.datum, z, n0);
        let mut acc = CompensatedSum::new();
        for (j, &uj) in u.iter().enumerate() {
            acc.add(uj * t.powu(j as u32) * (-ln_gamma(1.0 + j as f64)).exp());
        }
        acc.value()
    }

    pub fn calibrate(&self, z: Complex64, levels: usize) -> Result<Calibration> {
        self.engine.calibrate(&self.source(z), levels)
    }

    fn check_point(&self, t: Complex64, z: Complex64) -> Result<f64> {
        let t_abs = t.norm();
        if !(t_abs > 0.0) {
            return Err(Error::InvalidParameter("t must be nonzero".into()));
        }
        let dev = crate::datum::angle_distance(t.arg().rem_euclid(TAU), self.theta());
        if dev > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "arg t = {} is off the summation ray theta = {}",
                t.arg(),
                self.theta()
            )));
        }
        if z.norm() >= self.datum.eps_tilde() {
            return Err(Error::OutsideDisc {
                point: z,
                radius: self.datum.eps_tilde(),
            });
        }
        Ok(t_abs)
    }

    pub fn generalized_hyper_expand(
        &self,
        t: Complex64,
        z: Complex64,
        level: usize,
        calibration: Option<&Calibration>,
    ) -> Result<(HyperExpansion, RemainderReport)> {
        let t_abs = self.check_point(t, z)?;
        self.engine
            .hyper_expand(&self.source(z), t_abs, self.theta(), z, level, calibration)
    }

    pub fn expand(
        &self,
        t: Complex64,
        z: Complex64,
        level: usize,
        calibration: Option<&Calibration>,
    ) -> Result<HyperExpansion> {
        let t_abs = self.check_point(t, z)?;
        self.engine
            .expand(&self.source(z), t_abs, self.theta(), z, level, calibration)
    }

    /// Borel sum `int_0^inf C_q(tau) v(t tau^q, z) d tau` with `v` in closed form.
    pub fn laplace_sum(&self, t: Complex64, z: Complex64, rel_tol: f64) -> Result<Complex64> {
        let kernel = LaplaceKernel::Ecalle(self.equation.kernel);
        laplace_sum(&kernel, t, rel_tol, |x| {
            self.equation.v_closed(&self.datum, x, z)
        })
    }
}
