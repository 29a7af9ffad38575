//! Level-by-level hyperasymptotic machinery shared by the heat and Borel
//! engines.
//!
//! Both problems reduce to a Laplace-type integral
//! `u = int_0^inf C(tau) f_0(|t| tau^q) d tau` of a Borel-plane function
//! `f_0`. Truncating the Taylor series of `f_0` at 0 after `N_0` terms and
//! re-expanding the remainder around `sigma_1, sigma_2, ...` gives
//!
//! ```text
//! f_0(s) = sum_{l<N_0} b_{0,l} s^l
//!        + sum_{m=1..n} sum_{j<N_m} b_{m,j} P_{m-1}(s) (s - sigma_m)^j
//!        + P_n(s) f_{n+1}(s),
//! P_m(s) = s^{N_0} (s - sigma_1)^{N_1} ... (s - sigma_m)^{N_m},
//! ```
//!
//! so `u` splits into the exact level-0 sum, the correction moments and the
//! remainder `R_n = int C(tau) P_n(s) f_{n+1}(s) d tau`.

use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contour::{self, ContourSpec};
use crate::datum::SingularGeometry;
use crate::quadrature;
use crate::special_fn::{moment_ratio, KernelParams, LaplaceKernel};
use crate::{Error, Result};

/// Borel-plane function `f_0(s) = v(s e^{i theta}, z)` at fixed `z`, `theta`.
pub trait BorelSource: Send + Sync {
    fn f0(&self, s: Complex64) -> Result<Complex64>;
    /// Taylor coefficients `b_{0,l}` of `f_0` at `s = 0`, `l < count`.
    fn f0_taylor(&self, count: usize) -> Result<Vec<Complex64>>;
}

/// How the width `eps` of the clearance margins is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EpsPolicy {
    /// `min(R/4, c/4)` with `R` the singularity-free radius of `f_0` and `c`
    /// the clearance of the singular images from the positive axis.
    Auto,
    Fixed(f64),
}

/// Evaluation path of `f_m` at the top recursion level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FMode {
    /// Divided differences unless they amplify rounding errors by more than
    /// [`ExpansionOptions::dd_amplification`].
    Auto,
    DividedDifference,
    Contour,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionOptions {
    pub eps: EpsPolicy,
    /// Growth constant `B` of the datum; `None` lets the engine estimate it.
    pub b_tilde: Option<f64>,
    pub f_mode: FMode,
    /// Relative tolerance of contour integrals.
    pub contour_tol: f64,
    /// Relative tolerance of the kernel rule on known moments.
    pub quad_tol: f64,
    /// Truncations `N_n` are scanned over `1..=ceil(scan_factor * N_0)`.
    pub scan_factor: f64,
    pub dd_amplification: f64,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        Self {
            eps: EpsPolicy::Auto,
            b_tilde: None,
            f_mode: FMode::Auto,
            contour_tol: 1e-14,
            quad_tol: 1e-12,
            scan_factor: 4.0,
            dd_amplification: 1e2,
        }
    }
}

/// Decay rate of the remainder integrands in the Borel plane:
/// the kernel contributes `exp(-s^k rate)` with
/// `rate = 1/(c_q |t|^k) - B` and the Jacobian `s^{-offset}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    pub q: f64,
    pub k: f64,
    pub c_q: f64,
    pub b_tilde: f64,
    pub t_abs: f64,
    pub rate: f64,
    pub offset: f64,
}

impl RateModel {
    pub fn new(params: &KernelParams, b_tilde: f64, t_abs: f64) -> Result<Self> {
        if !(t_abs > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "|t| must be positive, got {t_abs}"
            )));
        }
        let rate = 1.0 / (params.c_q * t_abs.powf(params.k)) - b_tilde;
        if !(rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "|t| = {t_abs} too large for growth constant B = {b_tilde}"
            )));
        }
        Ok(Self {
            q: params.q,
            k: params.k,
            c_q: params.c_q,
            b_tilde,
            t_abs,
            rate,
            offset: 1.0 - 1.0 / params.q,
        })
    }

    /// `floor(k R^k rate + offset)`, possibly below 1.
    pub fn optimal_n0(&self, r0: f64) -> i64 {
        (self.k * r0.powf(self.k) * self.rate + self.offset).floor() as i64
    }

    /// `((N_0 - offset)/(k rate))^{1/k}`.
    pub fn sigma1(&self, n0: usize) -> f64 {
        ((n0 as f64 - self.offset) / (self.k * self.rate)).powf(1.0 / self.k)
    }

    /// `k s^{k-1} rate - (N_0 - offset)/s - sum_m N_m/(s - sigma_m)`; its
    /// roots are the critical points of [`log_integrand`](Self::log_integrand).
    pub fn residual(&self, s: f64, ns: &[usize], sigmas: &[f64]) -> f64 {
        let mut r = self.k * s.powf(self.k - 1.0) * self.rate - (ns[0] as f64 - self.offset) / s;
        for (m, &n) in ns.iter().enumerate().skip(1) {
            r -= n as f64 / (s - sigmas[m - 1]);
        }
        r
    }

    /// Logarithm of the remainder-integrand estimate
    /// `exp(-s^k rate) s^{N_0 - offset} prod_m |s - sigma_m|^{N_m} / prod_m R_m^{N_m}`.
    pub fn log_integrand(&self, s: f64, ns: &[usize], sigmas: &[f64], radii: &[f64]) -> f64 {
        let mut g = -s.powf(self.k) * self.rate + (ns[0] as f64 - self.offset) * s.ln()
            - ns[0] as f64 * radii[0].ln();
        for (m, &n) in ns.iter().enumerate().skip(1) {
            g += n as f64 * ((s - sigmas[m - 1]).abs().ln() - radii[m].ln());
        }
        g
    }

    /// `1/(|t|^{1/q} sqrt(rate))`.
    pub fn prefactor(&self) -> f64 {
        1.0 / (self.t_abs.powf(1.0 / self.q) * self.rate.sqrt())
    }
}

/// Truncation points and radii through level `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationSchedule {
    pub t_abs: f64,
    pub eps: f64,
    pub b_tilde: f64,
    /// Radius `R_0` of the level-0 big disc.
    pub r_eff: f64,
    pub rate: RateModel,
    /// `N_0, ..., N_n`.
    pub ns: Vec<usize>,
    /// `sigma_1, ..., sigma_{n+1}`.
    pub sigmas: Vec<f64>,
    /// `R_0, ..., R_n`.
    pub radii: Vec<f64>,
    /// `g_m(sigma_{m+1})` for `m = 0..=n`.
    pub log_peaks: Vec<f64>,
}

impl TruncationSchedule {
    pub fn level(&self) -> usize {
        self.ns.len() - 1
    }

    /// `sigma_m` with `sigma_0 = 0`.
    pub fn sigma(&self, m: usize) -> f64 {
        if m == 0 {
            0.0
        } else {
            self.sigmas[m - 1]
        }
    }

    /// Exponent `eta_n` of the remainder bound `exp(-eta_n rate)`:
    /// `sigma_1^k` at level 0 and `-g_n(sigma_{n+1})/rate` above.
    pub fn eta(&self, n: usize) -> f64 {
        if n == 0 {
            self.sigmas[0].powf(self.rate.k)
        } else {
            -self.log_peaks[n] / self.rate.rate
        }
    }

    pub fn total_order(&self) -> usize {
        self.ns.iter().sum()
    }

    /// Truncated copy through level `n`.
    pub fn through(&self, n: usize) -> Self {
        let mut s = self.clone();
        s.ns.truncate(n + 1);
        s.sigmas.truncate(n + 1);
        s.radii.truncate(n + 1);
        s.log_peaks.truncate(n + 1);
        s
    }
}

/// Outcome of the scan over candidate truncations `N_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub n: usize,
    pub sigma_next: f64,
    pub log_peak: f64,
    /// `(N, root, g(root))` for every scanned candidate.
    pub scan: Vec<(usize, f64, f64)>,
}

/// Calibrated constants `A_n` of the remainder bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub t_cal: f64,
    pub constants: Vec<f64>,
}

/// Value of the expansion through one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelValue {
    pub level: usize,
    /// Sum of all terms through this level.
    pub value: Complex64,
    /// Contribution of this level alone.
    pub correction: Complex64,
    pub eta: f64,
    /// Calibrated remainder bound, when a calibration was supplied.
    pub bound: Option<f64>,
}

/// Remainder `R_{N_n}` by quadrature together with its predicted size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderReport {
    pub level: usize,
    pub value: Complex64,
    /// Difference between the quadrature on the kernel rule and on the
    /// rule with twice as many panels.
    pub quadrature_error: f64,
    pub bound: Option<f64>,
    pub eta: f64,
}

/// Coefficients and values of an `n`-level expansion at one `(t, z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperExpansion {
    pub level: usize,
    pub theta: f64,
    pub t_abs: f64,
    pub z: Complex64,
    pub schedule: TruncationSchedule,
    /// `b[m][j] = b_{m,j}`; `b[0]` are the Taylor coefficients of `f_0`.
    pub b: Vec<Vec<Complex64>>,
    /// `a[m][j][l]`: coefficients of `P_m(s) (s - sigma_{m+1})^j`.
    pub a: Vec<Vec<Vec<f64>>>,
    /// `u ~ sum_l psi_l t^l` through this level.
    pub psi: Vec<Complex64>,
    pub levels: Vec<LevelValue>,
    /// `sum_l psi_l t^l` evaluated directly.
    pub psi_value: Complex64,
    /// `sum_l |psi_l t^l| / |sum_l psi_l t^l|`.
    pub psi_cancellation: f64,
}

impl HyperExpansion {
    pub fn value(&self) -> Complex64 {
        self.levels.last().expect("at least level 0").value
    }
}

/// Gauss-Legendre rule for `int_0^inf C(tau) F(|t| tau^q) d tau` with the
/// kernel values folded into the weights.
#[derive(Debug, Clone)]
pub struct KernelRule {
    pub t_abs: f64,
    pub q: f64,
    /// `(s_i, W_i)` with `s_i = |t| tau_i^q`.
    pub nodes: Vec<(f64, f64)>,
    pub tau_max: f64,
    pub panels: usize,
}

impl KernelRule {
    /// Rule accurate for integrands up to `(s + shift)^degree`, validated on
    /// the moments `Gamma(1 + q l)/l!` for `l = 0` and `l = degree`.
    pub fn new(
        kernel: &LaplaceKernel,
        t_abs: f64,
        degree: usize,
        shift: f64,
        tol: f64,
    ) -> Result<Self> {
        let params = kernel.params();
        let q = params.q;
        let d = degree as f64;
        // the integrands are bounded by (s + shift)^degree, but relative
        // accuracy is needed down to the bare monomial s^degree, whose mass
        // sits further out
        let cutoff = |shift: f64| {
            let log_h = |tau: f64| {
                d * (t_abs * tau.powf(q) + shift + 1e-300).ln() - params.envelope_exponent(tau)
            };
            let mut peak = 0.0;
            let mut best = f64::NEG_INFINITY;
            let mut tau = 1e-3;
            while tau < 1e4 {
                let v = log_h(tau);
                if v > best {
                    best = v;
                    peak = tau;
                } else if v < best - 60.0 {
                    break;
                }
                tau += 0.05 * (1.0 + tau);
            }
            quadrature::log_tail_cutoff(peak, -55.0, log_h)
        };
        let tau_max = cutoff(shift).max(cutoff(0.0)).max(8.0);
        let mut panels = (tau_max / 0.5).ceil() as usize;
        for _ in 0..6 {
            let rule = Self::build(kernel, t_abs, q, tau_max, panels)?;
            if rule.moment_error(0) <= tol && rule.moment_error(degree) <= tol {
                return Ok(rule);
            }
            panels *= 2;
        }
        Err(Error::Quadrature {
            estimate: tau_max,
            error: f64::NAN,
            nodes: panels * quadrature::PANEL_DEGREE,
        })
    }

    fn build(
        kernel: &LaplaceKernel,
        t_abs: f64,
        q: f64,
        tau_max: f64,
        panels: usize,
    ) -> Result<Self> {
        let h = tau_max / panels as f64;
        let mut nodes = Vec::with_capacity(panels * quadrature::PANEL_DEGREE);
        for p in 0..panels {
            let mid = h * (p as f64 + 0.5);
            for &(x, w) in quadrature::reference_rule() {
                let tau = mid + 0.5 * h * x;
                let c = kernel.eval(tau)?;
                nodes.push((t_abs * tau.powf(q), 0.5 * h * w * c));
            }
        }
        Ok(Self {
            t_abs,
            q,
            nodes,
            tau_max,
            panels,
        })
    }

    /// Same interval with twice the panels.
    pub fn refined(&self, kernel: &LaplaceKernel) -> Result<Self> {
        Self::build(kernel, self.t_abs, self.q, self.tau_max, 2 * self.panels)
    }

    /// Relative error of the rule on `int C(tau) tau^{q l}`.
    pub fn moment_error(&self, l: usize) -> f64 {
        let lf = l as f64;
        let log_exact = moment_ratio(l as u32, self.q).ln();
        let mut sum = 0.0;
        for &(s, w) in &self.nodes {
            if l == 0 {
                sum += w;
            } else if s > 0.0 {
                // tau^{ql} = (s/|t|)^l
                sum += w * (lf * (s / self.t_abs).ln() - log_exact).exp();
            }
        }
        (sum - 1.0).abs()
    }

    pub fn integrate<F>(&self, f: F) -> Result<Complex64>
    where
        F: Fn(f64) -> Result<Complex64>,
    {
        let mut acc = quadrature::CompensatedSum::new();
        for &(s, w) in &self.nodes {
            if w != 0.0 {
                acc.add(f(s)? * w);
            }
        }
        Ok(acc.value())
    }
}

/// Multiplies the real polynomial `p` by `(s - c)^n`.
fn mul_linear_power(p: &[f64], c: f64, n: usize) -> Vec<f64> {
    let mut out = p.to_vec();
    for _ in 0..n {
        let mut next = vec![0.0; out.len() + 1];
        for (i, &a) in out.iter().enumerate() {
            next[i + 1] += a;
            next[i] -= c * a;
        }
        out = next;
    }
    out
}

/// Generic engine: geometry, kernel, margin `eps` and growth constant.
#[derive(Debug, Clone)]
pub struct ExpansionEngine {
    pub geometry: SingularGeometry,
    pub kernel: LaplaceKernel,
    pub params: KernelParams,
    pub eps: f64,
    pub b_tilde: f64,
    pub options: ExpansionOptions,
}

impl ExpansionEngine {
    pub fn new(
        geometry: SingularGeometry,
        kernel: LaplaceKernel,
        singular_points: &[num_complex::Complex64],
        b_tilde: f64,
        options: ExpansionOptions,
    ) -> Result<Self> {
        if geometry.is_entire() {
            return Err(Error::InvalidParameter(
                "datum has no singularities; the series converges and needs no re-expansion".into(),
            ));
        }
        let full = geometry.full_radius();
        let eps = match options.eps {
            EpsPolicy::Fixed(e) => e,
            EpsPolicy::Auto => geometry.auto_eps(singular_points),
        };
        if !(eps > 0.0) || eps >= full / 2.0 {
            return Err(Error::InvalidParameter(format!(
                "margin eps = {eps} must lie in (0, {})",
                full / 2.0
            )));
        }
        Ok(Self {
            geometry,
            kernel,
            params: kernel.params(),
            eps,
            b_tilde,
            options,
        })
    }

    pub fn rate(&self, t_abs: f64) -> Result<RateModel> {
        RateModel::new(&self.params, self.b_tilde, t_abs)
    }

    /// `R_0 = d(0) - eps`.
    pub fn r_eff(&self) -> f64 {
        self.geometry.r_eff(self.eps)
    }

    pub fn level0_schedule(&self, t_abs: f64) -> Result<TruncationSchedule> {
        let rate = self.rate(t_abs)?;
        let r0 = self.r_eff();
        let n0 = rate.optimal_n0(r0);
        if n0 < 1 {
            return Err(Error::Schedule(format!(
                "|t| = {t_abs} gives N0 = {n0} < 1; reduce |t|"
            )));
        }
        let n0 = n0 as usize;
        let sigma1 = rate.sigma1(n0);
        let ns = vec![n0];
        let radii = vec![r0];
        let g0 = rate.log_integrand(sigma1, &ns, &[], &radii);
        Ok(TruncationSchedule {
            t_abs,
            eps: self.eps,
            b_tilde: self.b_tilde,
            r_eff: r0,
            rate,
            ns,
            sigmas: vec![sigma1],
            radii,
            log_peaks: vec![g0],
        })
    }

    /// Schedule with prescribed `N_0..N_n` and `sigma_1..sigma_{n+1}`
    /// instead of the optimal ones.
    pub fn custom_schedule(
        &self,
        t_abs: f64,
        ns: Vec<usize>,
        sigmas: Vec<f64>,
    ) -> Result<TruncationSchedule> {
        if ns.is_empty() || ns.len() != sigmas.len() || ns.contains(&0) {
            return Err(Error::InvalidParameter(
                "schedule needs N_0..N_n >= 1 and as many sigmas".into(),
            ));
        }
        if sigmas.windows(2).any(|w| w[0] >= w[1]) || !(sigmas[0] > 0.0) {
            return Err(Error::InvalidParameter(
                "sigmas must be positive and increasing".into(),
            ));
        }
        let rate = self.rate(t_abs)?;
        let mut radii = vec![self.r_eff()];
        for m in 1..ns.len() {
            let r = self.big_radius(m, sigmas[m - 1]);
            if !(r > 0.0) {
                return Err(Error::DegenerateContour(format!("level {m}: radius {r}")));
            }
            radii.push(r);
        }
        let log_peaks = (0..ns.len())
            .map(|n| rate.log_integrand(sigmas[n], &ns[..=n], &sigmas[..n], &radii[..=n]))
            .collect();
        Ok(TruncationSchedule {
            t_abs,
            eps: self.eps,
            b_tilde: self.b_tilde,
            r_eff: radii[0],
            rate,
            ns,
            sigmas,
            radii,
            log_peaks,
        })
    }

    /// Radius `R_n = d(sigma_n) - rho_n eps` of the level-`n` big disc.
    pub fn big_radius(&self, n: usize, sigma: f64) -> f64 {
        contour::big_radius(n, sigma, self.eps, &self.geometry)
    }

    /// Chooses `N_n` and `sigma_{n+1}` for a schedule complete through level
    /// `n - 1` whose `radii` already hold `R_n`.
    pub fn next_truncation(&self, sched: &TruncationSchedule, n: usize) -> Result<Truncation> {
        assert!(n >= 1 && sched.ns.len() == n && sched.radii.len() == n + 1);
        let rate = &sched.rate;
        let sigma_n = sched.sigma(n);
        let cap = (self.options.scan_factor * sched.ns[0] as f64).ceil() as usize;
        let mut scan = Vec::with_capacity(cap);
        let mut ns = sched.ns.clone();
        ns.push(0);
        for cand in 1..=cap {
            ns[n] = cand;
            let root = self.largest_root(rate, &ns, &sched.sigmas[..n], sigma_n)?;
            let g = rate.log_integrand(root, &ns, &sched.sigmas[..n], &sched.radii);
            scan.push((cand, root, g));
        }
        let (best, root, g) = scan
            .iter()
            .copied()
            .min_by(|a, b| a.2.total_cmp(&b.2))
            .expect("scan is nonempty");
        if best == cap {
            return Err(Error::Schedule(format!(
                "level {n}: remainder estimate still decreasing at the scan cap N = {cap} \
                 (root {root:.6}, log integrand {g:.4})"
            )));
        }
        Ok(Truncation {
            n: best,
            sigma_next: root,
            log_peak: g,
            scan,
        })
    }

    fn largest_root(
        &self,
        rate: &RateModel,
        ns: &[usize],
        sigmas: &[f64],
        sigma_n: f64,
    ) -> Result<f64> {
        let total: f64 =
            ns[0] as f64 - rate.offset + ns[1..].iter().map(|&n| n as f64).sum::<f64>();
        let mut far = sigma_n + 1.0;
        while rate.k * far.powf(rate.k - 1.0) * rate.rate * (far - sigma_n) < total {
            far *= 2.0;
            if far > 1e12 {
                return Err(Error::Schedule(
                    "no bracket for the truncation condition".into(),
                ));
            }
        }
        let res = |s: f64| rate.residual(s, ns, sigmas);
        let steps = 4000;
        let at = |i: usize| {
            let u = i as f64 / steps as f64;
            sigma_n + (far - sigma_n) * u * u
        };
        // last sign change from - to + on the grid
        let mut hi = far;
        let mut lo = None;
        for i in (1..steps).rev() {
            let s = at(i);
            if res(s) < 0.0 {
                lo = Some(s);
                hi = at(i + 1);
                break;
            }
        }
        let mut lo = match lo {
            Some(l) => l,
            None => {
                // residual positive down to the first grid point: root sits
                // right next to sigma_n
                hi = at(1);
                sigma_n + 1e-300_f64.max(1e-15 * sigma_n.abs())
            }
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if res(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Appends `N_n`, `sigma_{n+1}` to a schedule complete through `n - 1`.
    pub fn extend_schedule(&self, sched: &mut TruncationSchedule) -> Result<()> {
        let n = sched.ns.len();
        let sigma_n = sched.sigma(n);
        let r_n = self.big_radius(n, sigma_n);
        if !(r_n > 0.0) {
            return Err(Error::DegenerateContour(format!(
                "level {n}: radius d(sigma) - rho eps = {r_n} is not positive"
            )));
        }
        sched.radii.push(r_n);
        let tr = self.next_truncation(sched, n)?;
        sched.ns.push(tr.n);
        sched.sigmas.push(tr.sigma_next);
        sched.log_peaks.push(tr.log_peak);
        Ok(())
    }

    pub fn schedule(&self, t_abs: f64, level: usize) -> Result<TruncationSchedule> {
        let mut sched = self.level0_schedule(t_abs)?;
        for _ in 0..level {
            self.extend_schedule(&mut sched)?;
        }
        Ok(sched)
    }

    /// Coefficient hierarchy `b_{m,j}` of `source` along `sched`.
    pub fn hierarchy<'a>(
        &'a self,
        source: &'a dyn BorelSource,
        sched: &'a TruncationSchedule,
    ) -> Result<Hierarchy<'a>> {
        let mut h = Hierarchy {
            engine: self,
            source,
            schedule: sched,
            b: vec![source.f0_taylor(sched.ns[0])?],
            circles: (0..=sched.level())
                .map(|_| Mutex::new(Vec::new()))
                .collect(),
        };
        for m in 1..=sched.level() {
            let bm = h.compute_b(m)?;
            h.b.push(bm);
        }
        Ok(h)
    }

    /// Remainder-bound calibration point: the `|t|` at which `N_0 = 8` and
    /// `sigma_1 = R_0` (shrunk by a relative `1e-9` to stay on the `N_0 = 8`
    /// side of the floor).
    pub fn calibration_t(&self) -> f64 {
        let p = &self.params;
        let r0 = self.r_eff();
        let off = 1.0 - 1.0 / p.q;
        let inv = (8.0 - off) / (p.k * r0.powf(p.k)) + self.b_tilde;
        (1.0 / (p.c_q * inv)).powf(1.0 / p.k) * (1.0 - 1e-9)
    }

    /// Fits `A_n = |R_n(t_cal)| e^{eta_n rate} / prefactor` for `n <= levels`.
    pub fn calibrate(&self, source: &dyn BorelSource, levels: usize) -> Result<Calibration> {
        let t_cal = self.calibration_t();
        let sched = self.schedule(t_cal, levels)?;
        let hier = self.hierarchy(source, &sched)?;
        let mut constants = Vec::with_capacity(levels + 1);
        for n in 0..=levels {
            let rem = hier.remainder(n)?;
            let rate = &sched.rate;
            constants.push(rem.value.norm() * (sched.eta(n) * rate.rate).exp() / rate.prefactor());
        }
        Ok(Calibration { t_cal, constants })
    }

    /// `A_n exp(-eta_n rate) * prefactor`.
    pub fn remainder_bound(&self, n: usize, sched: &TruncationSchedule, a_n: f64) -> f64 {
        a_n * (-sched.eta(n) * sched.rate.rate).exp() * sched.rate.prefactor()
    }

    /// Expansion through `level` at `|t|`, without the remainder quadrature.
    pub fn expand(
        &self,
        source: &dyn BorelSource,
        t_abs: f64,
        theta: f64,
        z: Complex64,
        level: usize,
        calibration: Option<&Calibration>,
    ) -> Result<HyperExpansion> {
        let sched = self.schedule(t_abs, level)?;
        let hier = self.hierarchy(source, &sched)?;
        hier.expansion(theta, z, calibration)
    }

    /// Expansion and remainder report at level `level`.
    pub fn hyper_expand(
        &self,
        source: &dyn BorelSource,
        t_abs: f64,
        theta: f64,
        z: Complex64,
        level: usize,
        calibration: Option<&Calibration>,
    ) -> Result<(HyperExpansion, RemainderReport)> {
        let sched = self.schedule(t_abs, level)?;
        let hier = self.hierarchy(source, &sched)?;
        let exp = hier.expansion(theta, z, calibration)?;
        let mut rem = hier.remainder(level)?;
        rem.bound = exp.levels[level].bound;
        Ok((exp, rem))
    }
}

/// The functions `f_m` and coefficients `b_{m,j}` of one datum along one
/// schedule.
pub struct Hierarchy<'a> {
    engine: &'a ExpansionEngine,
    source: &'a dyn BorelSource,
    schedule: &'a TruncationSchedule,
    b: Vec<Vec<Complex64>>,
    /// `circles[m][i]`: `f_m` on `2^i * 64` equispaced nodes of the circle
    /// `|w - sigma_m| = R_m`.
    circles: Vec<Mutex<Vec<Arc<Vec<Complex64>>>>>,
}

impl<'a> Hierarchy<'a> {
    pub fn schedule(&self) -> &TruncationSchedule {
        self.schedule
    }

    pub fn b(&self, m: usize) -> &[Complex64] {
        &self.b[m]
    }

    pub fn all_b(&self) -> &[Vec<Complex64>] {
        &self.b
    }

    /// `f_m(s)` with the engine's default mode at the top level.
    pub fn f(&self, m: usize, s: Complex64) -> Result<Complex64> {
        self.f_with_mode(m, s, self.engine.options.f_mode)
    }

    /// `f_m(s)`; `mode` selects the path at level `m`, deeper levels use
    /// [`FMode::Auto`].
    pub fn f_with_mode(&self, m: usize, s: Complex64, mode: FMode) -> Result<Complex64> {
        if m == 0 {
            return self.source.f0(s);
        }
        assert!(m <= self.b.len(), "f_{m} needs b up to level {}", m - 1);
        let sigma = self.schedule.sigma(m - 1);
        let n = self.schedule.ns[m - 1];
        let dist = (s - sigma).norm();
        let use_dd = match mode {
            FMode::DividedDifference => true,
            FMode::Contour => false,
            FMode::Auto => {
                let r = self.schedule.radii[m - 1];
                dist > 0.0
                    && n as f64 * (r / dist).ln() <= self.engine.options.dd_amplification.ln()
            }
        };
        if use_dd {
            let prev = self.f_with_mode(m - 1, s, FMode::Auto)?;
            let x = s - sigma;
            let mut poly = Complex64::new(0.0, 0.0);
            for &c in self.b[m - 1].iter().rev() {
                poly = poly * x + c;
            }
            Ok((prev - poly) / x.powi(n as i32))
        } else if mode == FMode::Auto && dist < self.schedule.radii[m - 1] {
            // s inside the big disc: Omega reduces to the circle, whose
            // nodes are shared by every such s
            self.cauchy_circle(m, s)
        } else {
            let omega =
                contour::build_omega(m - 1, sigma, s, self.engine.eps, &self.engine.geometry)?;
            self.cauchy_f(&omega, m, s)
        }
    }

    /// `f_{m-1}` on the level-`m-1` circle at `64 * 2^i` nodes, memoized.
    fn circle_values(&self, m: usize, i: usize) -> Result<Arc<Vec<Complex64>>> {
        let level = m - 1;
        if let Some(v) = self.circles[level].lock().expect("cache lock").get(i) {
            return Ok(v.clone());
        }
        let coarse = if i > 0 {
            Some(self.circle_values(m, i - 1)?)
        } else {
            None
        };
        let nodes = 64usize << i;
        let centre = self.schedule.sigma(level);
        let radius = self.schedule.radii[level];
        let point = |k: usize| {
            centre + Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / nodes as f64)
        };
        let mut values = Vec::with_capacity(nodes);
        for k in 0..nodes {
            let v = match &coarse {
                Some(c) if k % 2 == 0 => c[k / 2],
                _ => self.f_with_mode(level, point(k), FMode::Auto)?,
            };
            values.push(v);
        }
        let values = Arc::new(values);
        let mut cache = self.circles[level].lock().expect("cache lock");
        if cache.len() == i {
            cache.push(values.clone());
        }
        Ok(values)
    }

    /// Trapezoid Cauchy integral of `f_{m-1}(w) / ((w - sigma)^N (w - s))`
    /// over the level-`m-1` circle, doubling the memoized nodes.
    fn cauchy_circle(&self, m: usize, s: Complex64) -> Result<Complex64> {
        let sigma = self.schedule.sigma(m - 1);
        let radius = self.schedule.radii[m - 1];
        let n = self.schedule.ns[m - 1] as i32;
        let tol = self.engine.options.contour_tol;
        let sum = |i: usize| -> Result<(Complex64, f64)> {
            let values = self.circle_values(m, i)?;
            let nodes = values.len();
            let mut acc = quadrature::CompensatedSum::new();
            let mut l1 = 0.0;
            for (k, f) in values.iter().enumerate() {
                let e =
                    Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / nodes as f64);
                // dw / (2 pi i) = (w - sigma) d phi / (2 pi)
                let term = f * e / (e.powi(n) * (e + sigma - s));
                l1 += term.norm();
                acc.add(term);
            }
            Ok((acc.value() / nodes as f64, l1 / nodes as f64))
        };
        let (mut prev, _) = sum(0)?;
        for i in 1..=8 {
            let (cur, l1) = sum(i)?;
            let diff = (cur - prev).norm();
            if diff <= tol * l1.max(cur.norm()) {
                return Ok(cur);
            }
            prev = cur;
            if i == 8 {
                return Err(Error::Quadrature {
                    estimate: cur.norm(),
                    error: diff,
                    nodes: 64 << i,
                });
            }
        }
        unreachable!()
    }

    fn cauchy_f(&self, omega: &ContourSpec, m: usize, s: Complex64) -> Result<Complex64> {
        let sigma = self.schedule.sigma(m - 1);
        let n = self.schedule.ns[m - 1] as i32;
        let r = omega.cauchy(self.engine.options.contour_tol, |w| {
            Ok(self.f_with_mode(m - 1, w, FMode::Auto)? / ((w - sigma).powi(n) * (w - s)))
        })?;
        Ok(r.value)
    }

    /// Cauchy coefficients of `f_m` around `sigma_m` on the circle of radius
    /// `R_m / 2`, refined by node doubling.
    fn compute_b(&self, m: usize) -> Result<Vec<Complex64>> {
        let count = self.schedule.ns[m];
        let centre = Complex64::new(self.schedule.sigma(m), 0.0);
        let radius = 0.5 * self.schedule.radii[m];
        if !(radius > 0.0) {
            return Err(Error::DegenerateContour(format!(
                "level {m}: circle radius {radius}"
            )));
        }
        let coeffs = |nodes: usize| -> Result<(Vec<Complex64>, f64)> {
            let values: Vec<Complex64> = (0..nodes)
                .map(|k| {
                    let e =
                        Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / nodes as f64);
                    self.f(m, centre + e * radius)
                })
                .collect::<Result<_>>()?;
            let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let mut out = vec![Complex64::new(0.0, 0.0); count];
            for (j, slot) in out.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, v) in values.iter().enumerate() {
                    let phase = -std::f64::consts::TAU * ((j * k) % nodes) as f64 / nodes as f64;
                    acc += v * Complex64::from_polar(1.0, phase);
                }
                *slot = acc / (nodes as f64 * radius.powi(j as i32));
            }
            Ok((out, scale))
        };
        let mut nodes = 64.max(2 * count.next_power_of_two());
        let (mut prev, _) = coeffs(nodes)?;
        let mut prev_diff = f64::INFINITY;
        loop {
            nodes *= 2;
            let (cur, scale) = coeffs(nodes)?;
            let diff = cur
                .iter()
                .zip(&prev)
                .enumerate()
                .map(|(j, (a, b))| (a - b).norm() * radius.powi(j as i32))
                .fold(0.0, f64::max);
            // f_m carries noise at the contour tolerance and at the rounding
            // level amplified by the divided differences
            let opts = &self.engine.options;
            let floor = 1e-13_f64
                .max(10.0 * opts.contour_tol)
                .max(10.0 * opts.dd_amplification * f64::EPSILON);
            // once the trapezoid error is gone the differences stop shrinking
            let stalled = diff > 0.25 * prev_diff && diff <= 1e-9 * scale;
            if diff <= floor * scale || stalled {
                return Ok(cur);
            }
            if nodes >= 1 << 13 {
                return Err(Error::Quadrature {
                    estimate: scale,
                    error: diff,
                    nodes,
                });
            }
            prev = cur;
            prev_diff = diff;
        }
    }

    /// `P_m(s) = s^{N_0} prod_{i=1..m} (s - sigma_i)^{N_i}`.
    pub fn p_value(&self, m: usize, s: f64) -> f64 {
        let mut v = s.powi(self.schedule.ns[0] as i32);
        for i in 1..=m {
            v *= (s - self.schedule.sigma(i)).powi(self.schedule.ns[i] as i32);
        }
        v
    }

    /// Coefficients `a_{m,j,l}` of `P_m(s) (s - sigma_{m+1})^j`.
    pub fn a_coeffs(&self, m: usize, j: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.schedule.ns[0] + 1];
        p[self.schedule.ns[0]] = 1.0;
        for i in 1..=m {
            p = mul_linear_power(&p, self.schedule.sigma(i), self.schedule.ns[i]);
        }
        mul_linear_power(&p, self.schedule.sigma(m + 1), j)
    }

    fn rule(&self, extra_degree: usize) -> Result<KernelRule> {
        let sched = self.schedule;
        let shift = sched.sigmas.iter().copied().fold(0.0, f64::max);
        KernelRule::new(
            &self.engine.kernel,
            sched.t_abs,
            sched.total_order() + extra_degree,
            shift,
            self.engine.options.quad_tol,
        )
    }

    /// Level-0 sum `sum_{l<N_0} b_{0,l} Gamma(1+ql)/l! |t|^l`.
    pub fn level0_value(&self) -> Complex64 {
        let t = self.schedule.t_abs;
        let q = self.engine.params.q;
        let mut acc = quadrature::CompensatedSum::new();
        for (l, &b) in self.b[0].iter().enumerate() {
            acc.add(b * moment_ratio(l as u32, q) * t.powi(l as i32));
        }
        acc.value()
    }

    /// `sum_j b_{m,j} int C(tau) P_{m-1}(s) (s - sigma_m)^j d tau`.
    pub fn correction(&self, m: usize, rule: &KernelRule) -> Result<Complex64> {
        let sigma = self.schedule.sigma(m);
        let bm = &self.b[m];
        rule.integrate(|s| {
            let x = s - sigma;
            let mut poly = Complex64::new(0.0, 0.0);
            for &c in bm.iter().rev() {
                poly = poly * x + c;
            }
            Ok(poly * self.p_value(m - 1, s))
        })
    }

    /// `R_{N_n} = int C(tau) P_n(s) f_{n+1}(s) d tau` on the kernel rule and
    /// on its refinement.
    pub fn remainder(&self, n: usize) -> Result<RemainderReport> {
        if n >= self.b.len() {
            return Err(Error::InvalidParameter(format!(
                "remainder at level {n} needs a schedule through level {n}"
            )));
        }
        let rule = self.rule(2)?;
        let integrand = |s: f64| -> Result<Complex64> {
            let p = self.p_value(n, s);
            if p == 0.0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            Ok(self.f_next(n + 1, s)? * p)
        };
        let coarse = rule.integrate(integrand)?;
        let fine = rule.refined(&self.engine.kernel)?.integrate(integrand)?;
        Ok(RemainderReport {
            level: n,
            value: fine,
            quadrature_error: (fine - coarse).norm(),
            bound: None,
            eta: self.schedule.eta(n),
        })
    }

    /// `f_{m}` for `m` one past the last coefficient level.
    fn f_next(&self, m: usize, s: f64) -> Result<Complex64> {
        self.f(m, Complex64::new(s, 0.0))
    }

    /// Assembles values, `a` coefficients and `psi_l`.
    pub fn expansion(
        &self,
        theta: f64,
        z: Complex64,
        calibration: Option<&Calibration>,
    ) -> Result<HyperExpansion> {
        let sched = self.schedule;
        let level = sched.level();
        let t_abs = sched.t_abs;
        let q = self.engine.params.q;
        let mut levels = Vec::with_capacity(level + 1);
        let bound = |n: usize| {
            calibration
                .and_then(|c| c.constants.get(n))
                .map(|&a| self.engine.remainder_bound(n, sched, a))
        };
        let v0 = self.level0_value();
        levels.push(LevelValue {
            level: 0,
            value: v0,
            correction: v0,
            eta: sched.eta(0),
            bound: bound(0),
        });
        if level > 0 {
            let rule = self.rule(0)?;
            let mut total = v0;
            for m in 1..=level {
                let c = self.correction(m, &rule)?;
                total += c;
                levels.push(LevelValue {
                    level: m,
                    value: total,
                    correction: c,
                    eta: sched.eta(m),
                    bound: bound(m),
                });
            }
        }
        // a_{m,j,l} and psi_l
        let mut a = Vec::with_capacity(level);
        let len = sched.total_order();
        let mut psi_raw = vec![Complex64::new(0.0, 0.0); len];
        for (l, &b) in self.b[0].iter().enumerate() {
            psi_raw[l] += b;
        }
        for m in 0..level {
            let mut am = Vec::with_capacity(sched.ns[m + 1]);
            for j in 0..sched.ns[m + 1] {
                let coeffs = self.a_coeffs(m, j);
                for (l, &c) in coeffs.iter().enumerate() {
                    psi_raw[l] += self.b[m + 1][j] * c;
                }
                am.push(coeffs);
            }
            a.push(am);
        }
        let psi: Vec<Complex64> = psi_raw
            .iter()
            .enumerate()
            .map(|(l, &p)| {
                p * moment_ratio(l as u32, q) * Complex64::from_polar(1.0, -theta * l as f64)
            })
            .collect();
        let t = Complex64::from_polar(t_abs, theta);
        let mut acc = quadrature::CompensatedSum::new();
        let mut abs_sum = 0.0;
        for (l, &p) in psi.iter().enumerate() {
            let term = p * t.powi(l as i32);
            abs_sum += term.norm();
            acc.add(term);
        }
        let psi_value = acc.value();
        Ok(HyperExpansion {
            level,
            theta,
            t_abs,
            z,
            schedule: sched.clone(),
            b: self.b.clone(),
            a,
            psi,
            levels,
            psi_value,
            psi_cancellation: abs_sum / psi_value.norm(),
        })
    }
}
