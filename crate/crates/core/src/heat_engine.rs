//! Hyperasymptotic expansion of `u_t = u_zz`, `u(0, z) = phi(z)`.
//!
//! Along the ray `t = |t| e^{i theta}` the solution is the Gaussian Laplace
//! integral of `f_0(s) = (phi(z + e^{i theta/2} sqrt s) + phi(z - e^{i theta/2} sqrt s)) / 2`
//! and its formal series is `sum_k phi^{(2k)}(z) t^k / k!`.

use num_complex::Complex64;

use crate::datum::{AnalyticDatum, Direction, SingularGeometry};
use crate::expansion::{
    BorelSource, Calibration, ExpansionEngine, ExpansionOptions, FMode, Hierarchy, HyperExpansion,
    RemainderReport, Truncation, TruncationSchedule,
};
use crate::special_fn::LaplaceKernel;
use crate::{Error, Result};

/// `f_0(., z)` of a datum along `theta`.
#[derive(Debug, Clone)]
pub struct HeatSource<'a> {
    pub datum: &'a AnalyticDatum,
    pub z: Complex64,
    pub theta: f64,
}

impl BorelSource for HeatSource<'_> {
    fn f0(&self, s: Complex64) -> Result<Complex64> {
        let h = Complex64::from_polar(1.0, 0.5 * self.theta) * s.sqrt();
        Ok(0.5 * (self.datum.eval(self.z + h)? + self.datum.eval(self.z - h)?))
    }

    fn f0_taylor(&self, count: usize) -> Result<Vec<Complex64>> {
        // b_{0,l} = phi^{(2l)}(z)/(2l)! e^{i theta l}
        let taylor = self.datum.taylor_coeffs_unchecked(self.z, 2 * count);
        Ok((0..count)
            .map(|l| taylor[2 * l] * Complex64::from_polar(1.0, self.theta * l as f64))
            .collect())
    }
}

/// Heat-equation engine for one datum and one summation direction.
#[derive(Debug, Clone)]
pub struct HeatEngine {
    pub datum: AnalyticDatum,
    pub direction: Direction,
    pub engine: ExpansionEngine,
}

impl HeatEngine {
    /// Rejects directions within `delta` of a Stokes direction.
    pub fn new(
        datum: AnalyticDatum,
        theta: f64,
        delta: f64,
        options: ExpansionOptions,
    ) -> Result<Self> {
        let direction = Direction::for_heat(&datum, theta, delta)?;
        let geometry = SingularGeometry::new(&datum, 2, Complex64::new(1.0, 0.0), direction.theta)?;
        let b_tilde = match options.b_tilde {
            Some(b) => b,
            None => datum.growth_bound(2.0, 0.5 * datum.eps_tilde())?.1,
        };
        let points: Vec<Complex64> = datum.singularities().points().collect();
        let engine =
            ExpansionEngine::new(geometry, LaplaceKernel::Gaussian, &points, b_tilde, options)?;
        Ok(Self {
            datum,
            direction,
            engine,
        })
    }

    pub fn theta(&self) -> f64 {
        self.direction.theta
    }

    pub fn source(&self, z: Complex64) -> HeatSource<'_> {
        HeatSource {
            datum: &self.datum,
            z,
            theta: self.direction.theta,
        }
    }

    pub fn f0(&self, s: Complex64, z: Complex64) -> Result<Complex64> {
        self.source(z).f0(s)
    }

    /// `N_0 = floor(R_0 (1/(4|t|) - B) + 1/2)`, `sigma_1 = (N_0 - 1/2)/(1/(4|t|) - B)`.
    pub fn level0_schedule(&self, t_abs: f64) -> Result<TruncationSchedule> {
        self.engine.level0_schedule(t_abs)
    }

    pub fn schedule(&self, t_abs: f64, level: usize) -> Result<TruncationSchedule> {
        self.engine.schedule(t_abs, level)
    }

    /// `sum_{k < N_0} phi^{(2k)}(z) t^k / k!`.
    pub fn partial_sum_level0(&self, t: Complex64, z: Complex64, n0: usize) -> Complex64 {
        let taylor = self.datum.taylor_coeffs_unchecked(z, 2 * n0);
        let mut acc = crate::quadrature::CompensatedSum::new();
        let mut tk = Complex64::new(1.0, 0.0);
        for k in 0..n0 {
            // phi^{(2k)}/k! = T_{2k} (2k)!/k!
            acc.add(taylor[2 * k] * crate::special_fn::moment_ratio(k as u32, 2.0) * tk);
            tk *= t;
        }
        acc.value()
    }

    fn hierarchy<'a>(
        &'a self,
        source: &'a HeatSource<'a>,
        sched: &'a TruncationSchedule,
    ) -> Result<Hierarchy<'a>> {
        self.engine.hierarchy(source, sched)
    }

    /// `f_m(s, z)` along `sched` (which must reach level `m - 1`).
    pub fn f_next(
        &self,
        m: usize,
        s: Complex64,
        z: Complex64,
        sched: &TruncationSchedule,
        mode: FMode,
    ) -> Result<Complex64> {
        if m > sched.ns.len() {
            return Err(Error::InvalidParameter(format!(
                "f_{m} needs a schedule through level {}",
                m - 1
            )));
        }
        let src = self.source(z);
        let part = sched.through(m.saturating_sub(1));
        let h = self.hierarchy(&src, &part)?;
        h.f_with_mode(m, s, mode)
    }

    /// `b_{m,j}` for `j < N_m`.
    pub fn b_coeffs(
        &self,
        m: usize,
        z: Complex64,
        sched: &TruncationSchedule,
    ) -> Result<Vec<Complex64>> {
        if m > sched.level() {
            return Err(Error::InvalidParameter(format!(
                "b_{m} needs N_{m} in the schedule"
            )));
        }
        let src = self.source(z);
        let part = sched.through(m);
        let h = self.hierarchy(&src, &part)?;
        Ok(h.b(m).to_vec())
    }

    /// Optimal `N_n` and `sigma_{n+1}` for a schedule through level `n - 1`.
    pub fn next_truncation(&self, sched: &TruncationSchedule, n: usize) -> Result<Truncation> {
        let mut s = sched.through(n - 1);
        s.radii.push(self.engine.big_radius(n, s.sigma(n)));
        self.engine.next_truncation(&s, n)
    }

    pub fn assemble_psi(
        &self,
        z: Complex64,
        sched: &TruncationSchedule,
        calibration: Option<&Calibration>,
    ) -> Result<HyperExpansion> {
        let src = self.source(z);
        self.hierarchy(&src, sched)?
            .expansion(self.theta(), z, calibration)
    }

    pub fn remainder_quadrature(
        &self,
        n: usize,
        z: Complex64,
        sched: &TruncationSchedule,
    ) -> Result<RemainderReport> {
        let src = self.source(z);
        let part = sched.through(n);
        self.hierarchy(&src, &part)?.remainder(n)
    }

    /// Fits the bound constants `A_0..A_levels` at `z`.
    pub fn calibrate(&self, z: Complex64, levels: usize) -> Result<Calibration> {
        self.engine.calibrate(&self.source(z), levels)
    }

    pub fn remainder_bound(
        &self,
        n: usize,
        sched: &TruncationSchedule,
        calibration: &Calibration,
    ) -> Result<f64> {
        let a = calibration.constants.get(n).ok_or_else(|| {
            Error::InvalidParameter(format!("calibration has no constant for level {n}"))
        })?;
        Ok(self.engine.remainder_bound(n, sched, *a))
    }

    /// Checks that `t` lies on the summation ray and `z` in the datum disc.
    pub fn check_point(&self, t: Complex64, z: Complex64) -> Result<f64> {
        let t_abs = t.norm();
        if !(t_abs > 0.0) {
            return Err(Error::InvalidParameter("t must be nonzero".into()));
        }
        let dev =
            crate::datum::angle_distance(t.arg().rem_euclid(std::f64::consts::TAU), self.theta());
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

    /// Level-`level` expansion at `(t, z)` together with the remainder
    /// quadrature.
    pub fn hyper_expand(
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

    /// Expansion without the remainder quadrature.
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
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::EpsPolicy;
    use std::f64::consts::PI;

    fn reference() -> HeatEngine {
        let datum = AnalyticDatum::simple_pole(Complex64::new(1.0, 0.0))
            .unwrap()
            .with_eps_tilde(0.005)
            .unwrap();
        let options = ExpansionOptions {
            eps: EpsPolicy::Fixed(0.04),
            ..Default::default()
        };
        HeatEngine::new(datum, PI, 0.1, options).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn f0_examples() {
        let e = reference();
        assert!((e.f0(c(1.0, 0.0), c(0.0, 0.0)).unwrap() - 0.5).norm() < 1e-15);
        let z = c(0.003, 0.001);
        let phi = e.datum.eval(z).unwrap();
        assert!((e.f0(c(0.0, 0.0), z).unwrap() - phi).norm() < 1e-15);
        let datum = AnalyticDatum::simple_pole(c(1.0, 0.0)).unwrap();
        let src = HeatSource {
            datum: &datum,
            z: c(0.0, 0.0),
            theta: PI / 2.0,
        };
        assert!((src.f0(c(2.0, 0.0)).unwrap() - c(0.2, 0.4)).norm() < 1e-14);
    }

    #[test]
    fn level0_reference_schedule() {
        let s = reference().level0_schedule(1.0 / 40.0).unwrap();
        assert_eq!(s.ns, vec![10]);
        assert!((s.sigmas[0] - 0.95).abs() < 1e-14);
        assert!(s.sigmas[0] <= s.r_eff);
    }

    #[test]
    fn partial_sum_examples() {
        let e = reference();
        let v = e.partial_sum_level0(c(0.01, 0.0), c(0.0, 0.0), 3);
        assert!((v - 1.0212).norm() < 1e-14);
        assert_eq!(
            e.partial_sum_level0(c(0.3, 0.1), c(0.0, 0.0), 1),
            c(1.0, 0.0)
        );
    }

    #[test]
    fn f1_and_b1_closed_forms() {
        let e = reference();
        let z = c(0.0, 0.0);
        let sched = e
            .engine
            .custom_schedule(1.0 / 40.0, vec![2, 4], vec![0.95, 2.0])
            .unwrap();
        for mode in [FMode::DividedDifference, FMode::Contour] {
            let v = e.f_next(1, c(1.0, 0.0), z, &sched, mode).unwrap();
            assert!((v - 0.5).norm() < 1e-12, "{mode:?}: {v}");
        }
        let at0 = e.f_next(1, c(0.0, 0.0), z, &sched, FMode::Auto).unwrap();
        assert!((at0 - 1.0).norm() < 1e-12);
        let dd = e
            .f_next(1, c(2.0, 0.0), z, &sched, FMode::DividedDifference)
            .unwrap();
        let ct = e.f_next(1, c(2.0, 0.0), z, &sched, FMode::Contour).unwrap();
        assert!((dd - ct).norm() <= 1e-8 * dd.norm());
        let b = e.b_coeffs(1, z, &sched).unwrap();
        assert!((b[0] - 1.0 / 1.95).norm() < 1e-12);
        assert!((b[1] + 1.0 / (1.95 * 1.95)).norm() < 1e-12);
        for (j, bj) in b.iter().enumerate() {
            let exact = (-1.0f64).powi(j as i32) / 1.95f64.powi(j as i32 + 1);
            assert!((bj - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn reference_level_fixtures() {
        let e = reference();
        let s = e.schedule(1.0 / 40.0, 2).unwrap();
        assert_eq!(s.ns[..2], [10, 12]);
        assert!((s.sigmas[1] - 2.7747448714).abs() < 1e-8, "{:?}", s.sigmas);
        assert!(s.eta(0) < s.eta(1) && s.eta(1) < s.eta(2));
    }

    #[test]
    fn stokes_direction_rejected() {
        let datum = AnalyticDatum::simple_pole(c(1.0, 0.0)).unwrap();
        let err = HeatEngine::new(datum, 0.01, 0.1, ExpansionOptions::default()).unwrap_err();
        assert!(matches!(err, Error::StokesDirection { .. }));
    }

    struct Constant;

    impl BorelSource for Constant {
        fn f0(&self, _s: Complex64) -> Result<Complex64> {
            Ok(c(1.0, 0.0))
        }
        fn f0_taylor(&self, count: usize) -> Result<Vec<Complex64>> {
            let mut v = vec![c(0.0, 0.0); count];
            v[0] = c(1.0, 0.0);
            Ok(v)
        }
    }

    #[test]
    fn constant_datum_has_zero_remainder() {
        let e = reference();
        let s = e.level0_schedule(1.0 / 40.0).unwrap();
        let r = e
            .engine
            .hierarchy(&Constant, &s)
            .unwrap()
            .remainder(0)
            .unwrap();
        assert!(r.value.norm() < 1e-13, "{}", r.value);
    }
}
