use std::f64::consts::{PI, TAU};

use hyperasym_core::borel_engine::{borel_transform, laplace_sum};
use hyperasym_core::contour::{clearance_check, random_chain};
use hyperasym_core::expansion::EpsPolicy;
use hyperasym_core::oracle::compare;
use hyperasym_core::special_fn::{
    ecalle_kernel_series, gamma_real, gaussian_kernel, ln_gamma, mittag_leffler, LaplaceKernel,
};
use hyperasym_core::{
    AnalyticDatum, Complex64, ContourSpec, Direction, ExpansionOptions, HeatEngine, KernelParams,
    PoleTerm, SimpleEquation, SingularGeometry,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn reference_engine() -> HeatEngine {
    let datum = AnalyticDatum::simple_pole(c(1.0, 0.0))
        .unwrap()
        .with_eps_tilde(0.005)
        .unwrap();
    let options = ExpansionOptions {
        eps: EpsPolicy::Fixed(0.04),
        ..Default::default()
    };
    HeatEngine::new(datum, PI, 0.1, options).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_recurrence(x in 0.1f64..30.0) {
        let a = gamma_real(x + 1.0).unwrap();
        let b = x * gamma_real(x).unwrap();
        prop_assert!((a - b).abs() <= 1e-13 * a.abs());
        prop_assert!((ln_gamma(x) - gamma_real(x).unwrap().abs().ln()).abs() <= 1e-12 * (1.0 + ln_gamma(x).abs()));
    }

    #[test]
    fn mittag_leffler_integer_orders(re in -5.0f64..5.0, im in -5.0f64..5.0) {
        let z = c(re, im);
        let e1 = mittag_leffler(1.0, z).unwrap();
        prop_assert!((e1 - z.exp()).norm() <= 1e-12 * z.exp().norm());
        let e2 = mittag_leffler(2.0, z * z).unwrap();
        prop_assert!((e2 - z.cosh()).norm() <= 1e-12 * (1.0 + z.cosh().norm()));
    }

    #[test]
    fn kernel_series_is_gaussian(tau in 0.0f64..6.0) {
        let p = KernelParams::integer(2).unwrap();
        let s = ecalle_kernel_series(&p, c(tau, 0.0)).unwrap();
        prop_assert!((s.value.re - gaussian_kernel(tau)).abs() <= 1e-10);
    }

    #[test]
    fn taylor_coefficients_reproduce_datum(
        ar in 0.6f64..2.0, aphi in 0.0f64..TAU, order in 1u32..4,
        br in 0.6f64..2.0, bphi in 0.0f64..TAU,
        frac in 0.0f64..0.5, zphi in 0.0f64..TAU,
    ) {
        let d = AnalyticDatum::new(
            vec![
                PoleTerm::new(c(1.0, 0.5), Complex64::from_polar(ar, aphi), order),
                PoleTerm::simple(Complex64::from_polar(br, bphi)),
            ],
            vec![c(0.3, 0.0), c(0.0, -1.0)],
            None,
        ).unwrap();
        let z = Complex64::from_polar(frac * d.r(), zphi);
        let coeffs = d.taylor_coeffs(c(0.0, 0.0), 120).unwrap();
        let series = coeffs.iter().rev().fold(c(0.0, 0.0), |acc, &k| acc * z + k);
        let direct = d.eval(z).unwrap();
        prop_assert!((series - direct).norm() <= 1e-10 * (1.0 + direct.norm()));
    }

    #[test]
    fn stokes_margin_enforced(theta in 0.0f64..TAU, delta in 0.01f64..0.5) {
        let d = AnalyticDatum::simple_pole(c(1.0, 0.0)).unwrap();
        let dist = hyperasym_core::datum::angle_distance(theta, 0.0);
        let r = Direction::for_heat(&d, theta, delta);
        prop_assert_eq!(r.is_ok(), dist >= delta);
    }

    #[test]
    fn cauchy_reproduces_interior_values(
        cx in -1.0f64..1.0, radius in 0.5f64..2.0, sx in -3.0f64..3.0, sy in -0.5f64..0.5,
        px in -0.3f64..0.3, py in -0.3f64..0.3, j in 0i32..4,
    ) {
        let center = c(cx, 0.0);
        let s = c(sx, sy);
        prop_assume!((s - center).norm() > 0.1 * radius);
        let spec = ContourSpec::two_discs(center, radius, s, 0.05).unwrap();
        // p sits well inside the big disc, so it is enclosed once
        let p = center + c(px, py) * radius;
        prop_assert_eq!(spec.winding_number(p).unwrap(), 1);
        let r = spec.cauchy(1e-12, |w| Ok(w.powi(j) / (w - p))).unwrap();
        prop_assert!((r.value - p.powi(j)).norm() <= 1e-9 * (1.0 + p.norm().powi(j)));
    }

    #[test]
    fn compare_is_symmetric(a in -10.0f64..10.0, b in -10.0f64..10.0, x in -10.0f64..10.0, y in -10.0f64..10.0) {
        let r1 = compare(c(0.1, 0.0), c(0.0, 0.0), 0, c(a, b), c(x, y), None);
        let r2 = compare(c(0.1, 0.0), c(0.0, 0.0), 0, c(x, y), c(a, b), None);
        prop_assert!(r1.abs_err >= 0.0);
        prop_assert_eq!(r1.abs_err, r2.abs_err);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn heat_n0_formula_and_monotonicity(t1 in 0.003f64..0.2, t2 in 0.003f64..0.2) {
        let e = reference_engine();
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let a = e.level0_schedule(lo);
        let b = e.level0_schedule(hi);
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!(a.ns[0] >= b.ns[0]);
            for s in [&a, &b] {
                let rate = 1.0 / (4.0 * s.t_abs) - s.b_tilde;
                let n0 = (s.r_eff * rate + 0.5).floor() as usize;
                prop_assert_eq!(s.ns[0], n0);
                prop_assert!(s.sigmas[0] <= s.r_eff);
                prop_assert!((s.sigmas[0] - (n0 as f64 - 0.5) / rate).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chains_keep_clearance(t_abs in 0.015f64..0.035, seed in any::<u64>(), frac in 0.0f64..1.0) {
        let e = reference_engine();
        let sched = e.schedule(t_abs, 2).unwrap();
        let geometry = SingularGeometry::new(&e.datum, 2, c(1.0, 0.0), PI).unwrap();
        let sigmas = [0.0, sched.sigmas[0], sched.sigmas[1]];
        let s = c(frac * 2.0 * sched.sigmas[2], 0.0);
        let mut rng = StdRng::seed_from_u64(seed);
        let chain = random_chain(&mut rng, &sigmas, s, 0.04, &geometry).unwrap();
        prop_assert!(clearance_check(&chain, 0.04, &geometry));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn laplace_inverts_borel_on_polynomials(
        q in 2u32..4,
        coeffs in proptest::collection::vec(-2.0f64..2.0, 1..5),
        t_abs in 0.05f64..0.4,
        arg in -1.0f64..1.0,
    ) {
        let eq = SimpleEquation::new(c(1.0, 0.0), q, 1).unwrap();
        let kernel = LaplaceKernel::Ecalle(eq.kernel);
        let t = Complex64::from_polar(t_abs, arg);
        // u_n are the coefficients of the exponential generating function
        let mut fact = 1.0;
        let u: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(n, &a)| {
                if n > 0 {
                    fact *= n as f64;
                }
                c(a * fact, 0.0)
            })
            .collect();
        let v = borel_transform(&u, eq.k());
        let back = laplace_sum(&kernel, t, 1e-12, |x| v.eval(x)).unwrap();
        let exact = coeffs.iter().rev().fold(c(0.0, 0.0), |acc, &a| acc * t + a);
        let scale: f64 = coeffs.iter().enumerate().map(|(n, a)| a.abs() * t_abs.powi(n as i32)).sum();
        prop_assert!((back - exact).norm() <= 1e-8 * scale.max(1e-300));
    }
}
