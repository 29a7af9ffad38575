use std::f64::consts::PI;

use hyperasym_core::expansion::EpsPolicy;
use hyperasym_core::{
    AnalyticDatum, Complex64, ExpansionOptions, HeatEngine, SimpleEngine, SimpleEquation,
};

fn datum() -> AnalyticDatum {
    AnalyticDatum::simple_pole(Complex64::new(1.0, 0.0))
        .unwrap()
        .with_eps_tilde(0.005)
        .unwrap()
}

fn options() -> ExpansionOptions {
    ExpansionOptions {
        eps: EpsPolicy::Fixed(0.04),
        ..Default::default()
    }
}

#[test]
fn heat_specialization_matches_heat_engine() {
    let heat = HeatEngine::new(datum(), PI, 0.1, options()).unwrap();
    let simple = SimpleEngine::new(SimpleEquation::heat(), datum(), PI, 0.1, options()).unwrap();
    let z = Complex64::new(0.001, 0.0);
    for t_abs in [0.015, 0.02, 0.025, 0.03, 0.035] {
        let t = Complex64::from_polar(t_abs, PI);
        for level in 0..=1 {
            let a = heat.expand(t, z, level, None).unwrap().value();
            let b = simple.expand(t, z, level, None).unwrap().value();
            assert!(((a - b) / a).norm() <= 1e-6);
        }
    }
    for i in 0..20 {
        let t_abs = 0.004 + 0.003 * i as f64;
        let h = heat.level0_schedule(t_abs).map(|s| s.ns[0]).ok();
        let g = simple.generalized_schedule(t_abs).map(|s| s.ns[0]).ok();
        assert_eq!(h, g, "t = {t_abs}");
    }
}

#[test]
fn cubic_symbol_improves_with_level() {
    use hyperasym_core::oracle::simple_direct;
    let eq = SimpleEquation::new(Complex64::new(1.0, 0.0), 3, 1).unwrap();
    let datum = AnalyticDatum::simple_pole(Complex64::new(1.0, 0.0)).unwrap();
    let e = SimpleEngine::new(eq, datum.clone(), PI, 0.1, ExpansionOptions::default()).unwrap();
    let z = Complex64::new(0.0, 0.0);
    for t_abs in [0.0005, 0.001, 0.002] {
        let t = Complex64::from_polar(t_abs, PI);
        let exact = simple_direct(&eq, &datum, &e.direction, t, z).unwrap();
        let (exp, rem) = e.generalized_hyper_expand(t, z, 1, None).unwrap();
        let errs: Vec<f64> = exp
            .levels
            .iter()
            .map(|l| (l.value - exact).norm())
            .collect();
        assert!(errs[1] < errs[0]);
        assert!((exp.value() + rem.value - exact).norm() <= 1e-6 * exact.norm());
    }
}
