//! Acceptance suite. Runs without the libtest harness and prints one line
//! per criterion; exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use hyperasym_cli::verify::{dual_path, kernel_closed_form, moments, round_trip};
use hyperasym_cli::{run_sweep, sweep_csv, Problem, ProblemConfig};
use hyperasym_core::contour::{clearance_check, random_chain};
use hyperasym_core::expansion::EpsPolicy;
use hyperasym_core::oracle::heat_direct;
use hyperasym_core::{
    AnalyticDatum, Complex64, ExpansionOptions, HeatEngine, PoleTerm, SimpleEngine, SimpleEquation,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

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

fn reference_problem() -> Problem {
    Problem::build(&ProblemConfig::reference()).unwrap()
}

fn t_ref() -> Complex64 {
    Complex64::from_polar(1.0 / 40.0, PI)
}

fn within(outcome: Outcome, elapsed: Duration, limit: Duration) -> Outcome {
    let (ok, detail) = outcome?;
    Ok((
        ok && elapsed < limit,
        format!(
            "{detail}; {:.2} s (limit {} s)",
            elapsed.as_secs_f64(),
            limit.as_secs()
        ),
    ))
}

fn crit1() -> Outcome {
    let start = Instant::now();
    let r = kernel_closed_form().map_err(|e| e.to_string());
    within(r, start.elapsed(), Duration::from_secs(1))
}

fn crit2() -> Outcome {
    moments(2, &[0.1, 0.025], 10).map_err(|e| e.to_string())
}

fn crit3() -> Outcome {
    let start = Instant::now();
    let e = reference_engine();
    let z = c(0.0, 0.0);
    let t = t_ref();
    let exact =
        heat_direct(&e.datum, &e.direction, t, z, e.engine.b_tilde).map_err(|e| e.to_string())?;
    let mut partial = c(0.0, 0.0);
    let mut coeff = 1.0;
    for k in 0..10u32 {
        if k > 0 {
            // (2k)!/k! from (2k-2)!/(k-1)!
            coeff *= (2 * k) as f64 * (2 * k - 1) as f64 / k as f64;
        }
        partial += coeff * t.powu(k);
    }
    let err = (exact - partial).norm();
    let cal = e.calibrate(z, 0).map_err(|e| e.to_string())?;
    let sched = e.level0_schedule(t.norm()).map_err(|e| e.to_string())?;
    let bound = e
        .remainder_bound(0, &sched, &cal)
        .map_err(|e| e.to_string())?;
    let scale = (-9.5f64).exp();
    let ok = err <= 2.0 * bound && err <= 10.0 * scale && err >= scale / 10.0 && sched.ns[0] == 10;
    within(
        Ok((
            ok,
            format!(
                "error {err:.4e}, A_0 bound {bound:.4e}, e^-9.5 = {scale:.4e}, N_0 = {}",
                sched.ns[0]
            ),
        )),
        start.elapsed(),
        Duration::from_secs(30),
    )
}

fn crit4() -> Outcome {
    let start = Instant::now();
    let e = reference_engine();
    let z = c(0.0, 0.0);
    let t = t_ref();
    let exact =
        heat_direct(&e.datum, &e.direction, t, z, e.engine.b_tilde).map_err(|e| e.to_string())?;
    let exp = e.expand(t, z, 2, None).map_err(|e| e.to_string())?;
    let errs: Vec<f64> = exp
        .levels
        .iter()
        .map(|l| (l.value - exact).norm())
        .collect();
    let etas: Vec<f64> = exp.levels.iter().map(|l| l.eta).collect();
    let ok = errs[1] <= errs[0] / 10.0 && errs[2] < errs[1] && etas.windows(2).all(|w| w[0] < w[1]);
    within(
        Ok((
            ok,
            format!(
                "errors {:.3e}, {:.3e}, {:.3e}; eta {:.4}, {:.4}, {:.4}",
                errs[0], errs[1], errs[2], etas[0], etas[1], etas[2]
            ),
        )),
        start.elapsed(),
        Duration::from_secs(300),
    )
}

fn crit5() -> Outcome {
    let e = reference_engine();
    let z = c(0.0, 0.0);
    let t = t_ref();
    let exact =
        heat_direct(&e.datum, &e.direction, t, z, e.engine.b_tilde).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for n in 0..=1 {
        let (exp, rem) = e.hyper_expand(t, z, n, None).map_err(|e| e.to_string())?;
        worst = worst.max((exp.value() + rem.value - exact).norm() / exact.norm());
    }
    Ok((
        worst <= 1e-6,
        format!("n = 0, 1: max rel err {worst:.3e} (limit 1e-6)"),
    ))
}

fn crit6() -> Outcome {
    dual_path(&reference_problem(), 1.0 / 40.0, c(0.0, 0.0)).map_err(|e| e.to_string())
}

fn chains(problem: &Problem, t_abs: f64, levels: usize, rng: &mut StdRng) -> Result<usize, String> {
    let engine = problem.engine();
    let sched = engine.schedule(t_abs, levels).map_err(|e| e.to_string())?;
    let mut sigmas = vec![0.0];
    sigmas.extend_from_slice(&sched.sigmas[..levels]);
    let reach = 2.0 * sched.sigmas[levels];
    let mut bad = 0;
    for _ in 0..1000 {
        let s = c(rng.random::<f64>() * reach, 0.0);
        let chain = random_chain(rng, &sigmas, s, engine.eps, &engine.geometry)
            .map_err(|e| e.to_string())?;
        if !clearance_check(&chain, engine.eps, &engine.geometry) {
            bad += 1;
        }
    }
    Ok(bad)
}

fn crit7() -> Outcome {
    let mut rng = StdRng::seed_from_u64(20);
    let mut notes = Vec::new();
    let mut all_ok = true;
    // heat reference
    let bad = chains(&reference_problem(), 1.0 / 40.0, 2, &mut rng)?;
    all_ok &= bad == 0;
    notes.push(format!("heat 1/(1-z): {bad}"));
    // two poles off the axis
    let datum = AnalyticDatum::new(
        vec![
            PoleTerm::simple(c(0.8, 0.6)),
            PoleTerm::new(c(0.5, 0.0), c(-1.2, 0.3), 2),
        ],
        Vec::new(),
        None,
    )
    .map_err(|e| e.to_string())?;
    let two =
        HeatEngine::new(datum, 2.2, 0.1, ExpansionOptions::default()).map_err(|e| e.to_string())?;
    let bad = chains(&Problem::Heat(two), 0.01, 2, &mut rng)?;
    all_ok &= bad == 0;
    notes.push(format!("heat two poles: {bad}"));
    // cubic symbol
    let eq = SimpleEquation::new(c(1.0, 0.0), 3, 1).map_err(|e| e.to_string())?;
    let datum = AnalyticDatum::simple_pole(c(1.0, 0.0)).map_err(|e| e.to_string())?;
    let cubic = SimpleEngine::new(eq, datum, PI, 0.1, ExpansionOptions::default())
        .map_err(|e| e.to_string())?;
    let bad = chains(&Problem::Simple(cubic), 0.001, 1, &mut rng)?;
    all_ok &= bad == 0;
    notes.push(format!("q = 3: {bad}"));
    Ok((
        all_ok,
        format!("violations per 1000 chains: {}", notes.join(", ")),
    ))
}

fn crit8() -> Outcome {
    let heat = reference_engine();
    let options = ExpansionOptions {
        eps: EpsPolicy::Fixed(0.04),
        ..Default::default()
    };
    let simple = SimpleEngine::new(SimpleEquation::heat(), heat.datum.clone(), PI, 0.1, options)
        .map_err(|e| e.to_string())?;
    let z = c(0.0, 0.0);
    let mut worst = 0.0f64;
    for t_abs in [0.015, 0.02, 0.025, 0.03, 0.035] {
        let t = Complex64::from_polar(t_abs, PI);
        for level in 0..=1 {
            let a = heat
                .expand(t, z, level, None)
                .map_err(|e| e.to_string())?
                .value();
            let b = simple
                .expand(t, z, level, None)
                .map_err(|e| e.to_string())?
                .value();
            worst = worst.max((a - b).norm() / a.norm());
        }
    }
    let mut mismatches = 0;
    for i in 0..20 {
        let t_abs = 0.005 + 0.045 * i as f64 / 19.0;
        let a = heat.level0_schedule(t_abs).map_err(|e| e.to_string())?.ns[0];
        let b = simple
            .generalized_schedule(t_abs)
            .map_err(|e| e.to_string())?
            .ns[0];
        if a != b {
            mismatches += 1;
        }
    }
    Ok((
        worst <= 1e-6 && mismatches == 0,
        format!("max rel diff {worst:.3e} (limit 1e-6); N_0 mismatches {mismatches} of 20"),
    ))
}

fn crit9() -> Outcome {
    let t = Complex64::from_polar(0.3, 0.4);
    let (ok2, d2) = round_trip(2, t, 6).map_err(|e| e.to_string())?;
    let (ok3, d3) = round_trip(3, t, 6).map_err(|e| e.to_string())?;
    Ok((ok2 && ok3, format!("{d2}; {d3}")))
}

fn crit10() -> Outcome {
    let cfg = ProblemConfig::reference();
    let a = sweep_csv(&run_sweep(&cfg).map_err(|e| e.to_string())?);
    let b = sweep_csv(&run_sweep(&cfg).map_err(|e| e.to_string())?);
    Ok((
        a.as_bytes() == b.as_bytes(),
        format!("{} bytes, {} rows", a.len(), a.lines().count() - 1),
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("kernel closed form", crit1),
        ("moment identities", crit2),
        ("level-0 oracle agreement", crit3),
        ("hyperasymptotic improvement", crit4),
        ("telescoping", crit5),
        ("dual-path f_1", crit6),
        ("clearance", crit7),
        ("generalized/heat consistency", crit8),
        ("Borel-Laplace round trip", crit9),
        ("determinism", crit10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (ok, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {detail}",
            if ok { "PASS" } else { "FAIL" },
            i + 1
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
