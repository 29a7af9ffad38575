//! The `verify` subcommand: invariant checks of every module on the
//! configured problem.

use std::f64::consts::TAU;

use hyperasym_core::borel_engine::{borel_transform, laplace_sum};
use hyperasym_core::contour::{clearance_check, random_chain};
use hyperasym_core::datum::angle_distance;
use hyperasym_core::expansion::FMode;
use hyperasym_core::special_fn::{
    ecalle_kernel, ecalle_kernel_series, gamma_moment_quadrature, gaussian_kernel, moment_ratio,
    LaplaceKernel,
};
use hyperasym_core::{Complex64, KernelParams, SimpleEngine, SimpleEquation};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::config::ProblemConfig;
use crate::problem::Problem;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub checks: Vec<Check>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{tag} {}: {}\n", c.name, c.detail));
        }
        out.push_str(&format!(
            "{} checks, {} failed\n",
            self.checks.len(),
            self.failures()
        ));
        out
    }
}

type Outcome = Result<(bool, String), CliError>;

fn record(checks: &mut Vec<Check>, name: &str, outcome: Outcome) {
    let (passed, detail) = match outcome {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    checks.push(Check {
        name: name.to_string(),
        passed,
        detail,
    });
}

/// Series form of `C_2` against `exp(-tau^2/4)/sqrt(pi)` on `[0, 6]`.
pub fn kernel_closed_form() -> Outcome {
    let p = KernelParams::integer(2)?;
    let mut worst = 0.0f64;
    for i in 0..=600 {
        let tau = 0.01 * i as f64;
        let s = ecalle_kernel_series(&p, Complex64::new(tau, 0.0))?;
        worst = worst.max((s.value.re - gaussian_kernel(tau)).abs());
    }
    Ok((
        worst <= 1e-10,
        format!("max deviation {worst:.3e} (limit 1e-10)"),
    ))
}

/// `|C_q(tau)| <= K exp(-tau^(k+1)/c_q)` with `K = 1` on the range where the
/// true envelope is above `e^-40`. `c_q` may be replaced to test the check.
pub fn kernel_envelope(q: u32, c_q: Option<f64>) -> Outcome {
    let p = KernelParams::integer(q)?;
    let reach = (40.0 * p.c_q).powf(1.0 / (p.k + 1.0));
    let tested = c_q.map_or(p, |c| p.with_c_q(c));
    let mut worst = 0.0f64;
    for i in 0..=400 {
        let tau = reach * i as f64 / 400.0;
        let c = ecalle_kernel(&p, Complex64::new(tau, 0.0))?.norm();
        worst = worst.max(c / tested.envelope(tau));
    }
    Ok((
        worst <= 1.0,
        format!(
            "q = {q}, c_q = {:.6}: sup |C|/envelope = {worst:.3e} (limit 1)",
            tested.c_q
        ),
    ))
}

/// Kernel quadrature of `t^l` against `Gamma(1+q l)/l! |t|^l`.
pub fn moments(q: u32, t_values: &[f64], max_l: u32) -> Outcome {
    let p = KernelParams::integer(q)?;
    let mut worst = 0.0f64;
    for &t in t_values {
        for l in 0..=max_l {
            let quad = gamma_moment_quadrature(l, &p, t)?;
            let exact = moment_ratio(l, p.q) * t.powi(l as i32);
            worst = worst.max((quad - exact).abs() / exact);
        }
    }
    Ok((
        worst <= 1e-8,
        format!("q = {q}, l <= {max_l}: max rel err {worst:.3e} (limit 1e-8)"),
    ))
}

/// Borel transform followed by the Laplace sum returns `t^l`.
pub fn round_trip(q: u32, t: Complex64, max_l: usize) -> Outcome {
    let eq = SimpleEquation::new(Complex64::new(1.0, 0.0), q, 1)?;
    let kernel = LaplaceKernel::Ecalle(eq.kernel);
    let mut worst = 0.0f64;
    for l in 0..=max_l {
        let mut u = vec![Complex64::new(0.0, 0.0); l + 1];
        u[l] = Complex64::new((1..=l).map(|i| i as f64).product(), 0.0);
        let v = borel_transform(&u, eq.k());
        let back = laplace_sum(&kernel, t, 1e-12, |x| v.eval(x))?;
        let exact = t.powu(l as u32);
        worst = worst.max((back - exact).norm() / exact.norm());
    }
    Ok((
        worst <= 1e-8,
        format!("q = {q}, l <= {max_l}: max rel err {worst:.3e} (limit 1e-8)"),
    ))
}

/// Taylor coefficients of the datum reproduce its values inside the disc.
fn datum_taylor(problem: &Problem) -> Outcome {
    let d = problem.datum();
    let r = d.r().min(1.0);
    let coeffs = d.taylor_coeffs(Complex64::new(0.0, 0.0), 200)?;
    let mut worst = 0.0f64;
    for i in 0..8 {
        let z = Complex64::from_polar(0.5 * r, TAU * i as f64 / 8.0);
        let series = coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
        let direct = d.eval(z)?;
        worst = worst.max((series - direct).norm() / direct.norm().max(1e-300));
    }
    Ok((
        worst <= 1e-12,
        format!("max rel err {worst:.3e} (limit 1e-12)"),
    ))
}

fn direction_margin(problem: &Problem) -> Outcome {
    let dir = problem.direction();
    let margin = dir
        .stokes
        .iter()
        .map(|&s| angle_distance(dir.theta, s))
        .fold(f64::INFINITY, f64::min);
    Ok((
        margin >= dir.delta,
        format!(
            "distance to the nearest Stokes direction {margin:.4} (delta {})",
            dir.delta
        ),
    ))
}

fn schedules(problem: &Problem, cfg: &ProblemConfig) -> Outcome {
    let mut notes = Vec::new();
    for &t in &cfg.t_grid {
        let s = problem.engine().schedule(t, cfg.levels)?;
        let sigmas_up = s.sigmas.windows(2).all(|w| w[0] < w[1]);
        let etas: Vec<f64> = (0..=cfg.levels).map(|n| s.eta(n)).collect();
        let etas_up = etas.windows(2).all(|w| w[0] < w[1]);
        let first_inside = s.sigmas[0] <= s.r_eff;
        let orders = s.ns.iter().all(|&n| n >= 1);
        if !(sigmas_up && etas_up && first_inside && orders) {
            notes.push(format!(
                "|t| = {t}: N = {:?}, sigma = {:?}, eta = {etas:?}",
                s.ns, s.sigmas
            ));
        }
    }
    if notes.is_empty() {
        Ok((true, format!("{} schedules monotone", cfg.t_grid.len())))
    } else {
        Ok((false, notes.join("; ")))
    }
}

fn clearance(problem: &Problem, cfg: &ProblemConfig, count: usize) -> Outcome {
    let engine = problem.engine();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut bad = 0;
    for &t in &cfg.t_grid {
        let s = engine.schedule(t, cfg.levels)?;
        let mut sigmas = vec![0.0];
        sigmas.extend_from_slice(&s.sigmas[..cfg.levels]);
        let reach = 2.0 * s.sigmas[cfg.levels];
        for _ in 0..count {
            let x = Complex64::new(rng.random::<f64>() * reach, 0.0);
            let chain = random_chain(&mut rng, &sigmas, x, engine.eps, &engine.geometry)?;
            if !clearance_check(&chain, engine.eps, &engine.geometry) {
                bad += 1;
            }
        }
    }
    let total = count * cfg.t_grid.len();
    Ok((
        bad == 0,
        format!("{bad} of {total} chains too close (eps = {})", engine.eps),
    ))
}

/// `f_1` through the Cauchy integral against the divided difference at 20
/// real points away from `sigma_1`.
pub fn dual_path(problem: &Problem, t_abs: f64, z: Complex64) -> Outcome {
    let engine = problem.engine();
    let sched = engine.schedule(t_abs, 1)?;
    let src = problem.source(z);
    let h = engine.hierarchy(src.as_ref(), &sched)?;
    let sigma = sched.sigma(1);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let s = Complex64::new(sigma * (0.32 + 0.15 * i as f64), 0.0);
        let a = h.f_with_mode(1, s, FMode::Contour)?;
        let b = h.f_with_mode(1, s, FMode::DividedDifference)?;
        worst = worst.max((a - b).norm() / b.norm());
    }
    Ok((
        worst <= 1e-8,
        format!("max rel err {worst:.3e} over 20 points (limit 1e-8)"),
    ))
}

/// Expansion plus remainder quadrature against the oracle.
pub fn telescoping(problem: &Problem, t_abs: f64, z: Complex64, levels: usize) -> Outcome {
    let exact = problem.exact(t_abs, z)?;
    let mut worst = 0.0f64;
    for n in 0..=levels {
        let (exp, rem) = problem.hyper_expand(t_abs, z, n, None)?;
        worst = worst.max((exp.value() + rem.value - exact).norm() / exact.norm());
    }
    Ok((
        worst <= 1e-6,
        format!("|t| = {t_abs}: max rel err {worst:.3e} (limit 1e-6)"),
    ))
}

/// Absolute errors do not grow with the level until they reach rounding.
fn improvement(problem: &Problem, t_abs: f64, z: Complex64, levels: usize) -> Outcome {
    let exact = problem.exact(t_abs, z)?;
    let exp = problem.expand(t_abs, z, levels, None)?;
    let errs: Vec<f64> = exp
        .levels
        .iter()
        .map(|l| (l.value - exact).norm())
        .collect();
    let floor = 1e-13 * exact.norm();
    let ok = errs.windows(2).all(|w| w[1] <= w[0].max(floor));
    let shown: Vec<String> = errs.iter().map(|e| format!("{e:.3e}")).collect();
    Ok((
        ok,
        format!("|t| = {t_abs}: errors by level [{}]", shown.join(", ")),
    ))
}

/// Calibrated bounds dominate the remainders on `[0.75 t_cal, t_cal]`.
fn bound_envelope(problem: &Problem, z: Complex64, levels: usize) -> Outcome {
    let cal = problem.calibrate(z, levels)?;
    let mut worst = 0.0f64;
    for f in [1.0, 0.875, 0.75] {
        for n in 0..=levels {
            let (_, rem) = problem.hyper_expand(f * cal.t_cal, z, n, Some(&cal))?;
            let b = rem.bound.unwrap_or(0.0);
            worst = worst.max(rem.value.norm() / b);
        }
    }
    Ok((
        worst <= 2.0,
        format!(
            "t_cal = {:.6}: max |R_n|/bound {worst:.3} (limit 2)",
            cal.t_cal
        ),
    ))
}

/// The simple-equation engine with `q = 2, lambda = 1, beta = 1` reproduces
/// the heat engine.
fn heat_consistency(problem: &Problem, cfg: &ProblemConfig) -> Outcome {
    let Problem::Heat(heat) = problem else {
        return Ok((true, "not a heat problem; skipped".into()));
    };
    let simple = SimpleEngine::new(
        SimpleEquation::heat(),
        heat.datum.clone(),
        cfg.theta,
        cfg.delta,
        cfg.options(),
    )?;
    let z = cfg.z_values()[0];
    let levels = cfg.levels.min(1);
    let mut worst = 0.0f64;
    let mut n0_mismatch = 0;
    for &t_abs in &cfg.t_grid {
        let t = Complex64::from_polar(t_abs, heat.theta());
        let a = heat.expand(t, z, levels, None)?.value();
        let b = simple.expand(t, z, levels, None)?.value();
        worst = worst.max((a - b).norm() / a.norm());
        if heat.level0_schedule(t_abs)?.ns[0] != simple.generalized_schedule(t_abs)?.ns[0] {
            n0_mismatch += 1;
        }
    }
    Ok((
        worst <= 1e-6 && n0_mismatch == 0,
        format!("max rel diff {worst:.3e}, N_0 mismatches {n0_mismatch}"),
    ))
}

pub fn run_verify(cfg: &ProblemConfig) -> Result<VerifySummary, CliError> {
    let problem = Problem::build(cfg)?;
    let q = problem.engine().params.q.round() as u32;
    let c_q = cfg.overrides.as_ref().and_then(|o| o.c_q);
    let t0 = cfg.t_grid[0];
    let z0 = cfg.z_values()[0];
    let mut checks = Vec::new();
    record(&mut checks, "kernel_closed_form", kernel_closed_form());
    record(&mut checks, "kernel_envelope", kernel_envelope(q, c_q));
    record(&mut checks, "moments", moments(q, &[0.1, t0], 10));
    record(&mut checks, "round_trip", round_trip(q, problem.t(t0), 6));
    record(&mut checks, "datum_taylor", datum_taylor(&problem));
    record(&mut checks, "direction_margin", direction_margin(&problem));
    record(&mut checks, "schedules", schedules(&problem, cfg));
    record(&mut checks, "clearance", clearance(&problem, cfg, 200));
    if cfg.levels >= 1 {
        record(&mut checks, "dual_path_f1", dual_path(&problem, t0, z0));
    }
    record(
        &mut checks,
        "telescoping",
        telescoping(&problem, t0, z0, cfg.levels.min(1)),
    );
    record(
        &mut checks,
        "improvement",
        improvement(&problem, t0, z0, cfg.levels),
    );
    record(
        &mut checks,
        "bound_envelope",
        bound_envelope(&problem, z0, cfg.levels),
    );
    record(
        &mut checks,
        "heat_consistency",
        heat_consistency(&problem, cfg),
    );
    Ok(VerifySummary { checks })
}
