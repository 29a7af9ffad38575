//! The `expand` and `sweep` subcommands.

use std::fmt::Write as _;

use hyperasym_core::oracle::{compare, ErrorReport};
use hyperasym_core::{Calibration, Complex64, HyperExpansion, RemainderReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Format, ProblemConfig};
use crate::problem::Problem;
use crate::CliError;

pub const CSV_HEADER: &str =
    "t_abs,theta,z_re,z_im,level,approx_re,approx_im,exact_re,exact_im,abs_err,bound";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpandEntry {
    pub t_abs: f64,
    pub z: Complex64,
    pub expansion: HyperExpansion,
    pub remainder: RemainderReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZCalibration {
    pub z: Complex64,
    pub calibration: Calibration,
}

/// Everything `expand` computes, in grid order (`t` outer, `z` inner).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpandDump {
    pub equation: String,
    pub theta: f64,
    pub eps: f64,
    pub b_tilde: f64,
    pub level: usize,
    pub calibrations: Vec<ZCalibration>,
    pub entries: Vec<ExpandEntry>,
}

impl ExpandDump {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dump is serializable")
    }

    /// One row per `psi_l`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_abs,z_re,z_im,level,l,psi_re,psi_im\n");
        for e in &self.entries {
            for (l, p) in e.expansion.psi.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{:.16e},{:.16e},{:.16e},{},{},{:.16e},{:.16e}",
                    e.t_abs, e.z.re, e.z.im, e.expansion.level, l, p.re, p.im
                );
            }
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}

fn grid(cfg: &ProblemConfig) -> Vec<(f64, Complex64)> {
    let zs = cfg.z_values();
    cfg.t_grid
        .iter()
        .flat_map(|&t| zs.iter().map(move |&z| (t, z)))
        .collect()
}

fn calibrations(problem: &Problem, cfg: &ProblemConfig) -> Result<Vec<Calibration>, CliError> {
    cfg.z_values()
        .par_iter()
        .map(|&z| problem.calibrate(z, cfg.levels))
        .collect()
}

pub fn run_expand(cfg: &ProblemConfig) -> Result<ExpandDump, CliError> {
    let problem = Problem::build(cfg)?;
    let cals = calibrations(&problem, cfg)?;
    let zs = cfg.z_values();
    let nz = zs.len();
    let entries = grid(cfg)
        .into_par_iter()
        .enumerate()
        .map(|(i, (t_abs, z))| {
            let (expansion, remainder) =
                problem.hyper_expand(t_abs, z, cfg.levels, Some(&cals[i % nz]))?;
            Ok(ExpandEntry {
                t_abs,
                z,
                expansion,
                remainder,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let engine = problem.engine();
    Ok(ExpandDump {
        equation: problem.name(),
        theta: problem.theta(),
        eps: engine.eps,
        b_tilde: engine.b_tilde,
        level: cfg.levels,
        calibrations: zs
            .into_iter()
            .zip(cals)
            .map(|(z, calibration)| ZCalibration { z, calibration })
            .collect(),
        entries,
    })
}

/// One sweep row: the requested `|t|` and direction next to the oracle report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t_abs: f64,
    pub theta: f64,
    pub report: ErrorReport,
}

/// One row per `(t, z, level)`, `t` outer, then `z`, then level.
pub fn run_sweep(cfg: &ProblemConfig) -> Result<Vec<SweepRow>, CliError> {
    let problem = Problem::build(cfg)?;
    let cals = calibrations(&problem, cfg)?;
    let nz = cfg.z_points.len();
    let blocks = grid(cfg)
        .into_par_iter()
        .enumerate()
        .map(|(i, (t_abs, z))| {
            let exp = problem.expand(t_abs, z, cfg.levels, Some(&cals[i % nz]))?;
            let exact = problem.exact(t_abs, z)?;
            let t = problem.t(t_abs);
            Ok(exp
                .levels
                .iter()
                .map(|lv| SweepRow {
                    t_abs,
                    theta: problem.theta(),
                    report: compare(t, z, lv.level, lv.value, exact, lv.bound),
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(256 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let r = &row.report;
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            row.t_abs,
            row.theta,
            r.z.re,
            r.z.im,
            r.level,
            r.approx.re,
            r.approx.im,
            r.exact.re,
            r.exact.im,
            r.abs_err,
            opt(r.predicted_bound)
        );
    }
    out
}

pub fn render_sweep(rows: &[SweepRow], format: Format) -> String {
    match format {
        Format::Csv => sweep_csv(rows),
        Format::Json => serde_json::to_string_pretty(rows).expect("rows are serializable"),
    }
}
