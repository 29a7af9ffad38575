//! Hyperasymptotic expansions of solutions of the heat equation and of simple
//! pseudodifferential equations `(d_t - lambda d_z^q)^beta u = 0`.
//!
//! The crate is organised bottom-up:
//!
//! * [`special_fn`] - gamma, Mittag-Leffler functions, the Ecalle kernel and
//!   its moments.
//! * [`datum`] - pole-type Cauchy data, their singular rays, Stokes
//!   directions and Borel-plane distance functions.
//! * [`contour`] - union-of-two-discs contours, adaptive contour quadrature
//!   and the singularity clearance check.
//! * [`expansion`] - the level-by-level machinery shared by both engines:
//!   truncation schedules, the `f_m` recursion, coefficients and remainders.
//! * [`heat_engine`] and [`borel_engine`] - the two concrete problems.
//! * [`oracle`] - direct quadrature of the exact solutions.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod borel_engine;
pub mod contour;
pub mod datum;
mod error;
pub mod expansion;
pub mod heat_engine;
pub mod oracle;
pub mod quadrature;
pub mod special_fn;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use borel_engine::{BorelFunction, SimpleEngine, SimpleEquation};
pub use contour::{ContourSpec, Integration};
pub use datum::{AnalyticDatum, Direction, PoleTerm, SingularGeometry, SingularitySet};
pub use expansion::{
    Calibration, EpsPolicy, ExpansionOptions, HyperExpansion, LevelValue, RemainderReport,
    TruncationSchedule,
};
pub use heat_engine::HeatEngine;
pub use oracle::ErrorReport;
pub use special_fn::KernelParams;
