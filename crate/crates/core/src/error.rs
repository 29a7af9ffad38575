use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("gamma function has a pole at x = {0}")]
    GammaPole(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("evaluation did not converge: {0}")]
    NonConvergence(String),

    #[error("singular point hit at z = {0}")]
    Singularity(Complex64),

    #[error("point {point} lies outside the holomorphy disc of radius {radius}")]
    OutsideDisc { point: Complex64, radius: f64 },

    #[error(
        "direction {theta} is within {distance:.3e} of Stokes direction {stokes} (margin {delta})"
    )]
    StokesDirection {
        theta: f64,
        stokes: f64,
        distance: f64,
        delta: f64,
    },

    #[error("degenerate contour: {0}")]
    DegenerateContour(String),

    #[error(
        "quadrature did not converge: estimate {estimate:e}, error {error:e} after {nodes} nodes"
    )]
    Quadrature {
        estimate: f64,
        error: f64,
        nodes: usize,
    },

    #[error("truncation schedule: {0}")]
    Schedule(String),

    #[error("growth envelope violated at z = {point}: |phi| = {value:e} > {bound:e}")]
    GrowthViolation {
        point: Complex64,
        value: f64,
        bound: f64,
    },

    #[error("outside the region of holomorphy: {0}")]
    OutsideHolomorphy(String),

    #[error("kernel decay does not dominate growth: {0}")]
    TailNotDominated(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of a numerical method, as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence(_)
                | Error::Quadrature { .. }
                | Error::Schedule(_)
                | Error::TailNotDominated(_)
        )
    }
}
