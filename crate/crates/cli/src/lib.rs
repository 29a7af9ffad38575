//! Driver for the `hyperasym` command line tool: problem configs, the
//! expand / sweep / verify runs and their output formats.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod problem;
pub mod run;
pub mod verify;

pub use config::{EquationSpec, Format, ProblemConfig};
pub use problem::Problem;
pub use run::{render_sweep, run_expand, run_sweep, sweep_csv, ExpandDump, SweepRow, CSV_HEADER};
pub use verify::{run_verify, VerifySummary};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for bad input, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<hyperasym_core::Error> for CliError {
    fn from(e: hyperasym_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}
