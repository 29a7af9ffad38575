use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hyperasym_cli::{
    render_sweep, run_expand, run_sweep, run_verify, CliError, Format, ProblemConfig,
};

#[derive(Parser)]
#[command(
    name = "hyperasym",
    version,
    about = "Hyperasymptotic expansions checked against direct quadrature"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump schedules, coefficients and remainder reports
    Expand(Opts),
    /// Tabulate errors against the oracle over the t and z grids
    Sweep(Opts),
    /// Run the invariant checks on the configured problem
    Verify(Opts),
}

#[derive(Args)]
struct Opts {
    #[arg(long)]
    config: PathBuf,
    /// Override the number of levels
    #[arg(long)]
    level: Option<usize>,
    /// Override the summation direction
    #[arg(long)]
    theta: Option<f64>,
    /// Output file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
    /// Override the quadrature tolerance
    #[arg(long)]
    tol: Option<f64>,
}

impl Opts {
    fn config(&self) -> Result<ProblemConfig, CliError> {
        let mut cfg = ProblemConfig::load(&self.config)?;
        if let Some(l) = self.level {
            cfg.levels = l;
        }
        if let Some(t) = self.theta {
            cfg.theta = t;
        }
        if let Some(out) = &self.out {
            cfg.output.path = Some(out.clone());
        }
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
        if let Some(tol) = self.tol {
            cfg.tolerances.quadrature = tol;
        }
        cfg.validate()
            .map_err(|(key, msg)| CliError::Validation(format!("`{key}`: {msg}")))?;
        Ok(cfg)
    }
}

fn emit(cfg: &ProblemConfig, text: &str) -> Result<(), CliError> {
    match &cfg.output.path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Expand(o) => {
            let cfg = o.config()?;
            let dump = run_expand(&cfg)?;
            let format = if o.format.is_some() {
                cfg.output.format
            } else {
                Format::Json
            };
            emit(&cfg, &dump.render(format))
        }
        Command::Sweep(o) => {
            let cfg = o.config()?;
            let rows = run_sweep(&cfg)?;
            emit(&cfg, &render_sweep(&rows, cfg.output.format))
        }
        Command::Verify(o) => {
            let cfg = o.config()?;
            let summary = run_verify(&cfg)?;
            print!("{}", summary.render());
            if summary.passed() {
                Ok(())
            } else {
                Err(CliError::Numerical(format!(
                    "{} checks failed",
                    summary.failures()
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
