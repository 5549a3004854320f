//! `alphanag`: run alpha-momentum experiments, re-certify traces and fit
//! decay rates.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 certification
//! failure.

mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use alphanag::analysis::{self, CertContext, CertificateStatus};
use alphanag::io::{self as trace_io};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "alphanag", version, about = "Accelerated methods with alpha-power momentum")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a sweep over alpha, r and s, writing one trace per run plus a summary.
    Run(Box<RunArgs>),
    /// Re-run the bound certificate on an existing trace.
    Check {
        trace: PathBuf,
    },
    /// Fit the decay exponent of a trace's objective gap.
    Fit {
        trace: PathBuf,
        /// Window `k_lo,k_hi`.
        #[arg(long, default_value = "100,10000")]
        window: String,
        /// Do not shrink the window at the rounding floor.
        #[arg(long)]
        exact: bool,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// The two-dimensional quadratic with eigenvalues 0.01 and 2.
    #[arg(long, conflicts_with = "problem")]
    pub figure1: bool,
    /// Library problem: figure1, quadratic5, lasso10, lasso1d, logistic5.
    #[arg(long)]
    pub problem: Option<String>,
    /// TOML experiment file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated alphas.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Comma-separated explicit r values (overrides --r-rule).
    #[arg(long, value_delimiter = ',', conflicts_with = "r_rule")]
    pub r: Vec<f64>,
    /// Rule for r, e.g. `2a+1`.
    #[arg(long)]
    pub r_rule: Option<String>,
    /// `critical` (1/L) or comma-separated step sizes.
    #[arg(long)]
    pub s: Option<String>,
    #[arg(long)]
    pub iters: Option<usize>,
    /// nag_alpha, m_nag_alpha, fista_alpha or m_fista_alpha.
    #[arg(long)]
    pub variant: Option<String>,
    /// two_step or phase_space.
    #[arg(long)]
    pub stepping: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub certify: bool,
    #[arg(long)]
    pub fit: bool,
    /// Fit window `k_lo,k_hi`.
    #[arg(long)]
    pub fit_window: Option<String>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Iteration at which the ordering report compares gaps.
    #[arg(long)]
    pub probe: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_window(s: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [lo, hi] => Ok((lo.parse().context("bad k_lo")?, hi.parse().context("bad k_hi")?)),
        _ => bail!("window must be 'k_lo,k_hi', got '{s}'"),
    }
}

fn cmd_check(path: &Path) -> Result<ExitCode> {
    let (records, meta) = trace_io::read_trace_file(path)?;
    let ctx = CertContext::from_metadata(&meta)?;
    let cert = analysis::certify_records(&records, &ctx);
    println!("trace: {}", path.display());
    sweep::print_certificate(&cert);
    Ok(match cert.status {
        CertificateStatus::Fail => ExitCode::from(2),
        _ => ExitCode::SUCCESS,
    })
}

fn cmd_fit(path: &Path, window: &str, exact: bool) -> Result<ExitCode> {
    let (records, meta) = trace_io::read_trace_file(path)?;
    let window = parse_window(window)?;
    let fit = if exact {
        analysis::fit_rate(&records, window)?
    } else {
        analysis::fit_rate_auto(&records, window, analysis::rounding_floor(meta.f_star))?
    };
    println!("window: [{}, {}]", fit.window.0, fit.window.1);
    println!("slope: {}", trace_io::format_real(fit.slope));
    println!("intercept: {}", trace_io::format_real(fit.intercept));
    println!("residual_rms: {}", trace_io::format_real(fit.residual_rms));
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run(args) => sweep::cmd_run(args),
        Command::Check { trace } => cmd_check(trace),
        Command::Fit { trace, window, exact } => cmd_fit(trace, window, *exact),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
