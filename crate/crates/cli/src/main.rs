//! `mbarrier`: price moving-barrier options from JSON files and check the
//! closed forms against parity identities and numerical oracles.
//!
//! Every run prints one JSON report on stdout. Exit status is 0 when all
//! checks pass, 1 when a numeric check fails and 2 when the inputs are bad.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use commands::Failure;
use report::ErrorReport;

#[derive(Debug, Parser)]
#[command(name = "mbarrier", version, about = "Moving-barrier option pricer")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Print a flat CSV projection instead of JSON.
    #[arg(long, global = true)]
    csv: bool,

    /// Include wall-clock timing in the report (makes output run-dependent).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form price with its image decomposition.
    Price(PointArgs),
    /// Put-call parity (out styles) or out-in parity (in styles).
    Parity {
        #[command(flatten)]
        point: PointArgs,
        /// Tolerance on parity residuals.
        #[arg(long, default_value_t = 1e-12)]
        parity_tol: f64,
    },
    /// Heat-kernel, PDE and Monte Carlo oracles against the closed form.
    Validate {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Term-structure inspection.
    Curves {
        #[command(subcommand)]
        action: CurvesAction,
    },
}

#[derive(Debug, Subcommand)]
enum CurvesAction {
    /// Print the pieces and integrals of a curve file.
    Show {
        #[arg(long)]
        curves: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[arg(long)]
    pub curves: PathBuf,
    #[arg(long)]
    pub contract: PathBuf,
    /// Spot price.
    #[arg(long)]
    pub spot: f64,
    /// Valuation time, in years from the curve origin.
    #[arg(long, default_value_t = 0.0)]
    pub time: f64,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 100_000)]
    pub mc_paths: usize,
    #[arg(long, default_value_t = 256)]
    pub mc_steps: usize,
    #[arg(long, default_value_t = 20261017)]
    pub seed: u64,
    /// Space and time steps of the finest PDE grid.
    #[arg(long, default_value_t = 400)]
    pub pde_grid: usize,
    /// Absolute tolerance for the heat-kernel price.
    #[arg(long, default_value_t = 1e-8)]
    pub hk_tol: f64,
    /// Relative tolerance for the PDE price and its Richardson estimate.
    #[arg(long, default_value_t = 5e-4)]
    pub pde_tol: f64,
    /// Allowed Monte Carlo discrepancy in standard errors.
    #[arg(long, default_value_t = 3.0)]
    pub mc_sigmas: f64,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let start = Instant::now();
    let result = match &cli.command {
        Command::Price(point) => commands::price(point, &argv),
        Command::Parity { point, parity_tol } => commands::parity(point, *parity_tol, &argv),
        Command::Validate { point, oracle } => commands::validate(point, oracle, &argv),
        Command::Curves {
            action: CurvesAction::Show { curves },
        } => commands::curves_show(curves, &argv),
    };
    match result {
        Ok(mut report) => {
            if cli.timing {
                report.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            for notice in &report.notices {
                eprintln!("note: {notice}");
            }
            if cli.csv {
                print!("{}", report.to_csv());
            } else {
                println!("{}", report.to_json());
            }
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(failure) => {
            let (code, message) = match &failure {
                Failure::Input(m) => (2, m),
                Failure::Numeric(m) => (1, m),
            };
            eprintln!("error: {message}");
            let report = ErrorReport {
                command: &argv,
                pass: false,
                error: message,
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            ExitCode::from(code)
        }
    }
}
