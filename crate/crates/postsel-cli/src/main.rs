//! Batch front end for post-selection critical values and test size.

mod commands;
mod config;
mod gridcache;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CommonArgs, RangeDefaults};

#[derive(Parser)]
#[command(
    name = "postsel",
    version,
    about = "Critical values and exact size of tests after conservative model selection",
    propagate_version = true
)]
struct Cli {
    /// key=value configuration file; explicit flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print critical values per rule as a function of gamma_hat (CSV out)
    Critval(CommonArgs),
    /// Compute a size curve (semi-analytic, or Monte Carlo with --mc); CSV + SVG
    Size(CommonArgs),
    /// Maximize size over a gamma range and print the level verdict
    Maxsize(CommonArgs),
    /// Build and persist quantile-grid cache files
    Grid(CommonArgs),
    /// Run the verification battery; exit 0 only if all checks pass
    Verify(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let config = cli.config.as_deref();
    let code = match &cli.cmd {
        Cmd::Critval(args) => {
            let settings = config::resolve(
                args,
                config,
                RangeDefaults {
                    min: -5.0,
                    max: 5.0,
                    step: 0.5,
                },
            )?;
            commands::critval::run(&settings)?
        }
        Cmd::Size(args) => {
            let settings = config::resolve(
                args,
                config,
                RangeDefaults {
                    min: -10.0,
                    max: 10.0,
                    step: 0.25,
                },
            )?;
            commands::size::run(&settings)?
        }
        Cmd::Maxsize(args) => {
            let settings = config::resolve(
                args,
                config,
                RangeDefaults {
                    min: -40.0,
                    max: 40.0,
                    step: 0.05,
                },
            )?;
            commands::maxsize::run(&settings)?
        }
        Cmd::Grid(args) => {
            let settings = config::resolve(
                args,
                config,
                RangeDefaults {
                    min: -40.0,
                    max: 40.0,
                    step: 0.05,
                },
            )?;
            commands::grid::run(&settings)?
        }
        Cmd::Verify(args) => {
            let settings = config::resolve(
                args,
                config,
                RangeDefaults {
                    min: -40.0,
                    max: 40.0,
                    step: 0.05,
                },
            )?;
            commands::verify::run(&settings)?
        }
    };
    Ok(code as u8)
}

/// Exit codes: 1 generic/verification failure, 2 usage, 3 numeric
/// convergence failure. (clap itself exits 2 on malformed flags.)
fn classify(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<postsel::Error>() {
        return match e {
            postsel::Error::QuadratureBudget { .. } | postsel::Error::RootStalled { .. } => 3,
            postsel::Error::Domain(_)
            | postsel::Error::GridRange { .. }
            | postsel::Error::BadDesign(_) => 2,
            _ => 1,
        };
    }
    1
}
