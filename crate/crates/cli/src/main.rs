//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 IO error, 2 configuration error, 3 numerical
//! failure (a named invariant broke during the solve), 4 validation
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use halfspace_cli::{config, driver, report, CliError};

#[derive(Parser)]
#[command(
    name = "halfspace",
    about = "Spectral solver for steady linear half-space kinetic equations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and write solution tables.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the basis size and tabulate boundary errors against the
    /// largest size.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Ascending basis half-counts, e.g. 4,8,16,32 (overrides the
        /// config).
        #[arg(long = "n-list", value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
    },
    /// Run the invariant suite for the configured model.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the mode spectrum and null-space report.
    Modes {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also dump basis recurrence coefficients and quadrature rules.
        #[arg(long = "dump-basis")]
        dump_basis: bool,
    },
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve { config, out } => {
            let mut cfg = config::load(&config)?;
            if let Some(dir) = out {
                cfg.out_dir = dir;
            }
            let run = driver::run_solve(&cfg)?;
            driver::write_solve(&cfg.out_dir, &run)?;
            println!(
                "solve: {} n={} modes (growing, decaying, degenerate) = ({}, {}, {}), \
                 alpha = {}, outputs in {}",
                run.diagnostics.model,
                run.diagnostics.n,
                run.diagnostics.counts.growing,
                run.diagnostics.counts.decaying,
                run.diagnostics.counts.degenerate,
                run.diagnostics.alpha_used,
                cfg.out_dir.display()
            );
            Ok(())
        }
        Command::Convergence { config, out, n_list } => {
            let mut cfg = config::load(&config)?;
            if let Some(dir) = out {
                cfg.out_dir = dir;
            }
            if let Some(list) = n_list {
                cfg.n_list = Some(list);
            }
            let list = cfg
                .n_list
                .clone()
                .ok_or_else(|| CliError::Config("no n_list given (config or --n-list)".into()))?;
            let run = driver::run_convergence(&cfg, &list)?;
            driver::write_convergence(&cfg.out_dir, &run)?;
            for (s, rate) in run.rates.iter().enumerate() {
                println!("convergence: species {} rate {:.3}", s + 1, rate);
            }
            Ok(())
        }
        Command::Validate { config, out } => {
            let mut cfg = config::load(&config)?;
            if let Some(dir) = out {
                cfg.out_dir = dir;
            }
            let checks = report::run_validate(&cfg)?;
            let first_failure = report::write_report(&cfg.out_dir, &checks)?;
            for c in &checks {
                println!(
                    "validate: {:<28} {} (measured {:.3e}, threshold {:.3e})",
                    c.name,
                    if c.pass { "pass" } else { "FAIL" },
                    c.measured,
                    c.threshold
                );
            }
            match first_failure {
                None => Ok(()),
                Some(name) => Err(CliError::Validation(format!("invariant '{name}' failed"))),
            }
        }
        Command::Modes { config, out, dump_basis } => {
            let mut cfg = config::load(&config)?;
            if let Some(dir) = out {
                cfg.out_dir = dir;
            }
            let problem = driver::build(&cfg)?;
            driver::write_modes(&cfg.out_dir, &problem, dump_basis)?;
            println!(
                "modes: (growing, decaying, degenerate) = ({}, {}, {}), outputs in {}",
                problem.system.counts.growing,
                problem.system.counts.decaying,
                problem.system.counts.degenerate,
                cfg.out_dir.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
