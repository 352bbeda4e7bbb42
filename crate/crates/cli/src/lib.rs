//! Batch driver: every verification suite as a subcommand reading one TOML
//! config and writing JSON/CSV results into an output directory.
//!
//! Exit codes: 0 all checks passed, 1 some check failed (or a contract was
//! violated), 2 configuration error.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::{Context, Outcome};
use config::RunConfig;
use magflow::variational::Bound;
use magflow::Error;

#[derive(Debug, Parser)]
#[command(name = "magflow", version, about = "Magnetic-flow verification suites")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// RNG seed; required by randomized suites unless the config sets one.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Validate the config and print the planned jobs without running them.
    #[arg(long)]
    pub dry_run: bool,
    /// Only write the result files; print nothing on success.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pointwise and integrated energy identities, commutators, measure symmetry.
    VerifyIdentities(Common),
    /// Frame commutation relations and dual pairings only.
    Commutators(Common),
    /// Jacobi residuals along orbits and Jacobi-vs-flow differencing.
    JacobiCheck(Common),
    /// Top Lyapunov exponent and hyperbolicity diagnostic.
    Lyapunov(Common),
    /// Index form on closed orbits.
    IndexForm(Common),
    /// Find closed orbits and store them in the orbit database.
    Orbits(Common),
    /// Action spectrum of the found orbits.
    Spectrum(Common),
    /// Continue orbits along the deformation and check the action derivative relation.
    Deform(Common),
    /// First variation of the free-time action around closed orbits.
    ActionVariation(Common),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifyIdentities(_) => "verify-identities",
            Command::Commutators(_) => "commutators",
            Command::JacobiCheck(_) => "jacobi-check",
            Command::Lyapunov(_) => "lyapunov",
            Command::IndexForm(_) => "index-form",
            Command::Orbits(_) => "orbits",
            Command::Spectrum(_) => "spectrum",
            Command::Deform(_) => "deform",
            Command::ActionVariation(_) => "action-variation",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::VerifyIdentities(c)
            | Command::Commutators(c)
            | Command::JacobiCheck(c)
            | Command::Lyapunov(c)
            | Command::IndexForm(c)
            | Command::Orbits(c)
            | Command::Spectrum(c)
            | Command::Deform(c)
            | Command::ActionVariation(c) => c,
        }
    }
}

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::Parse(_) | Error::Regime(_) | Error::Unsupported(_))
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let common = cli.command.common().clone();
    let setup = RunConfig::load(&common.config).and_then(|cfg| Context::new(cfg, &common, cli.command.name()));
    let ctx = match setup {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let work = || commands::dispatch(&cli.command, &ctx);
    let result = match common.jobs {
        Some(n) => magflow::parallel::with_jobs(n, work),
        None => work(),
    };
    match result {
        Ok(Outcome::Plan(lines)) => {
            println!("{} (dry run)", cli.command.name());
            for l in lines {
                println!("  {l}");
            }
            0
        }
        Ok(Outcome::Report(report)) => match ctx.finish(&report, common.jobs) {
            Ok(()) => {
                for r in report.records.iter().filter(|_| !common.quiet) {
                    let bound = match r.bound {
                        Bound::Upper => "<",
                        Bound::Lower => ">",
                    };
                    println!(
                        "{} {}: {:.3e} ({bound} {:.1e})",
                        if r.pass { "PASS" } else { "FAIL" },
                        r.identity,
                        r.residual,
                        r.tolerance
                    );
                }
                if report.pass {
                    0
                } else {
                    1
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            if is_config_error(&e) {
                2
            } else {
                1
            }
        }
    }
}
