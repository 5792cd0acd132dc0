//! Command-line front end for the sticky-gas experiments.
//!
//! Exit codes: 0 on success, 1 when `validate` finds a failing check, 2 on
//! usage, configuration or runtime errors.

pub mod config;
pub mod experiments;
pub mod output;
pub mod validate;

use std::ffi::OsString;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{Flags, Settings};
use experiments::Output;
use output::Sink;

#[derive(Parser, Debug)]
#[command(name = "stickygas", version, about = "Cluster statistics of the one-dimensional sticky gravitating gas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the event-driven dynamics on one configuration.
    Simulate {
        #[command(flatten)]
        flags: Flags,
        /// Write every merge event instead of the cluster state.
        #[arg(long)]
        emit_events: bool,
    },
    /// Merging times of one configuration.
    Times(Flags),
    /// Fraction of surviving clusters K_n(t)/n on a time grid.
    Acurve(Flags),
    /// Standardized cluster counts at one time.
    Clt(Flags),
    /// Path covariance of the cluster count at pairs of times.
    Cov(Flags),
    /// Empirical distribution function of K_n(1)/sqrt(n).
    Fig1(Flags),
    /// Small-deviation probabilities of the integrated centered walk.
    Pk(Flags),
    /// Drifted walk survival against its closed form.
    Driftform(Flags),
    /// Both sides of the product formula for P{T_{j,n} >= t}.
    Product16(Flags),
    /// Probability that a finite window misses the merging time.
    Localization(Flags),
    /// Convergence of the last collision time to 1.
    Lastcollision(Flags),
    /// Cross-engine equivalence suite; exits 1 on failure.
    Validate {
        #[command(flatten)]
        flags: Flags,
        /// Smaller suite that runs in about a second.
        #[arg(long)]
        quick: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Times(_) => "times",
            Command::Acurve(_) => "acurve",
            Command::Clt(_) => "clt",
            Command::Cov(_) => "cov",
            Command::Fig1(_) => "fig1",
            Command::Pk(_) => "pk",
            Command::Driftform(_) => "driftform",
            Command::Product16(_) => "product16",
            Command::Localization(_) => "localization",
            Command::Lastcollision(_) => "lastcollision",
            Command::Validate { .. } => "validate",
        }
    }

    fn flags(&self) -> &Flags {
        match self {
            Command::Simulate { flags, .. } | Command::Validate { flags, .. } => flags,
            Command::Times(f)
            | Command::Acurve(f)
            | Command::Clt(f)
            | Command::Cov(f)
            | Command::Fig1(f)
            | Command::Pk(f)
            | Command::Driftform(f)
            | Command::Product16(f)
            | Command::Localization(f)
            | Command::Lastcollision(f) => f,
        }
    }

    /// Name of the table (and output file stem) this command writes.
    fn table_name(&self) -> &'static str {
        match self {
            Command::Simulate { emit_events: true, .. } => "simulate-events",
            Command::Simulate { emit_events: false, .. } => "simulate-clusters",
            other => other.name(),
        }
    }
}

enum Outcome {
    Done,
    ChecksFailed,
}

fn execute(command: &Command, settings: &Settings) -> Result<Outcome> {
    let sink = Sink::new(settings.out.clone(), settings.force, settings.format);
    sink.check_free(command.table_name())?;
    let output = match command {
        Command::Simulate { emit_events, .. } => experiments::simulate(settings, *emit_events)?,
        Command::Times(_) => experiments::times(settings)?,
        Command::Acurve(_) => experiments::acurve(settings)?,
        Command::Clt(_) => experiments::clt(settings)?,
        Command::Cov(_) => experiments::cov(settings)?,
        Command::Fig1(_) => experiments::fig1(settings)?,
        Command::Pk(_) => experiments::pk(settings)?,
        Command::Driftform(_) => experiments::driftform(settings)?,
        Command::Product16(_) => experiments::product16(settings)?,
        Command::Localization(_) => experiments::localization(settings)?,
        Command::Lastcollision(_) => experiments::lastcollision(settings)?,
        Command::Validate { quick, .. } => {
            let checks = validate::run_suite(*quick, settings.seed);
            let (table, summary) = validate::report(&checks, *quick, settings.seed);
            sink.emit(&table, &summary)?;
            return Ok(if checks.iter().all(|c| c.passed) { Outcome::Done } else { Outcome::ChecksFailed });
        }
    };
    let Output { table, summary } = output;
    sink.emit(&table, &summary)?;
    Ok(Outcome::Done)
}

fn dispatch(command: &Command) -> Result<Outcome> {
    let settings = Settings::resolve(command.name(), command.flags())?;
    match settings.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
            pool.install(|| execute(command, &settings))
        }
        None => execute(command, &settings),
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(Outcome::Done) => 0,
        Ok(Outcome::ChecksFailed) => 1,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}
