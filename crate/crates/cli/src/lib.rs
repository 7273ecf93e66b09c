//! `qdfs` command-line frontend. Every command prints a canonical JSON report
//! on stdout and a short table on stderr, and exits 0 when all checks pass,
//! 1 when a check fails and 2 on bad input.

#![allow(clippy::result_large_err)]

mod commands;
mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use qdfs_core::matrixkit::C64;
use qdfs_core::netformat::{parse_network_with_tol, NetworkDescription};
use qdfs_core::synthesis::Place;
use qdfs_core::DEFAULT_TOL;

pub use commands::{
    cmd_analyze, cmd_check, cmd_reproduce_example1, cmd_reproduce_example2, cmd_simulate, cmd_synthesize, Example1Args,
    Example2Args, SimulateArgs, SynthesizeArgs, Tolerance, EXAMPLE2_REFERENCE_BOUNDARY,
};
pub use report::{RunReport, Verdict};

#[derive(Debug, Parser)]
#[command(name = "qdfs", version, about = "Decoherence-free subsystem synthesis for passive linear quantum networks")]
struct Cli {
    /// Relative tolerance (overrides QDFS_TOL).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PlaceArg {
    Hat,
    Check,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Realizability and unitarity checks.
    Check { file: PathBuf },
    /// Decoherence-free subsystem report for the plant, or the closed loop when gains are given.
    Analyze { file: PathBuf },
    /// Search controller gains creating decoherence-free modes.
    Synthesize {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        df_modes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
        #[arg(long, value_enum, default_value_t = PlaceArg::Check)]
        place: PlaceArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean (or covariance) trajectory as CSV.
    Simulate {
        file: PathBuf,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        t_final: f64,
        #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
        dt: f64,
        /// Comma-separated entries, each `re` or `re:im`.
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        #[arg(long)]
        covariance: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rerun a built-in worked example.
    Reproduce {
        #[command(subcommand)]
        example: Example,
    },
}

#[derive(Debug, Subcommand)]
enum Example {
    /// Single cavity with an observer-type controller.
    Example1 {
        #[arg(long, default_value_t = 1.0)]
        kappa1: f64,
        #[arg(long, default_value_t = 1.0)]
        kappa2: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        m: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
    },
    /// Two cavities sharing a decoupled mode with the controller.
    Example2 {
        /// `|γ4|² / |γ2|²`.
        #[arg(long, default_value_t = 8.0)]
        ratio: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        m1: f64,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        m2: f64,
        /// Bisect the LMI feasibility boundary in the ratio.
        #[arg(long)]
        sweep: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
    },
}

/// What a run printed and how it exited.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn from_report(r: &RunReport) -> Self {
        Self { code: r.exit_code(), stdout: r.render(), stderr: r.table() }
    }
}

fn parse_x0(text: &str) -> Result<Vec<C64>, String> {
    text.split(',')
        .map(|item| {
            let item = item.trim();
            let (re, im) = item.split_once(':').unwrap_or((item, "0"));
            let re: f64 = re.trim().parse().map_err(|_| format!("bad --x0 entry {item:?}"))?;
            let im: f64 = im.trim().parse().map_err(|_| format!("bad --x0 entry {item:?}"))?;
            Ok(C64::new(re, im))
        })
        .collect()
}

fn load(path: &PathBuf, tol: Tolerance, command: &str) -> Result<NetworkDescription, RunReport> {
    let bytes = std::fs::read(path)
        .map_err(|e| RunReport::input_error(command, format!("cannot read {}: {e}", path.display())))?;
    parse_network_with_tol(&bytes, tol.0.unwrap_or(DEFAULT_TOL))
        .map_err(|e| RunReport::input_error(command, format!("{}: {e}", path.display())))
}

fn tolerance(flag: Option<f64>, env: Option<OsString>) -> Result<Tolerance, String> {
    let t = match (flag, env) {
        (Some(t), _) => t,
        (None, Some(v)) => {
            let s = v.to_string_lossy().to_string();
            s.trim().parse::<f64>().map_err(|_| format!("QDFS_TOL is not a number: {s:?}"))?
        }
        (None, None) => return Ok(Tolerance(None)),
    };
    if !(t > 0.0 && t.is_finite()) {
        return Err(format!("tolerance must be positive, got {t}"));
    }
    Ok(Tolerance(Some(t)))
}

/// Runs one command line; `env_tol` is the value of `QDFS_TOL`, if set.
pub fn run<I, T>(args: I, env_tol: Option<OsString>) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let tol = match tolerance(cli.tol, env_tol) {
        Ok(t) => t,
        Err(e) => return Outcome::from_report(&RunReport::input_error("qdfs", e)),
    };
    let report = match cli.command {
        Command::Check { file } => load(&file, tol, "check").map(|d| cmd_check(&d, tol)),
        Command::Analyze { file } => load(&file, tol, "analyze").map(|d| cmd_analyze(&d, tol)),
        Command::Synthesize { file, df_modes, seed, max_iters, place, out } => {
            load(&file, tol, "synthesize").map(|d| {
                let place = match place {
                    PlaceArg::Hat => Place::Hat,
                    PlaceArg::Check => Place::Check,
                };
                cmd_synthesize(&d, &SynthesizeArgs { df_modes, seed, max_iters, place, out }, tol)
            })
        }
        Command::Simulate { file, t_final, dt, x0, covariance, out } => {
            let x0 = match x0.as_deref().map(parse_x0).transpose() {
                Ok(x) => x,
                Err(e) => return Outcome::from_report(&RunReport::input_error("simulate", e)),
            };
            load(&file, tol, "simulate").map(|d| cmd_simulate(&d, &SimulateArgs { t_final, dt, x0, covariance, out }))
        }
        Command::Reproduce { example } => Ok(match example {
            Example::Example1 { kappa1, kappa2, m, seed, max_iters } => {
                cmd_reproduce_example1(&Example1Args { kappa1, kappa2, m, seed, max_iters }, tol)
            }
            Example::Example2 { ratio, m1, m2, sweep, seed, max_iters } => {
                cmd_reproduce_example2(&Example2Args { ratio, m1, m2, sweep, seed, max_iters }, tol)
            }
        }),
    };
    let report = report.unwrap_or_else(|r| r);
    Outcome::from_report(&report)
}
