//! `relosc`: command-line front end. Every subcommand prints one JSON
//! `RunReport` on stdout. Exit status 0 means every requested check passed,
//! 1 a failed check or computation error, 2 a usage error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod io;

use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "relosc", version, about = "Relative oscillation theory for Sturm-Liouville operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: Global,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Local ODE tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Half-width of the ambiguity band around multiples of π, in units of π.
    #[arg(long = "eps-pi", global = true, default_value_t = 1e-7)]
    pub eps_pi: f64,
    /// Worker threads for trial runs (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// CSV side output, where the subcommand has one.
    #[arg(long = "trace-out", global = true)]
    pub trace_out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Flip counts #(ψ0, ψ1) with their truncation history.
    Count(CountArgs),
    /// Eigenvalues in (lambda0, lambda1) and counts below both ends.
    Eig(EigArgs),
    /// Band edges and critical coupling constants of a periodic operator.
    Bands(BandsArgs),
    /// Monodromy record and κ at one energy.
    Kappa(KappaArgs),
    /// Spectral shift ξ(λ) against the flip counts.
    Shift(PairArgs),
    /// Accumulation criteria.
    #[command(subcommand)]
    Classify(ClassifyCommand),
    /// Theorem checks, randomized or on given problems.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Prüfer trajectory dump of ψ±(λ).
    Trace(TraceArgs),
}

#[derive(Args, Debug)]
pub struct ScheduleArgs {
    /// Largest truncation for singular endpoints (schedule xmax/16 .. xmax, doubling).
    #[arg(long)]
    pub xmax: Option<f64>,
    /// Truncation schedule `geometric:x0,factor,steps`.
    #[arg(long)]
    pub schedule: Option<String>,
}

#[derive(Args, Debug)]
pub struct CountArgs {
    #[arg(long)]
    pub problem0: PathBuf,
    #[arg(long)]
    pub problem1: PathBuf,
    /// Spectral parameter for both operators (or use --lambda0/--lambda1).
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda1: Option<f64>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
}

#[derive(Args, Debug)]
pub struct EigArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda1: f64,
    /// Truncation point for a singular right endpoint (Dirichlet there).
    #[arg(long)]
    pub xmax: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BandsArgs {
    /// Coefficient descriptor (JSON).
    #[arg(long)]
    pub coeffs: PathBuf,
    #[arg(long)]
    pub period: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub lmin: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub lmax: f64,
    /// Discriminant samples for the initial scan.
    #[arg(long, default_value_t = 512)]
    pub scan_points: usize,
}

#[derive(Args, Debug)]
pub struct KappaArgs {
    #[arg(long)]
    pub coeffs: PathBuf,
    #[arg(long)]
    pub period: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: f64,
}

#[derive(Args, Debug)]
pub struct PairArgs {
    #[arg(long)]
    pub problem0: PathBuf,
    #[arg(long)]
    pub problem1: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: f64,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
}

#[derive(Subcommand, Debug)]
pub enum ClassifyCommand {
    /// −4x²q against 1 on a geometric grid.
    Kneser(KneserArgs),
    /// x²Δq/κ against 1 at a band edge of a periodic background.
    RofeBeketov(RofeBeketovArgs),
}

#[derive(Args, Debug)]
pub struct KneserArgs {
    /// Tail coefficients (JSON).
    #[arg(long)]
    pub coeffs: PathBuf,
    /// First grid point; the grid is x0·2^k, k = 0..=20.
    #[arg(long, default_value_t = 4.0)]
    pub x0: f64,
    /// Also report the flip-count history against the free operator.
    #[arg(long)]
    pub growth: bool,
}

#[derive(Args, Debug)]
pub struct RofeBeketovArgs {
    /// Periodic background (JSON).
    #[arg(long)]
    pub coeffs: PathBuf,
    /// Perturbation q1 − q0 (JSON).
    #[arg(long)]
    pub perturbation: PathBuf,
    #[arg(long)]
    pub period: f64,
    /// Approximate band edge; the nearest edge within ±0.5 is used.
    #[arg(long, allow_hyphen_values = true)]
    pub edge: f64,
    #[arg(long, default_value_t = 4.0)]
    pub x0: f64,
    /// Apply the log² test when the first-order statistic sits at 1.
    #[arg(long)]
    pub refined: bool,
    /// Also report the flip-count history at period multiples.
    #[arg(long)]
    pub growth: bool,
}

#[derive(Subcommand, Debug)]
pub enum VerifyCommand {
    /// Projection difference against flip counts on random regular pairs.
    Regular(TrialArgs),
    /// dim P(λ0, λ1) against #(ψ−(λ0), ψ+(λ1)) on random regular problems.
    Renormalized(TrialArgs),
    /// Half-line counts against the limit flip count.
    Halfline(PairArgs),
    /// ξ(λ) against the flip counts.
    Shift(PairArgs),
    /// Interpolation monotonicity on random ordered pairs.
    Monotone(TrialArgs),
}

#[derive(Args, Debug)]
pub struct TrialArgs {
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: f64,
    /// Which solution: minus (from a) or plus (from b).
    #[arg(long, value_enum, default_value_t = PsiArg::Minus)]
    pub psi: PsiArg,
    /// Right end of the dump for singular problems.
    #[arg(long)]
    pub xmax: Option<f64>,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
pub enum PsiArg {
    Minus,
    Plus,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli, &argv) {
        Ok(report) => {
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("relosc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
