//! Weighted sign flips of Wronskians, counted through Prüfer angle differences.

use crate::angle::Angle;
use crate::error::{Error, Result};
use crate::problem::{SLProblem, TruncationSchedule};
use crate::prufer::{psi_minus, psi_plus_checked, PruferTrajectory};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

pub const DEFAULT_EPS_PI: f64 = 1e-7;

/// `Δ(x) = θ_second(x) − θ_first(x)`, exact in the winding.
pub fn delta(first: &PruferTrajectory, second: &PruferTrajectory, x: f64) -> Result<Angle> {
    Ok(second.theta_at(x)? - first.theta_at(x)?)
}

pub fn delta_angle(first: &PruferTrajectory, second: &PruferTrajectory, x: f64) -> Result<f64> {
    delta(first, second, x).map(|a| a.to_radians())
}

/// `W = −ρ_first ρ_second sin Δ`.
///
/// If the amplitude overflows, the error carries the clamped value, whose
/// sign is still exact.
pub fn wronskian_value(first: &PruferTrajectory, second: &PruferTrajectory, x: f64) -> Result<f64> {
    let d = delta(first, second, x)?;
    let s = -d.residual().sin() * if d.winding().rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let lr = first.log_rho_at(x)? + second.log_rho_at(x)?;
    let w = s * lr.exp();
    if !w.is_finite() || (lr > 700.0) {
        return Err(Error::AmplitudeOverflow { clamped: s.signum() * f64::MAX });
    }
    Ok(w)
}

/// `⌈Δ(d)/π⌉ − ⌊Δ(c)/π⌋ − 1`.
pub fn count_from_deltas(delta_c: Angle, delta_d: Angle) -> i64 {
    delta_d.ceil_pi() - delta_c.floor_pi() - 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointFlag {
    Clear,
    NearMultipleOfPi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipCount {
    pub count_on_interval: i64,
    pub interval: (f64, f64),
    pub delta_at_c: f64,
    pub delta_at_d: f64,
    pub endpoint_flags: [EndpointFlag; 2],
    /// Smallest and largest count over the admissible roundings of flagged endpoints.
    pub ambiguity: Option<(i64, i64)>,
}

impl FlipCount {
    pub fn flagged(&self) -> bool {
        self.endpoint_flags.contains(&EndpointFlag::NearMultipleOfPi)
    }
}

/// Rounding alternatives of an angle sitting within `eps` of a multiple of π.
fn ceil_candidates(a: Angle, eps: f64) -> Vec<i64> {
    let c = a.ceil_pi();
    let r = a.residual();
    if r == 0.0 {
        vec![c, c + 1]
    } else if r < eps {
        vec![c - 1, c]
    } else if PI - r < eps {
        vec![c, c + 1]
    } else {
        vec![c]
    }
}

fn floor_candidates(a: Angle, eps: f64) -> Vec<i64> {
    let f = a.floor_pi();
    let r = a.residual();
    if r < eps {
        vec![f - 1, f]
    } else if PI - r < eps {
        vec![f, f + 1]
    } else {
        vec![f]
    }
}

/// Flip count from two precomputed Δ values.
pub fn flip_count_from_deltas(delta_c: Angle, delta_d: Angle, c: f64, d: f64, eps_pi: f64) -> FlipCount {
    let flag = |a: Angle| {
        if a.dist_to_pi_multiple() < eps_pi {
            EndpointFlag::NearMultipleOfPi
        } else {
            EndpointFlag::Clear
        }
    };
    let flags = [flag(delta_c), flag(delta_d)];
    let count = count_from_deltas(delta_c, delta_d);
    let ambiguity = if flags.contains(&EndpointFlag::NearMultipleOfPi) {
        let cs = ceil_candidates(delta_d, eps_pi);
        let fs = floor_candidates(delta_c, eps_pi);
        let all: Vec<i64> = cs.iter().flat_map(|x| fs.iter().map(move |y| x - y - 1)).collect();
        Some((*all.iter().min().unwrap(), *all.iter().max().unwrap()))
    } else {
        None
    };
    FlipCount {
        count_on_interval: count,
        interval: (c, d),
        delta_at_c: delta_c.to_radians(),
        delta_at_d: delta_d.to_radians(),
        endpoint_flags: flags,
        ambiguity,
    }
}

/// Weighted number of sign flips of `W(first, second)` in `(c, d)`.
pub fn flip_count(
    first: &PruferTrajectory,
    second: &PruferTrajectory,
    c: f64,
    d: f64,
    eps_pi: f64,
) -> Result<FlipCount> {
    if !(c < d) {
        return Err(Error::Precondition(format!("flip count needs c < d, got ({c}, {d})")));
    }
    Ok(flip_count_from_deltas(delta(first, second, c)?, delta(first, second, d)?, c, d, eps_pi))
}

/// Which canonical solution of which equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Psi {
    Minus,
    Plus,
}

/// A canonical solution `ψ_{±}(λ)` of `problem`.
#[derive(Debug, Clone, Copy)]
pub struct SolutionSpec<'a> {
    pub problem: &'a SLProblem,
    pub lambda: f64,
    pub kind: Psi,
}

impl<'a> SolutionSpec<'a> {
    pub fn new(problem: &'a SLProblem, lambda: f64, kind: Psi) -> Self {
        SolutionSpec { problem, lambda, kind }
    }

    /// Trajectory covering `[x_lo, x_hi]`.
    ///
    /// For ψ₊ at a singular endpoint the start is `2·x_hi`, with its own
    /// doubling check recorded in `converged`.
    pub fn trajectory(&self, x_lo: f64, x_hi: f64, tol: f64) -> Result<PruferTrajectory> {
        match self.kind {
            Psi::Minus => psi_minus(self.problem, self.lambda, x_hi, tol),
            Psi::Plus => {
                let x_max = if self.problem.beta().is_some() { self.problem.b() } else { 2.0 * x_hi };
                psi_plus_checked(self.problem, self.lambda, x_lo, x_max, tol)
            }
        }
    }
}

/// `±∞` markers for liminf/limsup of divergent histories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtendedInt {
    NegInfinity,
    Finite(i64),
    PosInfinity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub c: f64,
    pub d: f64,
    pub count: i64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitFlipCount {
    pub underline: ExtendedInt,
    pub overline: ExtendedInt,
    pub stabilized: bool,
    pub history: Vec<HistoryEntry>,
    /// Whether every singular-endpoint ψ₊ passed its doubling check.
    pub psi_converged: bool,
}

impl LimitFlipCount {
    pub fn last(&self) -> i64 {
        self.history.last().map(|h| h.count).unwrap_or(0)
    }

    /// The stabilized value, if any.
    pub fn value(&self) -> Option<i64> {
        if self.stabilized {
            Some(self.last())
        } else {
            None
        }
    }

    /// CSV with columns `c, d, count, flagged`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Precondition(format!("csv output failed: {e}"));
        wr.write_record(["c", "d", "count", "flagged"]).map_err(io)?;
        for h in &self.history {
            wr.write_record(&[h.c.to_string(), h.d.to_string(), h.count.to_string(), h.flagged.to_string()])
                .map_err(io)?;
        }
        wr.flush().map_err(|e| Error::Precondition(format!("csv output failed: {e}")))?;
        Ok(())
    }
}

/// Number of trailing steps in which `f(count)` set a strict new record.
fn recent_records(counts: &[i64], f: impl Fn(i64) -> i64, span: usize) -> (usize, bool) {
    let mut best = i64::MIN;
    let mut records = Vec::with_capacity(counts.len());
    for &c in counts {
        let v = f(c);
        records.push(v > best);
        best = best.max(v);
    }
    let start = counts.len().saturating_sub(span);
    // the first entry is trivially a record; only count genuine ones
    let n = records[start.max(1)..].iter().filter(|r| **r).count();
    (n, *records.last().unwrap_or(&false) && counts.len() > 1)
}

/// Summarizes a count history over a truncation schedule with window `k`.
pub fn summarize_history(history: Vec<HistoryEntry>, k: usize, psi_converged: bool) -> LimitFlipCount {
    let counts: Vec<i64> = history.iter().map(|h| h.count).collect();
    let tail = &history[history.len().saturating_sub(k)..];
    let tail_counts: Vec<i64> = tail.iter().map(|h| h.count).collect();
    let equal = tail.len() == k && tail_counts.windows(2).all(|w| w[0] == w[1]);
    let stabilized = equal && tail.iter().all(|h| !h.flagged) && psi_converged;
    let (up, up_last) = recent_records(&counts, |c| c, 6);
    let (down, down_last) = recent_records(&counts, |c| -c, 6);
    let lo = *tail_counts.iter().min().unwrap_or(&0);
    let hi = *tail_counts.iter().max().unwrap_or(&0);
    let overline = if !equal && up >= 3 && (up_last || down >= 3) {
        ExtendedInt::PosInfinity
    } else {
        ExtendedInt::Finite(hi)
    };
    let underline = if !equal && down >= 3 && (down_last || up >= 3) {
        ExtendedInt::NegInfinity
    } else {
        ExtendedInt::Finite(lo)
    };
    LimitFlipCount { underline, overline, stabilized, history, psi_converged }
}

/// Flip-count history of `#(first, second)` over the truncations `(c_n, d_n)`.
pub fn limit_flip_count_pair(
    first: SolutionSpec<'_>,
    second: SolutionSpec<'_>,
    schedule: &TruncationSchedule,
    eps_pi: f64,
    tol: f64,
) -> Result<LimitFlipCount> {
    let x_lo = schedule.x_min_sequence.iter().copied().fold(f64::INFINITY, f64::min);
    let x_hi = schedule.x_max_sequence.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let t0 = first.trajectory(x_lo, x_hi, tol)?;
    let t1 = second.trajectory(x_lo, x_hi, tol)?;
    let psi_converged = t0.converged.unwrap_or(true) && t1.converged.unwrap_or(true);
    let mut history = Vec::with_capacity(schedule.len());
    for (c, d) in schedule.steps() {
        let fc = flip_count(&t0, &t1, c, d, eps_pi)?;
        history.push(HistoryEntry { c, d, count: fc.count_on_interval, flagged: fc.flagged() });
    }
    Ok(summarize_history(history, schedule.stabilization_window, psi_converged))
}

/// `#(ψ_{0,+}(λ0), ψ_{1,−}(λ1))` over the schedule.
pub fn limit_flip_count(
    problem0: &SLProblem,
    problem1: &SLProblem,
    lambda0: f64,
    lambda1: f64,
    schedule: &TruncationSchedule,
    eps_pi: f64,
    tol: f64,
) -> Result<LimitFlipCount> {
    limit_flip_count_pair(
        SolutionSpec::new(problem0, lambda0, Psi::Plus),
        SolutionSpec::new(problem1, lambda1, Psi::Minus),
        schedule,
        eps_pi,
        tol,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelativeOscillation {
    RelativelyNonoscillatory,
    RelativelyOscillatory,
    UndeterminedAtScale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub verdict: RelativeOscillation,
    pub x_max_reached: f64,
    pub limit: LimitFlipCount,
}

/// Classifies a history: constant tail ⇒ nonoscillatory, new records
/// (upward, downward or both) continuing up to the last step ⇒ oscillatory.
pub fn classify_history(limit: &LimitFlipCount, k: usize) -> RelativeOscillation {
    let counts: Vec<i64> = limit.history.iter().map(|h| h.count).collect();
    if counts.len() >= k && counts[counts.len() - k..].windows(2).all(|w| w[0] == w[1]) {
        return RelativeOscillation::RelativelyNonoscillatory;
    }
    let (up, up_last) = recent_records(&counts, |c| c, 6);
    let (down, down_last) = recent_records(&counts, |c| -c, 6);
    let growing = (up >= 3 && up_last) || (down >= 3 && down_last);
    let swinging = up >= 2 && down >= 2 && (up_last || down_last);
    if growing || swinging {
        RelativeOscillation::RelativelyOscillatory
    } else {
        RelativeOscillation::UndeterminedAtScale
    }
}

/// Relative oscillation of `τ1 − λ` with respect to `τ0 − λ`, judged from
/// `#(ψ_{0,−}(λ), ψ_{1,−}(λ))` along the schedule. Both ψ₋ are used so that
/// λ may sit inside the essential spectrum.
pub fn classify_relative_oscillation(
    problem0: &SLProblem,
    problem1: &SLProblem,
    lambda: f64,
    schedule: &TruncationSchedule,
    tol: f64,
) -> Result<OscillationReport> {
    let limit = limit_flip_count_pair(
        SolutionSpec::new(problem0, lambda, Psi::Minus),
        SolutionSpec::new(problem1, lambda, Psi::Minus),
        schedule,
        DEFAULT_EPS_PI,
        tol,
    )?;
    let verdict = classify_history(&limit, schedule.stabilization_window);
    let x_max_reached = schedule.x_max_sequence.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(OscillationReport { verdict, x_max_reached, limit })
}
