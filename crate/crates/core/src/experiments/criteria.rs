use crate::coefficients::Coefficients;
use crate::error::{Error, Result};
use crate::floquet::{BandEdge, Kappa};
use crate::problem::{SLProblem, TruncationSchedule};
use crate::stroboscopic::{propagate, StrobeCell};
use crate::wronskian::{classify_relative_oscillation, RelativeOscillation};
use serde::{Deserialize, Serialize};

/// Distance from the threshold 1 below which verdicts are inconclusive.
pub const CRITERION_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Kneser,
    RofeBeketov,
    RofeBeketovRefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accumulation,
    NoAccumulation,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionVerdict {
    pub criterion: Criterion,
    pub liminf_estimate: f64,
    pub limsup_estimate: f64,
    pub x_grid: Vec<f64>,
    pub verdict: Verdict,
    pub margin: f64,
    /// Rofe–Beketov: whether `κ·Δq ≥ 0` held on the sampled tail.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign_condition: Option<bool>,
    /// The no-accumulation branch was blocked by a sign change of `κ·Δq`.
    #[serde(default)]
    pub missing_sign_condition: bool,
    /// Refined mode: the first-order estimates that triggered it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_order: Option<(f64, f64)>,
}

/// `x0·2^k`, `k = 0..=k_max`.
pub fn geometric_grid(x0: f64, k_max: u32) -> Vec<f64> {
    (0..=k_max).map(|k| x0 * 2f64.powi(k as i32)).collect()
}

/// Min and max of `stat` over the upper half of the grid.
fn tail_extremes(x_grid: &[f64], stat: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    if x_grid.len() < 2 {
        return Err(Error::Precondition("the x grid needs at least two points".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in &x_grid[x_grid.len() / 2..] {
        let s = stat(x)?;
        lo = lo.min(s);
        hi = hi.max(s);
    }
    Ok((lo, hi))
}

fn threshold_verdict(liminf: f64, limsup: f64) -> Verdict {
    if liminf > 1.0 + CRITERION_MARGIN {
        Verdict::Accumulation
    } else if limsup < 1.0 - CRITERION_MARGIN {
        Verdict::NoAccumulation
    } else {
        Verdict::Inconclusive
    }
}

/// Kneser: accumulation below 0 iff `liminf −4x²q > 1`, none iff `limsup < 1`.
pub fn kneser_classify(coeffs: &Coefficients, x_grid: &[f64]) -> Result<CriterionVerdict> {
    let (lo, hi) = tail_extremes(x_grid, |x| Ok(-4.0 * x * x * coeffs.eval(x)?.q))?;
    Ok(CriterionVerdict {
        criterion: Criterion::Kneser,
        liminf_estimate: lo,
        limsup_estimate: hi,
        x_grid: x_grid.to_vec(),
        verdict: threshold_verdict(lo, hi),
        margin: CRITERION_MARGIN,
        sign_condition: None,
        missing_sign_condition: false,
        first_order: None,
    })
}

/// Rofe–Beketov at a band edge with critical coupling `κ`: the statistic is
/// `x²Δq/κ`, refined to `ln²x·(x²Δq/κ − 1)` when the first-order one sits
/// at 1 and `refined` is set.
pub fn rofe_beketov_classify(
    background: &Coefficients,
    perturbation: &Coefficients,
    edge: &BandEdge,
    x_grid: &[f64],
    refined: bool,
) -> Result<CriterionVerdict> {
    background.validate()?;
    let kappa = match edge.kappa {
        Kappa::Finite(k) => k,
        Kappa::Infinite => return Err(Error::CollapsedGap { energy: edge.e, d_prime: edge.d_prime }),
    };
    let dq = |x: f64| -> Result<f64> { Ok(perturbation.eval(x)?.q) };
    let first = |x: f64| -> Result<f64> { Ok(x * x * dq(x)? / kappa) };
    let (lo1, hi1) = tail_extremes(x_grid, first)?;

    let tail_start = x_grid[x_grid.len() / 2];
    let tail_end = *x_grid.last().unwrap();
    let mut sign_ok = true;
    let n = 257;
    for i in 0..n {
        let x = tail_start * (tail_end / tail_start).powf(i as f64 / (n - 1) as f64);
        sign_ok &= kappa * dq(x)? >= 0.0;
    }

    let at_threshold = (lo1 - 1.0).abs() <= CRITERION_MARGIN && (hi1 - 1.0).abs() <= CRITERION_MARGIN;
    let (criterion, lo, hi, first_order) = if refined && at_threshold {
        let second = |x: f64| -> Result<f64> {
            let l = x.ln();
            Ok(l * l * (first(x)? - 1.0))
        };
        let (lo2, hi2) = tail_extremes(x_grid, second)?;
        (Criterion::RofeBeketovRefined, lo2, hi2, Some((lo1, hi1)))
    } else {
        (Criterion::RofeBeketov, lo1, hi1, None)
    };
    let mut verdict = threshold_verdict(lo, hi);
    let mut missing = false;
    if verdict == Verdict::NoAccumulation && !sign_ok {
        verdict = Verdict::Inconclusive;
        missing = true;
    }
    Ok(CriterionVerdict {
        criterion,
        liminf_estimate: lo,
        limsup_estimate: hi,
        x_grid: x_grid.to_vec(),
        verdict,
        margin: CRITERION_MARGIN,
        sign_condition: Some(sign_ok),
        missing_sign_condition: missing,
        first_order,
    })
}

/// A relative flip-count history along growing intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthHistory {
    pub x: Vec<f64>,
    pub counts: Vec<i64>,
    pub flagged: Vec<bool>,
    /// Schedule steps at which the count set a new record (in its
    /// dominant direction), not counting the first entry.
    pub growth_steps: usize,
}

/// New records after the first entry, in whichever direction has more.
pub fn growth_steps(counts: &[i64]) -> usize {
    let run = |sign: i64| {
        let mut best = match counts.first() {
            Some(c) => sign * c,
            None => return 0,
        };
        let mut n = 0;
        for &c in &counts[1..] {
            if sign * c > best {
                best = sign * c;
                n += 1;
            }
        }
        n
    };
    run(1).max(run(-1))
}

impl GrowthHistory {
    fn new(x: Vec<f64>, counts: Vec<i64>, flagged: Vec<bool>) -> Self {
        let growth_steps = growth_steps(&counts);
        GrowthHistory { x, counts, flagged, growth_steps }
    }
}

/// Kneser growth: `#(ψ_{0,−}(0), ψ_{1,−}(0))` for the free operator against
/// `q1 = coeffs` on `(x0, ∞)` along `schedule`, by direct integration.
pub fn kneser_growth(coeffs: &Coefficients, schedule: &TruncationSchedule, tol: f64) -> Result<GrowthHistory> {
    let x0 = coeffs.domain_start();
    let p0 = SLProblem::half_line(Coefficients::free(), x0, 0.0)?.with_truncation(schedule.clone())?;
    let p1 = p0.with_coefficients(coeffs.clone())?;
    let rep = classify_relative_oscillation(&p0, &p1, 0.0, schedule, tol)?;
    let h = &rep.limit.history;
    // the first entry is the degenerate #(u, u) = −1 only when c = d; keep it as the baseline
    Ok(GrowthHistory::new(
        h.iter().map(|e| e.d).collect(),
        h.iter().map(|e| e.count).collect(),
        h.iter().map(|e| e.flagged).collect(),
    ))
}

/// Verdict implied by a growth history.
pub fn growth_verdict(h: &GrowthHistory, needed: usize) -> RelativeOscillation {
    if h.growth_steps >= needed {
        RelativeOscillation::RelativelyOscillatory
    } else if h.counts.len() >= 3 && h.counts[h.counts.len() - 3..].windows(2).all(|w| w[0] == w[1]) {
        RelativeOscillation::RelativelyNonoscillatory
    } else {
        RelativeOscillation::UndeterminedAtScale
    }
}

/// Options for [`edge_growth`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrobeOptions {
    /// First period index; both solutions start there with `θ = 0`.
    pub first_period: u64,
    /// Stops at `first_period · 2^k`, `k = 1..=doublings`.
    pub doublings: u32,
    /// Block length as a fraction of the period index.
    pub block_fraction: f64,
    pub eps_pi: f64,
}

impl Default for StrobeOptions {
    fn default() -> Self {
        StrobeOptions { first_period: 8, doublings: 40, block_fraction: 0.01, eps_pi: 1e-7 }
    }
}

/// Relative count between the periodic background at the band edge and the
/// background plus `perturbation`, sampled at period multiples.
pub fn edge_growth(
    background: &Coefficients,
    period: f64,
    edge: &BandEdge,
    perturbation: &Coefficients,
    opts: &StrobeOptions,
) -> Result<GrowthHistory> {
    let cell = StrobeCell::from_coefficients(background, period)?;
    let e = cell.refine_edge(edge.e, edge.d.signum())?;
    let stops: Vec<u64> = (0..=opts.doublings).map(|k| opts.first_period << k).collect();
    let hist = propagate(&cell, e, 0.0, opts.first_period, &stops, opts.block_fraction, |x| {
        Ok(perturbation.eval(x)?.q)
    })?;
    let (counts, flagged): (Vec<i64>, Vec<bool>) = hist.counts(opts.eps_pi).into_iter().unzip();
    Ok(GrowthHistory::new(hist.x, counts, flagged))
}
