//! Closed catalog of coefficient families `(p, q, r)`.
//!
//! Every family is a plain serializable descriptor, so problems can be written
//! to JSON and replayed bit-for-bit. Piecewise families are right-continuous at
//! their breakpoints; the integrators ask for one-sided limits explicitly via
//! [`Side`] so that a step ending on a breakpoint sees the cell it came from.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Which one-sided limit to take at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Pointwise coefficient values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Coefficients {
    Constant {
        p: f64,
        q: f64,
        r: f64,
    },
    /// `breakpoints` are interior cut points; `p`, `q`, `r` hold one value per
    /// cell, so each has `breakpoints.len() + 1` entries.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        p: Vec<f64>,
        q: Vec<f64>,
        r: Vec<f64>,
    },
    /// `q(x) = constant + Σ cosine[k-1]·cos(2πkx/period) + sine[k-1]·sin(2πkx/period)`, `p = r = 1`.
    TrigPolynomial {
        period: f64,
        #[serde(default)]
        constant: f64,
        #[serde(default)]
        cosine: Vec<f64>,
        #[serde(default)]
        sine: Vec<f64>,
    },
    /// `q(x) = c/x²` on `x ≥ x0 > 0`, `p = r = 1`.
    EulerTail {
        c: f64,
        x0: f64,
    },
    /// `q(x) = c1/x² + c2/(x² ln²x)` on `x ≥ x0 > 1`, `p = r = 1`.
    LogRefinedTail {
        c1: f64,
        c2: f64,
        x0: f64,
    },
    /// Members share `p` and `r`; potentials add.
    Sum {
        members: Vec<Coefficients>,
    },
    /// `base` plus `amplitude` on `[c, d)`.
    WellPerturbation {
        base: Box<Coefficients>,
        amplitude: f64,
        c: f64,
        d: f64,
    },
    /// Periodic extension of `cell`, which is sampled on `[0, period)`.
    Periodic {
        period: f64,
        cell: Box<Coefficients>,
    },
    /// `q = (1-ε)·q_start + ε·q_end` with the shared `p`, `r` of both ends.
    Interpolated {
        start: Box<Coefficients>,
        end: Box<Coefficients>,
        epsilon: f64,
    },
}

/// Cell index and offset of `x`, consistent with the rounded cell origins `k·period`.
fn periodic_locate(x: f64, period: f64) -> (f64, f64) {
    let mut k = (x / period).floor();
    if (k + 1.0) * period <= x {
        k += 1.0;
    } else if k * period > x {
        k -= 1.0;
    }
    let t = (x - k * period).clamp(0.0, period);
    (k, if t >= period { 0.0 } else { t })
}

/// Almost-everywhere sign of `q0 - q1` on a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifferenceSign {
    Negative,
    Zero,
    Positive,
    Mixed,
}

impl Coefficients {
    pub fn free() -> Self {
        Coefficients::Constant { p: 1.0, q: 0.0, r: 1.0 }
    }

    pub fn constant_potential(q: f64) -> Self {
        Coefficients::Constant { p: 1.0, q, r: 1.0 }
    }

    /// Piecewise-constant potential with `p = r = 1`.
    pub fn piecewise_potential(breakpoints: Vec<f64>, q: Vec<f64>) -> Self {
        let n = q.len();
        Coefficients::PiecewiseConstant { breakpoints, p: vec![1.0; n], q, r: vec![1.0; n] }
    }

    /// Adds `amplitude` to the potential on `[c, d)`.
    pub fn with_well(self, amplitude: f64, c: f64, d: f64) -> Self {
        Coefficients::WellPerturbation { base: Box::new(self), amplitude, c, d }
    }

    pub fn interpolate(start: &Coefficients, end: &Coefficients, epsilon: f64) -> Self {
        Coefficients::Interpolated {
            start: Box::new(start.clone()),
            end: Box::new(end.clone()),
            epsilon,
        }
    }

    /// Structural checks that do not need an evaluation point.
    pub fn validate(&self) -> Result<()> {
        use Coefficients::*;
        let bad = |msg: String| Err(Error::InvalidDescriptor(msg));
        match self {
            Constant { p, q, r } => {
                if !(p.is_finite() && q.is_finite() && r.is_finite()) {
                    return bad("constant coefficients must be finite".into());
                }
                if *p <= 0.0 || *r <= 0.0 {
                    return bad(format!("constant family needs p, r > 0 (p = {p}, r = {r})"));
                }
            }
            PiecewiseConstant { breakpoints, p, q, r } => {
                let cells = breakpoints.len() + 1;
                if p.len() != cells || q.len() != cells || r.len() != cells {
                    return bad(format!(
                        "piecewise family with {} breakpoints needs {cells} values per coefficient",
                        breakpoints.len()
                    ));
                }
                if breakpoints.iter().any(|b| !b.is_finite())
                    || breakpoints.windows(2).any(|w| w[0] >= w[1])
                {
                    return bad("breakpoints must be finite and strictly increasing".into());
                }
                if p.iter().chain(q).chain(r).any(|v| !v.is_finite()) {
                    return bad("cell values must be finite".into());
                }
                if p.iter().chain(r).any(|v| *v <= 0.0) {
                    return bad("piecewise p and r must be positive".into());
                }
            }
            TrigPolynomial { period, constant, cosine, sine } => {
                if !(period.is_finite() && *period > 0.0) {
                    return bad(format!("trig period must be positive, got {period}"));
                }
                if !constant.is_finite() || cosine.iter().chain(sine).any(|v| !v.is_finite()) {
                    return bad("trig coefficients must be finite".into());
                }
            }
            EulerTail { c, x0 } => {
                if !c.is_finite() || !(x0.is_finite() && *x0 > 0.0) {
                    return bad(format!("Euler tail needs finite c and x0 > 0 (x0 = {x0})"));
                }
            }
            LogRefinedTail { c1, c2, x0 } => {
                if !c1.is_finite() || !c2.is_finite() || !(x0.is_finite() && *x0 > 1.0) {
                    return bad(format!("log-refined tail needs x0 > 1 (x0 = {x0})"));
                }
            }
            Sum { members } => {
                if members.is_empty() {
                    return bad("sum needs at least one member".into());
                }
                for m in members {
                    m.validate()?;
                }
            }
            WellPerturbation { base, amplitude, c, d } => {
                base.validate()?;
                if !amplitude.is_finite() || !(c.is_finite() && d.is_finite() && c < d) {
                    return bad(format!("well needs finite amplitude and c < d (c = {c}, d = {d})"));
                }
            }
            Periodic { period, cell } => {
                if !(period.is_finite() && *period > 0.0) {
                    return bad(format!("period must be positive, got {period}"));
                }
                cell.validate()?;
                if cell.domain_start() > 0.0 {
                    return bad("periodic cell must be defined on [0, period)".into());
                }
            }
            Interpolated { start, end, epsilon } => {
                start.validate()?;
                end.validate()?;
                if !(0.0..=1.0).contains(epsilon) {
                    return bad(format!("epsilon must lie in [0, 1], got {epsilon}"));
                }
            }
        }
        Ok(())
    }

    /// Smallest abscissa at which the family may be evaluated.
    pub fn domain_start(&self) -> f64 {
        use Coefficients::*;
        match self {
            EulerTail { x0, .. } | LogRefinedTail { x0, .. } => *x0,
            Sum { members } => members.iter().map(|m| m.domain_start()).fold(f64::NEG_INFINITY, f64::max),
            WellPerturbation { base, .. } => base.domain_start(),
            Interpolated { start, end, .. } => start.domain_start().max(end.domain_start()),
            Constant { .. } | PiecewiseConstant { .. } | TrigPolynomial { .. } | Periodic { .. } => {
                f64::NEG_INFINITY
            }
        }
    }

    /// Right-continuous pointwise evaluation.
    pub fn eval(&self, x: f64) -> Result<Point> {
        self.eval_side(x, Side::Right)
    }

    /// One-sided evaluation; away from breakpoints both sides agree.
    pub fn eval_side(&self, x: f64, side: Side) -> Result<Point> {
        let pt = self.eval_raw(x, side)?;
        if !(pt.p > 0.0) {
            return Err(Error::NonPositiveCoefficient { which: "p", x, value: pt.p });
        }
        if !(pt.r > 0.0) {
            return Err(Error::NonPositiveCoefficient { which: "r", x, value: pt.r });
        }
        Ok(pt)
    }

    fn eval_raw(&self, x: f64, side: Side) -> Result<Point> {
        use Coefficients::*;
        match self {
            Constant { p, q, r } => Ok(Point { p: *p, q: *q, r: *r }),
            PiecewiseConstant { breakpoints, p, q, r } => {
                let i = cell_index(breakpoints, x, side);
                Ok(Point { p: p[i], q: q[i], r: r[i] })
            }
            TrigPolynomial { period, constant, cosine, sine } => {
                let w = 2.0 * PI * x / period;
                let mut q = *constant;
                for (k, a) in cosine.iter().enumerate() {
                    q += a * ((k + 1) as f64 * w).cos();
                }
                for (k, b) in sine.iter().enumerate() {
                    q += b * ((k + 1) as f64 * w).sin();
                }
                Ok(Point { p: 1.0, q, r: 1.0 })
            }
            EulerTail { c, x0 } => {
                if x < *x0 {
                    return Err(Error::OutOfDomain { x, lower: *x0 });
                }
                Ok(Point { p: 1.0, q: c / (x * x), r: 1.0 })
            }
            LogRefinedTail { c1, c2, x0 } => {
                if x < *x0 {
                    return Err(Error::OutOfDomain { x, lower: *x0 });
                }
                let l = x.ln();
                Ok(Point { p: 1.0, q: c1 / (x * x) + c2 / (x * x * l * l), r: 1.0 })
            }
            Sum { members } => {
                let first = members[0].eval_raw(x, side)?;
                let mut q = first.q;
                for m in &members[1..] {
                    let pt = m.eval_raw(x, side)?;
                    if pt.p != first.p || pt.r != first.r {
                        return Err(Error::InvalidDescriptor(format!(
                            "sum members disagree on p or r at x = {x}"
                        )));
                    }
                    q += pt.q;
                }
                Ok(Point { p: first.p, q, r: first.r })
            }
            WellPerturbation { base, amplitude, c, d } => {
                let mut pt = base.eval_raw(x, side)?;
                let inside = match side {
                    Side::Right => *c <= x && x < *d,
                    Side::Left => *c < x && x <= *d,
                };
                if inside {
                    pt.q += amplitude;
                }
                Ok(pt)
            }
            Periodic { period, cell } => {
                let (k, t) = periodic_locate(x, *period);
                let origin = k * period;
                if side == Side::Left && t == 0.0 {
                    return cell.eval_raw(*period, side);
                }
                // the piece is decided by the rounded absolute breakpoints
                if let Some(b) = cell.next_breakpoint(t, true).filter(|b| *b > t && *b < *period) {
                    if origin + b < x || (origin + b == x && side == Side::Right) {
                        return cell.eval_raw(b, Side::Right);
                    }
                }
                if let Some(b) = cell.next_breakpoint(t, false).filter(|b| *b > 0.0 && *b < t) {
                    if origin + b > x || (origin + b == x && side == Side::Left) {
                        return cell.eval_raw(b, Side::Left);
                    }
                }
                cell.eval_raw(t, side)
            }
            Interpolated { start, end, epsilon } => {
                let a = start.eval_raw(x, side)?;
                let b = end.eval_raw(x, side)?;
                if a.p != b.p || a.r != b.r {
                    return Err(Error::InvalidDescriptor(format!(
                        "interpolation ends disagree on p or r at x = {x}"
                    )));
                }
                Ok(Point { p: a.p, q: (1.0 - epsilon) * a.q + epsilon * b.q, r: a.r })
            }
        }
    }

    /// Nearest breakpoint strictly beyond `x` in the direction of `forward`.
    pub fn next_breakpoint(&self, x: f64, forward: bool) -> Option<f64> {
        use Coefficients::*;
        let pick = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(u), Some(v)) => Some(if forward { u.min(v) } else { u.max(v) }),
            (u, None) => u,
            (None, v) => v,
        };
        match self {
            Constant { .. } | TrigPolynomial { .. } | EulerTail { .. } | LogRefinedTail { .. } => None,
            PiecewiseConstant { breakpoints, .. } => {
                if forward {
                    let i = breakpoints.partition_point(|b| *b <= x);
                    breakpoints.get(i).copied()
                } else {
                    let i = breakpoints.partition_point(|b| *b < x);
                    if i == 0 {
                        None
                    } else {
                        Some(breakpoints[i - 1])
                    }
                }
            }
            Sum { members } => members.iter().fold(None, |acc, m| pick(acc, m.next_breakpoint(x, forward))),
            WellPerturbation { base, c, d, .. } => {
                let own = if forward {
                    [*c, *d].into_iter().find(|v| *v > x)
                } else {
                    [*d, *c].into_iter().find(|v| *v < x)
                };
                pick(own, base.next_breakpoint(x, forward))
            }
            Periodic { period, cell } => {
                let (k, t) = periodic_locate(x, *period);
                let origin = k * period;
                if forward {
                    let inner = cell.next_breakpoint(t, true).filter(|b| *b < *period && *b > 0.0);
                    match inner.map(|b| origin + b) {
                        Some(c) if c > x => Some(c),
                        _ => {
                            let end = (k + 1.0) * period;
                            match cell.next_breakpoint(0.0, true).filter(|b| *b < *period && *b > 0.0) {
                                Some(b) if end <= x => Some(end + b),
                                _ if end > x => Some(end),
                                _ => Some((k + 2.0) * period),
                            }
                        }
                    }
                } else {
                    let inner = cell.next_breakpoint(t, false).filter(|b| *b > 0.0 && *b < *period);
                    match inner.map(|b| origin + b) {
                        Some(c) if c < x => Some(c),
                        _ if origin < x => Some(origin),
                        _ => {
                            let prev = (k - 1.0) * period;
                            let last = cell.next_breakpoint(*period, false).filter(|b| *b > 0.0 && *b < *period);
                            Some(last.map(|b| prev + b).filter(|c| *c < x).unwrap_or(prev))
                        }
                    }
                }
            }
            Interpolated { start, end, .. } => {
                pick(start.next_breakpoint(x, forward), end.next_breakpoint(x, forward))
            }
        }
    }

    /// All breakpoints in the open interval `(lo, hi)`.
    pub fn breakpoints_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut x = lo;
        while let Some(b) = self.next_breakpoint(x, true) {
            if b >= hi {
                break;
            }
            out.push(b);
            x = b;
        }
        out
    }
}

fn cell_index(breakpoints: &[f64], x: f64, side: Side) -> usize {
    match side {
        Side::Right => breakpoints.partition_point(|b| *b <= x),
        Side::Left => breakpoints.partition_point(|b| *b < x),
    }
}

/// A.e. sign of `q0 - q1` on `(x - h, x + h)`.
///
/// Diagnostic only: flip counts never consult it.
pub fn difference_sign(c0: &Coefficients, c1: &Coefficients, x: f64, h: f64) -> Result<DifferenceSign> {
    let lo = x - h;
    let hi = x + h;
    let mut samples: Vec<(f64, Side)> = (1..64).map(|i| (lo + 2.0 * h * i as f64 / 64.0, Side::Right)).collect();
    for b in c0.breakpoints_in(lo, hi).into_iter().chain(c1.breakpoints_in(lo, hi)) {
        samples.push((b, Side::Left));
        samples.push((b, Side::Right));
    }
    let (mut pos, mut neg) = (false, false);
    for (s, side) in samples {
        let d = c0.eval_side(s, side)?.q - c1.eval_side(s, side)?.q;
        pos |= d > 0.0;
        neg |= d < 0.0;
    }
    Ok(match (pos, neg) {
        (true, true) => DifferenceSign::Mixed,
        (true, false) => DifferenceSign::Positive,
        (false, true) => DifferenceSign::Negative,
        (false, false) => DifferenceSign::Zero,
    })
}
