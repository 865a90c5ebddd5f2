use crate::coefficients::Coefficients;
use crate::error::Result;
use crate::prufer::PruferTrajectory;
use crate::problem::{SLProblem, TruncationSchedule};
use crate::wronskian::{count_from_deltas, delta, delta_angle, limit_flip_count_pair, LimitFlipCount, Psi, SolutionSpec};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Points in `(c, d)` where `Δ(first, second)` crosses a multiple of π,
/// located by sampling on `samples` cells and bisecting each crossing.
pub fn flip_points(first: &PruferTrajectory, second: &PruferTrajectory, c: f64, d: f64, samples: usize) -> Result<Vec<f64>> {
    let f = |x: f64| -> Result<f64> { Ok(delta_angle(first, second, x)? / PI) };
    let mut out = Vec::new();
    let h = (d - c) / samples as f64;
    let mut x0 = c;
    let mut f0 = f(x0)?;
    for i in 1..=samples {
        let x1 = if i == samples { d } else { c + h * i as f64 };
        let f1 = f(x1)?;
        let (lo, hi) = (f0.min(f1), f0.max(f1));
        // every integer strictly between the samples, and one touched at x1
        let mut m = lo.floor() + 1.0;
        while m < hi || (m == hi && i < samples && f1 == m) {
            let (mut a, mut b) = (x0, x1);
            let up = f1 > f0;
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if (f(mid)? < m) == up {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            out.push(0.5 * (a + b));
            m += 1.0;
        }
        x0 = x1;
        f0 = f1;
    }
    Ok(out)
}

/// One Wronskian-comparison check on `(a, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCheck {
    /// Zeros of `W(u0, u1)`.
    pub zeros01: Vec<f64>,
    /// Zeros of `W(u1, u2)`.
    pub zeros12: Vec<f64>,
    /// Consecutive zero pairs of either Wronskian without a flip of `W(u0, u2)` between them.
    pub violations: Vec<(f64, f64)>,
    pub pass: bool,
}

fn gaps_without_flip(
    zeros: &[f64],
    u0: &PruferTrajectory,
    u2: &PruferTrajectory,
    out: &mut Vec<(f64, f64)>,
) -> Result<()> {
    for w in zeros.windows(2) {
        let n = count_from_deltas(delta(u0, u2, w[0])?, delta(u0, u2, w[1])?);
        if n < 1 {
            out.push((w[0], w[1]));
        }
    }
    Ok(())
}

/// Solutions `u_j` with `λ0 r − q0 ≤ λ1 r − q1 ≤ λ2 r − q2`: between
/// consecutive zeros of `W(u0, u1)`, and of `W(u1, u2)`, `W(u0, u2)` flips sign.
pub fn comparison_check(
    u0: &PruferTrajectory,
    u1: &PruferTrajectory,
    u2: &PruferTrajectory,
    a: f64,
    b: f64,
    samples: usize,
) -> Result<ComparisonCheck> {
    let zeros01 = flip_points(u0, u1, a, b, samples)?;
    let zeros12 = flip_points(u1, u2, a, b, samples)?;
    let mut violations = Vec::new();
    gaps_without_flip(&zeros01, u0, u2, &mut violations)?;
    gaps_without_flip(&zeros12, u0, u2, &mut violations)?;
    let pass = violations.is_empty();
    Ok(ComparisonCheck { zeros01, zeros12, violations, pass })
}

/// `#(u0, u1) + #(u1, u2) − 1 ≤ #(u0, u2) ≤ #(u0, u1) + #(u1, u2) + 1` on `(c, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangleCheck {
    pub n01: i64,
    pub n12: i64,
    pub n02: i64,
    pub pass: bool,
}

pub fn triangle_check(
    u0: &PruferTrajectory,
    u1: &PruferTrajectory,
    u2: &PruferTrajectory,
    c: f64,
    d: f64,
) -> Result<TriangleCheck> {
    let n = |s: &PruferTrajectory, t: &PruferTrajectory| -> Result<i64> { Ok(count_from_deltas(delta(s, t, c)?, delta(s, t, d)?)) };
    let (n01, n12, n02) = (n(u0, u1)?, n(u1, u2)?, n(u0, u2)?);
    let pass = n01 + n12 - 1 <= n02 && n02 <= n01 + n12 + 1;
    Ok(TriangleCheck { n01, n12, n02, pass })
}

/// `|#(u0, u1) − #(v0, v1)| ≤ 4` for `u_j`, `v_j` solving the same equation.
pub fn solution_change_bound(
    u0: &PruferTrajectory,
    u1: &PruferTrajectory,
    v0: &PruferTrajectory,
    v1: &PruferTrajectory,
    c: f64,
    d: f64,
) -> Result<i64> {
    let n = |s: &PruferTrajectory, t: &PruferTrajectory| -> Result<i64> { Ok(count_from_deltas(delta(s, t, c)?, delta(s, t, d)?)) };
    Ok((n(u0, u1)? - n(v0, v1)?).abs())
}

/// Two Neumann half-line problems whose flip count swings both ways: on the
/// `k`-th interval (length `kπ`) one of the potentials is `−1` and the other
/// `0`, alternating, starting with `q1 = −1`. Also returns the end points of
/// the intervals.
pub fn oscillating_wronskian_pair(intervals: usize) -> Result<(SLProblem, SLProblem, Vec<f64>)> {
    let mut ends = Vec::with_capacity(intervals);
    let mut x = 0.0;
    for k in 1..=intervals {
        x += k as f64 * PI;
        ends.push(x);
    }
    let mut q0 = Vec::with_capacity(intervals + 1);
    let mut q1 = Vec::with_capacity(intervals + 1);
    for k in 0..intervals {
        let (a, b) = if k % 2 == 0 { (0.0, -1.0) } else { (-1.0, 0.0) };
        q0.push(a);
        q1.push(b);
    }
    q0.push(0.0);
    q1.push(0.0);
    let p0 = SLProblem::half_line(Coefficients::piecewise_potential(ends.clone(), q0), 0.0, PI / 2.0)?;
    let p1 = p0.with_coefficients(Coefficients::piecewise_potential(ends.clone(), q1))?;
    Ok((p0, p1, ends))
}

/// Flip-count history of `(ψ_{0,−}(0), ψ_{1,−}(0))` for
/// [`oscillating_wronskian_pair`], sampled a quarter turn past each interval end.
pub fn oscillating_wronskian_history(intervals: usize, tol: f64) -> Result<LimitFlipCount> {
    let (p0, p1, ends) = oscillating_wronskian_pair(intervals + 1)?;
    let xs: Vec<f64> = ends[..intervals].iter().map(|e| e + PI / 2.0).collect();
    let schedule = TruncationSchedule { x_min_sequence: vec![0.0; xs.len()], x_max_sequence: xs, stabilization_window: 3 };
    limit_flip_count_pair(
        SolutionSpec::new(&p0, 0.0, Psi::Minus),
        SolutionSpec::new(&p1, 0.0, Psi::Minus),
        &schedule,
        1e-7,
        tol,
    )
}
