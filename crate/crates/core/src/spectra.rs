//! Eigenvalue counts of regular problems: Prüfer shooting, and an
//! independent finite-volume inertia oracle.

use crate::angle::Angle;
use crate::coefficients::Coefficients;
use crate::error::{Error, Result};
use crate::problem::SLProblem;
use crate::prufer::psi_minus;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// Angle distance below which `λ` is declared an eigenvalue.
pub const EIGENVALUE_ANGLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMethod {
    Shooting,
    Inertia,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCount {
    pub lambda: f64,
    pub count_strictly_below: u64,
    pub lambda_is_eigenvalue: bool,
    pub method: CountMethod,
    /// Inertia only: a zero pivot was met and resolved by jitter.
    #[serde(default)]
    pub jittered: bool,
    /// Inertia only: grid size of the reported count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<usize>,
}

impl SpectralCount {
    /// Eigenvalues `≤ λ`.
    pub fn count_at_or_below(&self) -> u64 {
        self.count_strictly_below + self.lambda_is_eigenvalue as u64
    }
}

fn require_regular(problem: &SLProblem) -> Result<(f64, f64)> {
    match (problem.alpha(), problem.beta()) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::Precondition("a regular problem (both endpoints finite with angles) is required".into())),
    }
}

/// `θ₋(λ, b) − β`.
pub fn shooting_angle(problem: &SLProblem, lambda: f64, tol: f64) -> Result<Angle> {
    let (_, beta) = require_regular(problem)?;
    let t = psi_minus(problem, lambda, problem.b(), tol)?;
    Ok(t.theta_at(problem.b())?.add_radians(-beta))
}

/// Eigenvalues strictly below `λ` by the oscillation count `⌈(θ₋(λ,b) − β)/π⌉`.
pub fn count_below(problem: &SLProblem, lambda: f64, tol: f64) -> Result<SpectralCount> {
    let t = shooting_angle(problem, lambda, tol)?;
    let is_eig = t.dist_to_pi_multiple() < EIGENVALUE_ANGLE_TOL;
    let k = if is_eig {
        // round to the nearest multiple: θ sits on β + nπ exactly at the n-th eigenvalue
        if t.residual() < PI / 2.0 {
            t.winding()
        } else {
            t.winding() + 1
        }
    } else {
        t.ceil_pi()
    };
    Ok(SpectralCount {
        lambda,
        count_strictly_below: k.max(0) as u64,
        lambda_is_eigenvalue: is_eig,
        method: CountMethod::Shooting,
        jittered: false,
        n_grid: None,
    })
}

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Averages of `q`, `r` and `1/p` over `[lo, hi]`, exact for piecewise constants.
fn cell_averages(c: &Coefficients, lo: f64, hi: f64) -> Result<(f64, f64, f64)> {
    let mut cuts = vec![lo];
    cuts.extend(c.breakpoints_in(lo, hi));
    cuts.push(hi);
    let (mut q, mut r, mut ip) = (0.0, 0.0, 0.0);
    for w in cuts.windows(2) {
        let (u, v) = (w[0], w[1]);
        let mid = 0.5 * (u + v);
        let half = 0.5 * (v - u);
        for (t, wt) in GAUSS3 {
            let pt = c.eval(mid + half * t)?;
            q += wt * half * pt.q;
            r += wt * half * pt.r;
            ip += wt * half / pt.p;
        }
    }
    let len = hi - lo;
    Ok((q / len, r / len, ip / len))
}

/// Negative eigenvalues of the symmetric tridiagonal matrix `(diag, off)`,
/// via LDLᵀ pivots. Returns the count and whether a zero pivot was jittered.
pub fn sturm_count(diag: &[f64], off: &[f64]) -> (u64, bool) {
    let mut neg = 0;
    let mut jitter = false;
    let mut d_prev = 1.0;
    for i in 0..diag.len() {
        let mut d = diag[i];
        if i > 0 {
            d -= off[i - 1] * off[i - 1] / d_prev;
        }
        if d == 0.0 {
            let scale = diag[i].abs().max(if i > 0 { off[i - 1].abs() } else { 0.0 }).max(1.0);
            d = -f64::EPSILON * scale;
            jitter = true;
        }
        if d < 0.0 {
            neg += 1;
        }
        d_prev = d;
    }
    (neg, jitter)
}

/// The finite-volume matrix of `−(pu')' + (q − λr)u` with the problem's
/// separated conditions, on `n` uniform cells.
pub fn fv_matrix(problem: &SLProblem, lambda: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (alpha, beta) = require_regular(problem)?;
    let (a, b) = problem.interval;
    let h = (b - a) / n as f64;
    let c = &problem.coefficients;
    let x = |i: usize| if i == n { b } else { a + h * i as f64 };
    // stiffness weights p_{i+1/2}/h, harmonic means over cells
    let mut k = Vec::with_capacity(n);
    for i in 0..n {
        let (_, _, ip) = cell_averages(c, x(i), x(i + 1))?;
        k.push(1.0 / (ip * h));
    }
    let mut diag = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let lo = if i == 0 { a } else { 0.5 * (x(i - 1) + x(i)) };
        let hi = if i == n { b } else { 0.5 * (x(i) + x(i + 1)) };
        let (q, r, _) = cell_averages(c, lo, hi)?;
        let mut d = (hi - lo) * (q - lambda * r);
        if i > 0 {
            d += k[i - 1];
        }
        if i < n {
            d += k[i];
        }
        diag.push(d);
    }
    let mut off: Vec<f64> = k.iter().map(|v| -v).collect();
    let dirichlet_b = beta == PI;
    let dirichlet_a = alpha == 0.0;
    if !dirichlet_b {
        diag[n] -= 1.0 / beta.tan();
    }
    if !dirichlet_a {
        diag[0] += 1.0 / alpha.tan();
    }
    if dirichlet_b {
        diag.pop();
        off.pop();
    }
    if dirichlet_a {
        diag.remove(0);
        off.remove(0);
    }
    Ok((diag, off))
}

/// Inertia count on one grid.
pub fn inertia_count_fixed(problem: &SLProblem, lambda: f64, n: usize) -> Result<(u64, bool)> {
    let (d, o) = fv_matrix(problem, lambda, n)?;
    Ok(sturm_count(&d, &o))
}

/// Eigenvalues strictly below `λ` from the discretization, reported once
/// two consecutive grid doublings agree.
pub fn inertia_count(problem: &SLProblem, lambda: f64, n_grid: usize) -> Result<SpectralCount> {
    if n_grid < 64 {
        return Err(Error::Precondition(format!("n_grid must be at least 64, got {n_grid}")));
    }
    let mut n = n_grid;
    let (mut prev, mut jit) = inertia_count_fixed(problem, lambda, n)?;
    for _ in 0..8 {
        n *= 2;
        let (cur, j) = inertia_count_fixed(problem, lambda, n)?;
        jit |= j;
        if cur == prev {
            return Ok(SpectralCount {
                lambda,
                count_strictly_below: cur,
                lambda_is_eigenvalue: false,
                method: CountMethod::Inertia,
                jittered: jit,
                n_grid: Some(n),
            });
        }
        prev = cur;
    }
    Err(Error::NotConverged(format!("inertia count at lambda = {lambda} still changing at n = {n}")))
}

/// Grid size giving roughly `per_unit` cells per unit length.
pub fn default_grid(problem: &SLProblem, per_unit: usize) -> usize {
    let len = problem.b() - problem.a();
    ((len * per_unit as f64).ceil() as usize).max(64)
}

/// Eigenvalues `≤ λ` from the oracle, resolving an eigenvalue at `λ` by
/// evaluating just above it.
pub fn inertia_count_at_or_below(problem: &SLProblem, lambda: f64, n_grid: usize) -> Result<u64> {
    let shoot = count_below(problem, lambda, 1e-10)?;
    if shoot.lambda_is_eigenvalue {
        let up = lambda + 1e-6 * (1.0 + lambda.abs());
        Ok(inertia_count(problem, up, n_grid)?.count_strictly_below)
    } else {
        Ok(inertia_count(problem, lambda, n_grid)?.count_strictly_below)
    }
}

fn bisect_index(problem: &SLProblem, k: i64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    // g(λ) = θ₋(λ,b) − β − kπ is strictly increasing in λ
    let g = |l: f64| -> Result<f64> {
        let t = shooting_angle(problem, l, 1e-11)?;
        Ok(t.shift_half_turns(-k).to_radians())
    };
    let mut glo = g(lo)?;
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if (gm < 0.0) == (glo < 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// All eigenvalues in the open interval `(λ0, λ1)`.
pub fn eigenvalues_in(problem: &SLProblem, lambda0: f64, lambda1: f64, tol: f64) -> Result<Vec<f64>> {
    if !(lambda0 < lambda1) {
        return Err(Error::Precondition(format!("need lambda0 < lambda1, got {lambda0}, {lambda1}")));
    }
    let c0 = count_below(problem, lambda0, 1e-11)?;
    let c1 = count_below(problem, lambda1, 1e-11)?;
    let first = c0.count_at_or_below() as i64;
    let last = c1.count_strictly_below as i64;
    let mut out = Vec::new();
    for k in first..last {
        out.push(bisect_index(problem, k, lambda0, lambda1, tol)?);
    }
    Ok(out)
}

/// The `k`-th eigenvalue (from 0), bracketed by expanding from `guess`.
pub fn eigenvalue(problem: &SLProblem, k: u64, guess: (f64, f64), tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = guess;
    let mut step = (hi - lo).max(1.0);
    for _ in 0..60 {
        if count_below(problem, lo, 1e-11)?.count_strictly_below <= k {
            break;
        }
        lo -= step;
        step *= 2.0;
    }
    step = (hi - lo).max(1.0);
    for _ in 0..60 {
        if count_below(problem, hi, 1e-11)?.count_at_or_below() > k {
            break;
        }
        hi += step;
        step *= 2.0;
    }
    bisect_index(problem, k as i64, lo, hi, tol)
}

/// CSV with columns `lambda, count_shooting, count_inertia, agree`.
pub fn write_comparison_csv<W: Write>(rows: &[(SpectralCount, SpectralCount)], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Precondition(format!("csv output failed: {e}"));
    wr.write_record(["lambda", "count_shooting", "count_inertia", "agree"]).map_err(io)?;
    for (s, i) in rows {
        wr.write_record(&[
            s.lambda.to_string(),
            s.count_strictly_below.to_string(),
            i.count_strictly_below.to_string(),
            (s.count_strictly_below == i.count_strictly_below).to_string(),
        ])
        .map_err(io)?;
    }
    wr.flush().map_err(|e| Error::Precondition(format!("csv output failed: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::BoundaryCondition;

    fn free() -> SLProblem {
        SLProblem::dirichlet(Coefficients::free(), 0.0, PI).unwrap()
    }

    #[test]
    fn free_counts() {
        let c = count_below(&free(), 5.0, 1e-9).unwrap();
        assert_eq!(c.count_strictly_below, 2);
        assert!(!c.lambda_is_eigenvalue);
        let c = count_below(&free(), 9.0, 1e-10).unwrap();
        assert_eq!(c.count_strictly_below, 2);
        assert!(c.lambda_is_eigenvalue);
        assert_eq!(count_below(&free(), -3.0, 1e-9).unwrap().count_strictly_below, 0);
    }

    #[test]
    fn shifted_spectrum() {
        let p = SLProblem::dirichlet(Coefficients::constant_potential(-10.0), 0.0, PI).unwrap();
        assert_eq!(count_below(&p, 0.0, 1e-9).unwrap().count_strictly_below, 3);
        assert_eq!(inertia_count(&p, 0.0, 512).unwrap().count_strictly_below, 3);
    }

    #[test]
    fn inertia_matches_free_spectrum() {
        assert_eq!(inertia_count(&free(), 5.0, 512).unwrap().count_strictly_below, 2);
        assert_eq!(inertia_count(&free(), 0.5, 512).unwrap().count_strictly_below, 0);
        assert_eq!(inertia_count(&free(), 26.0, 512).unwrap().count_strictly_below, 5);
        assert!(inertia_count(&free(), 5.0, 16).is_err());
    }

    #[test]
    fn robin_conditions_agree_with_shooting() {
        // Neumann-Neumann on (0, π): eigenvalues n², n ≥ 0
        let p = SLProblem::new(
            Coefficients::free(),
            0.0,
            PI,
            BoundaryCondition::NEUMANN,
            BoundaryCondition::NEUMANN,
        )
        .unwrap();
        for (lam, want) in [(-0.5, 0), (0.5, 1), (3.0, 2), (5.0, 3)] {
            assert_eq!(count_below(&p, lam, 1e-10).unwrap().count_strictly_below, want, "shoot {lam}");
            assert_eq!(inertia_count(&p, lam, 512).unwrap().count_strictly_below, want, "inertia {lam}");
        }
        let p = SLProblem::new(
            Coefficients::piecewise_potential(vec![0.4], vec![-7.0, 12.0]),
            0.0,
            1.0,
            BoundaryCondition::Angle(0.3),
            BoundaryCondition::Angle(2.2),
        )
        .unwrap();
        for lam in [-20.0, -3.0, 0.0, 10.0, 40.0, 100.0] {
            assert_eq!(
                count_below(&p, lam, 1e-10).unwrap().count_strictly_below,
                inertia_count(&p, lam, 2048).unwrap().count_strictly_below,
                "lambda {lam}"
            );
        }
    }

    #[test]
    fn eigenvalues_of_free_problem() {
        let e = eigenvalues_in(&free(), 0.5, 4.5, 1e-10).unwrap();
        assert_eq!(e.len(), 2);
        assert!((e[0] - 1.0).abs() < 1e-8 && (e[1] - 4.0).abs() < 1e-8, "{e:?}");
        assert!(eigenvalues_in(&free(), 5.0, 8.0, 1e-10).unwrap().is_empty());
        let e1 = eigenvalue(&free(), 2, (0.0, 1.0), 1e-10).unwrap();
        assert!((e1 - 9.0).abs() < 1e-8);
    }

    #[test]
    fn sturm_count_on_diagonal() {
        assert_eq!(sturm_count(&[-1.0, 2.0, -3.0], &[0.0, 0.0]), (2, false));
        let (n, j) = sturm_count(&[0.0, 1.0], &[0.0]);
        assert!(j);
        assert_eq!(n, 1);
    }
}
