//! Prüfer angle and log-amplitude of a single solution.
//!
//! With `u = ρ sin θ`, `pu' = ρ cos θ` the equation `−(pu')' + qu = λru`
//! becomes
//!
//! ```text
//! θ'      = cos²θ / p + (λr − q) sin²θ
//! (ln ρ)' = (1/p − (λr − q)) sin θ cos θ
//! ```
//!
//! The angle is carried as an [`Angle`] so windings stay exact.

use crate::angle::Angle;
use crate::coefficients::{Coefficients, Side};
use crate::error::{Error, Result};
use crate::ode::{integrate, Dopri5Options, Step};
use crate::problem::SLProblem;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

pub const DEFAULT_TOL: f64 = 1e-9;
/// Angle tolerance used when deciding that a ψ₊ initialization has settled.
pub const CONVERGENCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ForwardFromA,
    BackwardFromB,
}

#[derive(Debug, Clone)]
struct Segment {
    hi: f64,
    winding: i64,
    step: Step<2>,
}

/// A computed solution, sampled at the accepted step points (ascending `x`)
/// and evaluable anywhere in between through the dense output.
#[derive(Debug, Clone)]
pub struct PruferTrajectory {
    pub lambda: f64,
    pub direction: Direction,
    /// Bound on the accumulated angle error, `tol·(1 + length)`.
    pub angle_tolerance: f64,
    /// For ψ₊ at a singular endpoint: whether doubling `X_max` left the
    /// angle unchanged mod π. `None` when no such check applies.
    pub converged: Option<bool>,
    grid: Vec<f64>,
    theta: Vec<Angle>,
    log_rho: Vec<f64>,
    segments: Vec<Segment>,
}

impl PruferTrajectory {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn theta_samples(&self) -> &[Angle] {
        &self.theta
    }

    pub fn log_rho_samples(&self) -> &[f64] {
        &self.log_rho
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().unwrap())
    }

    pub fn covers(&self, x: f64) -> bool {
        let (lo, hi) = self.x_range();
        lo <= x && x <= hi
    }

    fn locate(&self, x: f64) -> Result<Option<&Segment>> {
        let (lo, hi) = self.x_range();
        if !(lo <= x && x <= hi) {
            return Err(Error::NotCovered { x, lo, hi });
        }
        if self.segments.is_empty() {
            return Ok(None);
        }
        let i = self.segments.partition_point(|s| s.hi < x).min(self.segments.len() - 1);
        Ok(Some(&self.segments[i]))
    }

    /// θ at any covered abscissa.
    pub fn theta_at(&self, x: f64) -> Result<Angle> {
        match self.locate(x)? {
            None => Ok(self.theta[0]),
            Some(seg) => {
                let y = seg.step.interpolate(x);
                Ok(Angle::new(seg.winding, y[0]))
            }
        }
    }

    pub fn log_rho_at(&self, x: f64) -> Result<f64> {
        match self.locate(x)? {
            None => Ok(self.log_rho[0]),
            Some(seg) => Ok(seg.step.interpolate(x)[1]),
        }
    }

    /// Returns a copy with θ shifted by `m·π` everywhere.
    pub fn shifted(&self, m: i64) -> Self {
        let mut t = self.clone();
        for a in &mut t.theta {
            *a = a.shift_half_turns(m);
        }
        for s in &mut t.segments {
            s.winding += m;
        }
        t
    }

    /// CSV with columns `x, theta, log_rho`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Precondition(format!("csv output failed: {e}"));
        wr.write_record(["x", "theta", "log_rho"]).map_err(io)?;
        for i in 0..self.grid.len() {
            wr.write_record(&[
                self.grid[i].to_string(),
                self.theta[i].to_radians().to_string(),
                self.log_rho[i].to_string(),
            ])
            .map_err(io)?;
        }
        wr.flush().map_err(|e| Error::Precondition(format!("csv output failed: {e}")))?;
        Ok(())
    }
}

fn rhs(coeffs: &Coefficients, lambda: f64, x: f64, phi: f64, side: Side) -> Result<[f64; 2]> {
    let pt = coeffs.eval_side(x, side)?;
    let (s, c) = phi.sin_cos();
    let v = lambda * pt.r - pt.q;
    let ip = 1.0 / pt.p;
    Ok([c * c * ip + v * s * s, (ip - v) * s * c])
}

/// Integrates the Prüfer system of `coeffs` from `x_start` to `x_end`.
pub fn integrate_coefficients(
    coeffs: &Coefficients,
    lambda: f64,
    x_start: f64,
    theta_start: Angle,
    log_rho_start: f64,
    x_end: f64,
    tol: f64,
) -> Result<PruferTrajectory> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
    }
    let lo = coeffs.domain_start();
    for x in [x_start, x_end] {
        if !x.is_finite() {
            return Err(Error::Precondition(format!("integration bounds must be finite, got {x}")));
        }
        if x < lo {
            return Err(Error::OutOfDomain { x, lower: lo });
        }
    }
    let forward = x_end >= x_start;
    let mut grid = vec![x_start];
    let mut theta = vec![theta_start];
    let mut log_rho = vec![log_rho_start];
    let mut segments = Vec::new();
    let mut winding = theta_start.winding();
    let opts = Dopri5Options { tol, ..Default::default() };
    integrate(
        |x, y: &[f64; 2], side| rhs(coeffs, lambda, x, y[0], side),
        x_start,
        [theta_start.residual(), log_rho_start],
        x_end,
        |x, fwd| coeffs.next_breakpoint(x, fwd),
        &[],
        [1.0, 1e3],
        &opts,
        |step, y| {
            let hi = step.x0.max(step.x1);
            segments.push(Segment { hi, winding, step: *step });
            let a = Angle::new(winding, y[0]);
            winding = a.winding();
            y[0] = a.residual();
            grid.push(step.x1);
            theta.push(a);
            log_rho.push(y[1]);
        },
    )?;
    if !forward {
        grid.reverse();
        theta.reverse();
        log_rho.reverse();
        segments.reverse();
    }
    Ok(PruferTrajectory {
        lambda,
        direction: if forward { Direction::ForwardFromA } else { Direction::BackwardFromB },
        angle_tolerance: tol * (1.0 + (x_end - x_start).abs()),
        converged: None,
        grid,
        theta,
        log_rho,
        segments,
    })
}

/// Integrates the Prüfer system of `problem` with `θ(x_start) = theta_start`.
pub fn integrate_prufer(
    problem: &SLProblem,
    lambda: f64,
    x_start: f64,
    theta_start: f64,
    x_end: f64,
    tol: f64,
) -> Result<PruferTrajectory> {
    let mut t = integrate_coefficients(
        &problem.coefficients,
        lambda,
        x_start,
        Angle::from_radians(theta_start),
        0.0,
        x_end,
        tol,
    )?;
    // θ(x_start) is reported exactly as given
    let i = if x_end >= x_start { 0 } else { t.grid.len() - 1 };
    t.theta[i] = Angle::from_radians(theta_start);
    Ok(t)
}

/// ψ₋: forward from a regular `a` with `θ(a) = α`.
pub fn psi_minus(problem: &SLProblem, lambda: f64, x_cut: f64, tol: f64) -> Result<PruferTrajectory> {
    let alpha = problem.alpha().ok_or(Error::SingularLeftEndpoint)?;
    if x_cut > problem.b() {
        return Err(Error::Precondition(format!("x_cut = {x_cut} beyond b = {}", problem.b())));
    }
    integrate_coefficients(&problem.coefficients, lambda, problem.a(), Angle::new(0, alpha), 0.0, x_cut, tol)
}

/// Initial angle on the decaying branch at `x_max`, pinned to `(−π, 0]`.
pub fn decaying_branch_angle(coeffs: &Coefficients, lambda: f64, x_max: f64) -> Result<Angle> {
    let pt = coeffs.eval(x_max)?;
    let v = pt.q - lambda * pt.r;
    if v > 0.0 {
        // u = e^{−kx}: u/(pu') = −1/√(p·v)
        let th = (-1.0 / (pt.p * v).sqrt()).atan();
        return Ok(Angle::from_radians(th));
    }
    // Frozen coefficients give no decay here. Accept if the tail still has
    // regions of decay (periodic backgrounds in a gap): backward
    // integration then selects the subdominant solution on its own.
    let lo = (0.5 * x_max).max(coeffs.domain_start());
    let any_decay = (0..=256).any(|i| {
        let x = lo + (x_max - lo) * i as f64 / 256.0;
        coeffs.eval(x).map(|p| p.q - lambda * p.r > 0.0).unwrap_or(false)
    });
    if any_decay {
        Ok(Angle::from_radians(-PI / 2.0))
    } else {
        Err(Error::AboveEssentialSpectrum { x: x_max, value: v })
    }
}

/// ψ₊ initialized at an explicit `x_max` (singular `b`) without the doubling check.
pub fn psi_plus_from(
    problem: &SLProblem,
    lambda: f64,
    x_cut: f64,
    x_max: f64,
    tol: f64,
) -> Result<PruferTrajectory> {
    match problem.beta() {
        Some(beta) => {
            let b = problem.b();
            if x_cut > b {
                return Err(Error::Precondition(format!("x_cut = {x_cut} beyond b = {b}")));
            }
            integrate_coefficients(&problem.coefficients, lambda, b, Angle::from_radians(beta - PI), 0.0, x_cut, tol)
        }
        None => {
            if !(x_max.is_finite() && x_max >= x_cut) {
                return Err(Error::Precondition(format!("x_max = {x_max} must be finite and >= x_cut = {x_cut}")));
            }
            let th0 = decaying_branch_angle(&problem.coefficients, lambda, x_max)?;
            integrate_coefficients(&problem.coefficients, lambda, x_max, th0, 0.0, x_cut, tol)
        }
    }
}

/// ψ₊ with its convergence test at a singular `b`: the trajectory started at
/// `x_max` is compared at `x_cut` against one started at `2·x_max`.
pub fn psi_plus_checked(
    problem: &SLProblem,
    lambda: f64,
    x_cut: f64,
    x_max: f64,
    tol: f64,
) -> Result<PruferTrajectory> {
    let mut t = psi_plus_from(problem, lambda, x_cut, x_max, tol)?;
    if problem.beta().is_none() {
        let t2 = psi_plus_from(problem, lambda, x_cut, 2.0 * x_max, tol)?;
        let d = t.theta_at(x_cut)? - t2.theta_at(x_cut)?;
        t.converged = Some(d.dist_to_pi_multiple() < CONVERGENCE_TOL);
    }
    Ok(t)
}

/// ψ₊: backward from a regular `b` with `θ(b) = β − π`, or from the last
/// truncation abscissa on the decaying branch for a singular `b`.
pub fn psi_plus(problem: &SLProblem, lambda: f64, x_cut: f64, tol: f64) -> Result<PruferTrajectory> {
    if problem.beta().is_some() {
        return psi_plus_from(problem, lambda, x_cut, problem.b(), tol);
    }
    let sched = problem.schedule()?;
    let x_max = *sched.x_max_sequence.last().unwrap();
    psi_plus_checked(problem, lambda, x_cut, x_max, tol)
}
