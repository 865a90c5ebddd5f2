use super::CheckOptions;
use crate::coefficients::{difference_sign, Coefficients, DifferenceSign};
use crate::error::{Error, Result};
use crate::problem::SLProblem;
use crate::spectra::{count_below, eigenvalue};
use crate::wronskian::{Psi, SolutionSpec};
use serde::{Deserialize, Serialize};

/// `τ_ε = τ0 + (ε/r)(q1 − q0)` on a common regular interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationFamily {
    pub problem0: SLProblem,
    pub problem1: SLProblem,
    pub epsilon_grid: Vec<f64>,
}

impl InterpolationFamily {
    pub fn new(problem0: SLProblem, problem1: SLProblem, epsilon_grid: Vec<f64>) -> Result<Self> {
        if problem0.interval != problem1.interval || problem0.bc_a != problem1.bc_a || problem0.bc_b != problem1.bc_b {
            return Err(Error::Precondition("family members must share interval and boundary conditions".into()));
        }
        if !problem0.is_regular() {
            return Err(Error::Precondition("interpolation families are checked on regular problems".into()));
        }
        if epsilon_grid.iter().any(|e| !(0.0..=1.0).contains(e)) || epsilon_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition("epsilon grid must increase within [0, 1]".into()));
        }
        Ok(InterpolationFamily { problem0, problem1, epsilon_grid })
    }

    /// Evenly spaced grid with `n` points.
    pub fn uniform(problem0: SLProblem, problem1: SLProblem, n: usize) -> Result<Self> {
        let grid = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        Self::new(problem0, problem1, grid)
    }

    pub fn at(&self, epsilon: f64) -> Result<SLProblem> {
        if epsilon == 0.0 {
            return Ok(self.problem0.clone());
        }
        if epsilon == 1.0 {
            return Ok(self.problem1.clone());
        }
        self.problem0.with_coefficients(Coefficients::interpolate(
            &self.problem0.coefficients,
            &self.problem1.coefficients,
            epsilon,
        ))
    }

    /// A.e. sign of `q0 − q1` over the interval.
    pub fn difference_sign(&self) -> Result<DifferenceSign> {
        let (a, b) = self.problem0.interval;
        difference_sign(&self.problem0.coefficients, &self.problem1.coefficients, 0.5 * (a + b), 0.5 * (b - a))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub epsilon_grid: Vec<f64>,
    pub x_probe: f64,
    pub lambda: f64,
    pub sign: DifferenceSign,
    pub theta_minus: Vec<f64>,
    pub theta_plus: Vec<f64>,
    /// `eigenvalue_tracks[j][i]`: the `j`-th tracked eigenvalue at `epsilon_grid[i]`.
    pub eigenvalue_tracks: Vec<Vec<f64>>,
    pub theta_monotone: bool,
    pub theta_strict: bool,
    pub eigenvalues_monotone: bool,
    /// Largest step against the expected direction.
    pub max_violation: f64,
    pub pass: bool,
}

/// Eigenvalues are tracked if they lie in `[λ − TRACK_WINDOW, λ)` at `ε = 0`.
pub const TRACK_WINDOW: f64 = 100.0;

/// Checks that `θ_{ε,−}(x_probe)` moves with `ε` in the direction set by the
/// sign of `q0 − q1`, `θ_{ε,+}(x_probe)` in the opposite one, and that the
/// tracked eigenvalues of `H_ε` move like `−θ_{ε,−}`.
pub fn interpolation_monotonicity(
    family: &InterpolationFamily,
    x_probe: f64,
    lambda: f64,
    opts: &CheckOptions,
) -> Result<MonotonicityReport> {
    let sign = family.difference_sign()?;
    let dir = match sign {
        DifferenceSign::Mixed => {
            let (a, b) = family.problem0.interval;
            return Err(Error::MixedSign { x: 0.5 * (a + b) });
        }
        DifferenceSign::Positive => 1.0,
        DifferenceSign::Negative => -1.0,
        DifferenceSign::Zero => 0.0,
    };
    let (a, b) = family.problem0.interval;
    let problems: Vec<SLProblem> = family.epsilon_grid.iter().map(|e| family.at(*e)).collect::<Result<_>>()?;
    let mut theta_minus = Vec::new();
    let mut theta_plus = Vec::new();
    for p in &problems {
        let tm = SolutionSpec::new(p, lambda, Psi::Minus).trajectory(a, b, opts.tol)?;
        let tp = SolutionSpec::new(p, lambda, Psi::Plus).trajectory(a, b, opts.tol)?;
        theta_minus.push(tm.theta_at(x_probe)?.to_radians());
        theta_plus.push(tp.theta_at(x_probe)?.to_radians());
    }
    let k_min = count_below(&problems[0], lambda - TRACK_WINDOW, opts.tol)?.count_strictly_below;
    let k_max = count_below(&problems[0], lambda, opts.tol)?.count_strictly_below;
    let mut eigenvalue_tracks = Vec::new();
    for k in k_min..k_max {
        let mut track = Vec::new();
        for p in &problems {
            track.push(eigenvalue(p, k, (lambda - 1.0, lambda), 1e-11)?);
        }
        eigenvalue_tracks.push(track);
    }

    let slack = 1e-9;
    // (largest step against `want`, every step strictly along `want`)
    let scan = |seq: &[f64], want: f64| -> (f64, bool) {
        seq.windows(2).fold((0.0f64, true), |(v, s), w| {
            let d = w[1] - w[0];
            if want == 0.0 {
                (v.max(d.abs()), s)
            } else {
                (v.max(-want * d), s && want * d > 0.0)
            }
        })
    };
    let (vm, strict) = scan(&theta_minus, dir);
    let (vp, _) = scan(&theta_plus, -dir);
    let theta_violation = vm.max(vp);
    let max_violation = eigenvalue_tracks.iter().map(|t| scan(t, -dir).0).fold(theta_violation, f64::max);
    let theta_monotone = theta_violation <= slack;
    let eigenvalues_monotone = max_violation <= slack;
    let theta_strict = dir != 0.0 && strict;
    let pass = theta_monotone && eigenvalues_monotone && (dir == 0.0 || theta_strict);
    Ok(MonotonicityReport {
        epsilon_grid: family.epsilon_grid.clone(),
        x_probe,
        lambda,
        sign,
        theta_minus,
        theta_plus,
        eigenvalue_tracks,
        theta_monotone,
        theta_strict,
        eigenvalues_monotone,
        max_violation,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn deeper_well_raises_theta() {
        let p0 = SLProblem::dirichlet(Coefficients::free(), 0.0, PI).unwrap();
        let p1 = p0.with_coefficients(Coefficients::constant_potential(-10.0)).unwrap();
        let fam = InterpolationFamily::uniform(p0, p1, 5).unwrap();
        let r = interpolation_monotonicity(&fam, PI, 0.0, &CheckOptions::default()).unwrap();
        assert_eq!(r.sign, DifferenceSign::Positive);
        assert!(r.theta_strict && r.pass, "{r:?}");
    }

    #[test]
    fn identical_ends_are_flat() {
        let p0 = SLProblem::dirichlet(Coefficients::free(), 0.0, PI).unwrap();
        let fam = InterpolationFamily::uniform(p0.clone(), p0, 5).unwrap();
        let r = interpolation_monotonicity(&fam, PI, 3.0, &CheckOptions::default()).unwrap();
        assert!(r.theta_minus.windows(2).all(|w| w[0] == w[1]));
        assert!(r.pass);
    }

    #[test]
    fn mixed_sign_is_rejected() {
        let p0 = SLProblem::dirichlet(Coefficients::free(), 0.0, PI).unwrap();
        let p1 = p0.with_coefficients(Coefficients::piecewise_potential(vec![1.0], vec![1.0, -1.0])).unwrap();
        let fam = InterpolationFamily::uniform(p0, p1, 3).unwrap();
        assert!(matches!(
            interpolation_monotonicity(&fam, PI, 0.0, &CheckOptions::default()),
            Err(Error::MixedSign { .. })
        ));
    }
}
