use crate::coefficients::Coefficients;
use crate::error::{Error, Result};
use crate::problem::{BoundaryCondition, SLProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Independent stream for trial `index`, so results do not depend on
/// scheduling.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `f(0..n)` on `jobs` threads (`0` = rayon default), in index order.
pub fn run_trials<T, F>(n: usize, jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(&f).collect()))
}

/// Random piecewise-constant potential on `[a, b]` with 1 to `max_cells`
/// cells and values in `[-amplitude, amplitude]`.
pub fn random_piecewise(rng: &mut impl Rng, a: f64, b: f64, max_cells: usize, amplitude: f64) -> Coefficients {
    let cells = rng.gen_range(1..=max_cells);
    let mut cuts: Vec<f64> = (1..cells).map(|_| rng.gen_range(a..b)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let q = (0..=cuts.len()).map(|_| rng.gen_range(-amplitude..=amplitude)).collect();
    Coefficients::piecewise_potential(cuts, q)
}

/// `base` plus a random nonnegative piecewise-constant bump, so that the
/// result dominates `base`.
pub fn dominating(rng: &mut impl Rng, base: &Coefficients, a: f64, b: f64, max_cells: usize, amplitude: f64) -> Coefficients {
    let bump = match random_piecewise(rng, a, b, max_cells, amplitude) {
        Coefficients::PiecewiseConstant { breakpoints, q, .. } => {
            Coefficients::piecewise_potential(breakpoints, q.into_iter().map(f64::abs).collect())
        }
        c => c,
    };
    Coefficients::Sum { members: vec![base.clone(), bump] }
}

fn robin(rng: &mut impl Rng) -> (BoundaryCondition, BoundaryCondition) {
    let alpha = rng.gen_range(0.0..PI);
    let beta = PI - rng.gen_range(0.0..PI);
    (BoundaryCondition::Angle(alpha), BoundaryCondition::Angle(beta))
}

/// A pair of regular problems on `[0, 1]` with shared Robin data, and two
/// spectral parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularTrial {
    pub problem0: SLProblem,
    pub problem1: SLProblem,
    pub lambda0: f64,
    pub lambda1: f64,
}

pub fn regular_trial(seed: u64, index: u64) -> Result<RegularTrial> {
    let mut rng = trial_rng(seed, index);
    let q0 = random_piecewise(&mut rng, 0.0, 1.0, 8, 25.0);
    let q1 = random_piecewise(&mut rng, 0.0, 1.0, 8, 25.0);
    let (bc_a, bc_b) = robin(&mut rng);
    let problem0 = SLProblem::new(q0, 0.0, 1.0, bc_a, bc_b)?;
    let problem1 = problem0.with_coefficients(q1)?;
    let lambda0 = rng.gen_range(-30.0..=30.0);
    let lambda1 = rng.gen_range(-30.0..=30.0);
    Ok(RegularTrial { problem0, problem1, lambda0, lambda1 })
}

/// A single regular problem with `λ0 < λ1` (in `problem0`, `lambda0`, `lambda1`).
pub fn renormalized_trial(seed: u64, index: u64) -> Result<RegularTrial> {
    let mut t = regular_trial(seed, index)?;
    if t.lambda0 > t.lambda1 {
        std::mem::swap(&mut t.lambda0, &mut t.lambda1);
    }
    if t.lambda0 == t.lambda1 {
        t.lambda1 += 1.0;
    }
    t.problem1 = t.problem0.clone();
    Ok(t)
}

/// `q0 ≥ q1` on `[0, 1]` for the interpolation checks, with a probe energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneTrial {
    pub problem0: SLProblem,
    pub problem1: SLProblem,
    pub lambda: f64,
}

pub fn monotone_trial(seed: u64, index: u64) -> Result<MonotoneTrial> {
    let mut rng = trial_rng(seed, index);
    let q1 = random_piecewise(&mut rng, 0.0, 1.0, 8, 25.0);
    let q0 = dominating(&mut rng, &q1, 0.0, 1.0, 8, 25.0);
    let (bc_a, bc_b) = robin(&mut rng);
    let problem0 = SLProblem::new(q0, 0.0, 1.0, bc_a, bc_b)?;
    let problem1 = problem0.with_coefficients(q1)?;
    Ok(MonotoneTrial { problem0, problem1, lambda: rng.gen_range(-30.0..=30.0) })
}

/// Three problems on `[0, len]` at a common `λ` with `q0 ≥ q1 ≥ q2`, each
/// with its own left angle, plus an interior window `(c, d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleTrial {
    pub problems: [SLProblem; 3],
    pub lambda: f64,
    pub window: (f64, f64),
}

pub fn triple_trial(seed: u64, index: u64) -> Result<TripleTrial> {
    let mut rng = trial_rng(seed, index);
    let len = rng.gen_range(1.0..6.0);
    let q2 = random_piecewise(&mut rng, 0.0, len, 8, 25.0);
    let q1 = dominating(&mut rng, &q2, 0.0, len, 8, 25.0);
    let q0 = dominating(&mut rng, &q1, 0.0, len, 8, 25.0);
    let mk = |q: Coefficients, rng: &mut ChaCha8Rng| {
        SLProblem::new(q, 0.0, len, BoundaryCondition::Angle(rng.gen_range(0.0..PI)), BoundaryCondition::DIRICHLET_B)
    };
    let problems = [mk(q0, &mut rng)?, mk(q1, &mut rng)?, mk(q2, &mut rng)?];
    let mut c = rng.gen_range(0.0..len);
    let mut d = rng.gen_range(0.0..len);
    if c > d {
        std::mem::swap(&mut c, &mut d);
    }
    if d - c < 1e-3 * len {
        c = 0.0;
        d = len;
    }
    Ok(TripleTrial { problems, lambda: rng.gen_range(-10.0..=40.0), window: (c, d) })
}
