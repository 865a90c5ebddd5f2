use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("x = {x} lies outside the coefficient domain (valid for x >= {lower})")]
    OutOfDomain { x: f64, lower: f64 },

    #[error("non-positive coefficient {which} = {value} at x = {x}")]
    NonPositiveCoefficient { which: &'static str, x: f64, value: f64 },

    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("step size underflow at x = {x} (h = {h:e})")]
    StepUnderflow { x: f64, h: f64 },

    #[error("the left endpoint is singular; psi_minus needs a regular left endpoint")]
    SingularLeftEndpoint,

    #[error("no decaying solution at x = {x}: q - lambda*r = {value} <= 0")]
    AboveEssentialSpectrum { x: f64, value: f64 },

    #[error("trajectory does not cover x = {x} (covers [{lo}, {hi}])")]
    NotCovered { x: f64, lo: f64, hi: f64 },

    #[error("Wronskian amplitude overflow; clamped value {clamped:e}")]
    AmplitudeOverflow { clamped: f64 },

    #[error("tridiagonal factorization broke down at row {row}")]
    FactorizationBreakdown { row: usize },

    #[error("not converged: {0}")]
    NotConverged(String),

    #[error("band scan too coarse near lambda = {lambda}")]
    ScanTooCoarse { lambda: f64 },

    #[error("collapsed gap at E = {energy}: D'(E) = {d_prime:e}")]
    CollapsedGap { energy: f64, d_prime: f64 },

    #[error("flip count did not stabilize: {0}")]
    NotStabilized(String),

    #[error("lambda = {lambda} is within tolerance of an eigenvalue")]
    NotInGap { lambda: f64 },

    #[error("q0 - q1 changes sign near x = {x}")]
    MixedSign { x: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
