//! Numeric checks of the relative oscillation theorems against independent
//! oracles, the accumulation criteria, and the randomized trial harness.

mod criteria;
mod interpolation;
mod properties;
mod theorems;
mod trials;

pub use criteria::*;
pub use interpolation::*;
pub use properties::*;
pub use theorems::*;
pub use trials::*;

use serde::{Deserialize, Serialize};

/// Tolerances shared by the checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckOptions {
    /// Local ODE tolerance.
    pub tol: f64,
    /// Half-width (in units of π) of the ambiguity band around multiples of π.
    pub eps_pi: f64,
    /// Finite-volume grid points per unit length for the inertia oracle.
    pub grid_per_unit: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { tol: 1e-10, eps_pi: 1e-7, grid_per_unit: 512 }
    }
}
