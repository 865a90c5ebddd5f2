//! Unbounded angles stored as an integer number of half-turns plus a residual.
//!
//! Prüfer angles of half-line solutions wind tens of thousands of times (and
//! far more under block propagation), so a plain `f64` loses the digits that
//! decide whether a difference sits just above or just below a multiple of π.
//! `Angle` keeps `value = winding·π + residual` with `residual ∈ [0, π)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angle {
    winding: i64,
    residual: f64,
}

impl Angle {
    pub const ZERO: Angle = Angle { winding: 0, residual: 0.0 };

    /// Builds `winding·π + residual`, renormalizing any residual into `[0, π)`.
    pub fn new(winding: i64, residual: f64) -> Self {
        debug_assert!(residual.is_finite(), "non-finite angle residual");
        if (0.0..PI).contains(&residual) {
            return Angle { winding, residual };
        }
        let k = (residual / PI).floor();
        let mut r = residual - k * PI;
        let mut w = winding + k as i64;
        if r >= PI {
            r -= PI;
            w += 1;
        }
        if r < 0.0 {
            r += PI;
            w -= 1;
            if r >= PI {
                r = 0.0;
                w += 1;
            }
        }
        Angle { winding: w, residual: r }
    }

    pub fn from_radians(value: f64) -> Self {
        Angle::new(0, value)
    }

    pub fn winding(&self) -> i64 {
        self.winding
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn to_radians(&self) -> f64 {
        self.winding as f64 * PI + self.residual
    }

    /// `⌊value/π⌋`, exact.
    pub fn floor_pi(&self) -> i64 {
        self.winding
    }

    /// `⌈value/π⌉`, exact.
    pub fn ceil_pi(&self) -> i64 {
        if self.residual > 0.0 {
            self.winding + 1
        } else {
            self.winding
        }
    }

    /// Distance to the nearest multiple of π.
    pub fn dist_to_pi_multiple(&self) -> f64 {
        self.residual.min(PI - self.residual)
    }

    /// Adds `m·π`.
    pub fn shift_half_turns(&self, m: i64) -> Self {
        Angle { winding: self.winding + m, residual: self.residual }
    }

    pub fn add_radians(&self, delta: f64) -> Self {
        Angle::new(self.winding, self.residual + delta)
    }
}

impl Sub for Angle {
    type Output = Angle;
    fn sub(self, rhs: Angle) -> Angle {
        Angle::new(self.winding - rhs.winding, self.residual - rhs.residual)
    }
}

impl Add for Angle {
    type Output = Angle;
    fn add(self, rhs: Angle) -> Angle {
        Angle::new(self.winding + rhs.winding, self.residual + rhs.residual)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalizes_negative_residuals() {
        let a = Angle::new(0, -PI / 4.0);
        assert_eq!(a.winding(), -1);
        assert!((a.residual() - 3.0 * PI / 4.0).abs() < 1e-15);
        assert!((a.to_radians() + PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn exact_multiples_have_equal_floor_and_ceil() {
        let a = Angle::new(3, 0.0);
        assert_eq!(a.floor_pi(), 3);
        assert_eq!(a.ceil_pi(), 3);
        let b = Angle::new(3, 1e-300);
        assert_eq!(b.ceil_pi(), 4);
    }

    #[test]
    fn difference_keeps_precision_at_large_winding() {
        let a = Angle::new(1_000_000_000_000, 0.5);
        let b = Angle::new(1_000_000_000_000, 0.5 + 1e-12);
        let d = b - a;
        assert_eq!(d.winding(), 0);
        assert!((d.residual() - 1e-12).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn floor_and_ceil_match_float_division(x in -1e4f64..1e4) {
            let a = Angle::from_radians(x);
            prop_assert_eq!(a.floor_pi(), (x / PI).floor() as i64);
            prop_assert!((a.to_radians() - x).abs() < 1e-9);
            prop_assert!(a.residual() >= 0.0 && a.residual() < PI);
        }
    }
}
