use crate::coefficients::Coefficients;
use crate::error::{Error, Result};
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Separated boundary condition `cos α f(a) − sin α p(a) f'(a) = 0`, or a
/// singular (limit-point) endpoint.
///
/// JSON form: a number for the angle, or the string `"singular"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    Angle(f64),
    Singular,
}

impl BoundaryCondition {
    pub const DIRICHLET_A: BoundaryCondition = BoundaryCondition::Angle(0.0);
    pub const DIRICHLET_B: BoundaryCondition = BoundaryCondition::Angle(PI);
    pub const NEUMANN: BoundaryCondition = BoundaryCondition::Angle(PI / 2.0);

    pub fn angle(&self) -> Option<f64> {
        match self {
            BoundaryCondition::Angle(a) => Some(*a),
            BoundaryCondition::Singular => None,
        }
    }
}

impl Serialize for BoundaryCondition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BoundaryCondition::Angle(a) => s.serialize_f64(*a),
            BoundaryCondition::Singular => s.serialize_str("singular"),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrStr {
    Num(f64),
    Str(String),
}

impl<'de> Deserialize<'de> for BoundaryCondition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match NumOrStr::deserialize(d)? {
            NumOrStr::Num(a) => Ok(BoundaryCondition::Angle(a)),
            NumOrStr::Str(s) if s == "singular" => Ok(BoundaryCondition::Singular),
            NumOrStr::Str(s) => Err(de::Error::custom(format!("unknown boundary condition {s:?}"))),
        }
    }
}

/// Interval endpoints; infinities travel through JSON as `"inf"` / `"-inf"`.
mod endpoints {
    use super::*;

    fn encode(x: f64) -> serde_json::Value {
        if x == f64::INFINITY {
            "inf".into()
        } else if x == f64::NEG_INFINITY {
            "-inf".into()
        } else {
            x.into()
        }
    }

    fn decode<E: de::Error>(v: NumOrStr) -> std::result::Result<f64, E> {
        match v {
            NumOrStr::Num(x) => Ok(x),
            NumOrStr::Str(s) => match s.as_str() {
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                _ => Err(E::custom(format!("bad endpoint {s:?}"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &(f64, f64), s: S) -> std::result::Result<S::Ok, S::Error> {
        [encode(v.0), encode(v.1)].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<(f64, f64), D::Error> {
        let [a, b] = <[NumOrStr; 2]>::deserialize(d)?;
        Ok((decode(a)?, decode(b)?))
    }
}

/// Expanding truncations `(c_n, d_n)` used for limits at singular endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationSchedule {
    pub x_min_sequence: Vec<f64>,
    pub x_max_sequence: Vec<f64>,
    pub stabilization_window: usize,
}

impl TruncationSchedule {
    /// Fixed left end `a`, right ends `x0·factor^k` for `k = 0..=steps`.
    pub fn geometric(a: f64, x0: f64, factor: f64, steps: usize, window: usize) -> Self {
        let x_max_sequence: Vec<f64> = (0..=steps).map(|k| x0 * factor.powi(k as i32)).collect();
        TruncationSchedule {
            x_min_sequence: vec![a; x_max_sequence.len()],
            x_max_sequence,
            stabilization_window: window,
        }
    }

    /// Degenerate schedule for a fully regular interval.
    pub fn fixed(a: f64, b: f64, window: usize) -> Self {
        TruncationSchedule {
            x_min_sequence: vec![a; window + 2],
            x_max_sequence: vec![b; window + 2],
            stabilization_window: window,
        }
    }

    pub fn len(&self) -> usize {
        self.x_max_sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_max_sequence.is_empty()
    }

    pub fn steps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x_min_sequence.iter().copied().zip(self.x_max_sequence.iter().copied())
    }

    /// Checks the schedule against the interval it truncates.
    pub fn validate(&self, a: f64, b: f64) -> Result<()> {
        let k = self.stabilization_window;
        let bad = |m: String| Err(Error::InvalidDescriptor(m));
        if k == 0 {
            return bad("stabilization window must be positive".into());
        }
        if self.x_min_sequence.len() != self.x_max_sequence.len() {
            return bad("x_min and x_max sequences differ in length".into());
        }
        if self.len() < k + 2 {
            return bad(format!("schedule needs at least {} entries, has {}", k + 2, self.len()));
        }
        let constant = |s: &[f64]| s.windows(2).all(|w| w[0] == w[1]);
        if a.is_finite() {
            if !constant(&self.x_min_sequence) || self.x_min_sequence[0] != a {
                return bad("x_min sequence must equal a regular left endpoint".into());
            }
        } else if self.x_min_sequence.windows(2).any(|w| w[1] >= w[0]) {
            return bad("x_min sequence must be strictly decreasing".into());
        }
        if b.is_finite() {
            if !constant(&self.x_max_sequence) || self.x_max_sequence[0] != b {
                return bad("x_max sequence must equal a regular right endpoint".into());
            }
        } else if self.x_max_sequence.windows(2).any(|w| w[1] <= w[0]) {
            return bad("x_max sequence must be strictly increasing".into());
        }
        if self.steps().any(|(c, d)| !(c.is_finite() && d.is_finite() && a <= c && c < d && d <= b)) {
            return bad("every truncation (c, d) must be finite and inside (a, b)".into());
        }
        Ok(())
    }
}

/// A Sturm–Liouville problem `τu = r⁻¹(−(pu')' + qu)` on `(a, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SLProblem {
    pub coefficients: Coefficients,
    #[serde(with = "endpoints")]
    pub interval: (f64, f64),
    pub bc_a: BoundaryCondition,
    pub bc_b: BoundaryCondition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationSchedule>,
}

impl SLProblem {
    pub fn new(
        coefficients: Coefficients,
        a: f64,
        b: f64,
        bc_a: BoundaryCondition,
        bc_b: BoundaryCondition,
    ) -> Result<Self> {
        let p = SLProblem { coefficients, interval: (a, b), bc_a, bc_b, truncation: None };
        p.validate()?;
        Ok(p)
    }

    /// Regular problem with Dirichlet conditions at both ends.
    pub fn dirichlet(coefficients: Coefficients, a: f64, b: f64) -> Result<Self> {
        Self::new(coefficients, a, b, BoundaryCondition::DIRICHLET_A, BoundaryCondition::DIRICHLET_B)
    }

    /// Half line `(a, ∞)` with angle `alpha` at `a`.
    pub fn half_line(coefficients: Coefficients, a: f64, alpha: f64) -> Result<Self> {
        Self::new(coefficients, a, f64::INFINITY, BoundaryCondition::Angle(alpha), BoundaryCondition::Singular)
    }

    pub fn with_truncation(mut self, schedule: TruncationSchedule) -> Result<Self> {
        schedule.validate(self.interval.0, self.interval.1)?;
        self.truncation = Some(schedule);
        Ok(self)
    }

    /// Same interval and boundary data, different coefficients.
    pub fn with_coefficients(&self, coefficients: Coefficients) -> Result<Self> {
        let mut p = self.clone();
        p.coefficients = coefficients;
        p.validate()?;
        Ok(p)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: SLProblem = serde_json::from_str(s).map_err(|e| Error::InvalidDescriptor(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.interval;
        let bad = |m: String| Err(Error::InvalidDescriptor(m));
        if a.is_nan() || b.is_nan() || a >= b {
            return bad(format!("interval needs a < b, got ({a}, {b})"));
        }
        self.coefficients.validate()?;
        match (a.is_finite(), self.bc_a) {
            (true, BoundaryCondition::Angle(al)) if (0.0..PI).contains(&al) => {}
            (true, BoundaryCondition::Angle(al)) => return bad(format!("alpha = {al} not in [0, pi)")),
            (true, BoundaryCondition::Singular) => return bad("finite left endpoint needs an angle".into()),
            (false, BoundaryCondition::Singular) => {}
            (false, _) => return bad("infinite left endpoint must be singular".into()),
        }
        match (b.is_finite(), self.bc_b) {
            (true, BoundaryCondition::Angle(be)) if be > 0.0 && be <= PI => {}
            (true, BoundaryCondition::Angle(be)) => return bad(format!("beta = {be} not in (0, pi]")),
            (true, BoundaryCondition::Singular) => return bad("finite right endpoint needs an angle".into()),
            (false, BoundaryCondition::Singular) => {}
            (false, _) => return bad("infinite right endpoint must be singular".into()),
        }
        let lo = self.coefficients.domain_start();
        if a < lo {
            return bad(format!("coefficients are only defined for x >= {lo}, interval starts at {a}"));
        }
        if let Some(s) = &self.truncation {
            s.validate(a, b)?;
        }
        Ok(())
    }

    pub fn a(&self) -> f64 {
        self.interval.0
    }

    pub fn b(&self) -> f64 {
        self.interval.1
    }

    pub fn alpha(&self) -> Option<f64> {
        self.bc_a.angle()
    }

    pub fn beta(&self) -> Option<f64> {
        self.bc_b.angle()
    }

    pub fn is_regular(&self) -> bool {
        self.alpha().is_some() && self.beta().is_some()
    }

    /// The schedule to use for limits: the declared one, or the trivial one
    /// for regular problems.
    pub fn schedule(&self) -> Result<TruncationSchedule> {
        match &self.truncation {
            Some(s) => Ok(s.clone()),
            None if self.is_regular() => Ok(TruncationSchedule::fixed(self.a(), self.b(), 1)),
            None => Err(Error::Precondition("singular problem without a truncation schedule".into())),
        }
    }

    /// Regular problem on `(a, x_max)` with the given angle at the new end.
    pub fn truncated(&self, x_max: f64, beta: f64) -> Result<Self> {
        if self.alpha().is_none() {
            return Err(Error::SingularLeftEndpoint);
        }
        Self::new(self.coefficients.clone(), self.a(), x_max, self.bc_a, BoundaryCondition::Angle(beta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_with_infinite_endpoint() {
        let p = SLProblem::half_line(Coefficients::free().with_well(-10.0, 0.0, PI), 0.0, 0.0)
            .unwrap()
            .with_truncation(TruncationSchedule::geometric(0.0, 40.0, 2.0, 3, 2))
            .unwrap();
        let s = p.to_json();
        assert!(s.contains("\"inf\""));
        assert!(s.contains("\"singular\""));
        assert_eq!(SLProblem::from_json(&s).unwrap(), p);
    }

    #[test]
    fn endpoint_angle_ranges() {
        let c = Coefficients::free();
        assert!(SLProblem::new(c.clone(), 0.0, 1.0, BoundaryCondition::Angle(PI), BoundaryCondition::DIRICHLET_B).is_err());
        assert!(SLProblem::new(c.clone(), 0.0, 1.0, BoundaryCondition::DIRICHLET_A, BoundaryCondition::Angle(0.0)).is_err());
        assert!(SLProblem::new(c.clone(), 0.0, f64::INFINITY, BoundaryCondition::DIRICHLET_A, BoundaryCondition::DIRICHLET_B).is_err());
        assert!(SLProblem::new(c, 0.0, 1.0, BoundaryCondition::Singular, BoundaryCondition::DIRICHLET_B).is_err());
    }

    #[test]
    fn tail_domain_is_checked() {
        let c = Coefficients::EulerTail { c: -1.0, x0: 1.0 };
        assert!(SLProblem::half_line(c.clone(), 0.5, 0.0).is_err());
        assert!(SLProblem::half_line(c, 1.0, 0.0).is_ok());
    }

    #[test]
    fn schedule_needs_window_plus_two_entries() {
        let s = TruncationSchedule::geometric(0.0, 10.0, 2.0, 2, 2);
        assert!(s.validate(0.0, f64::INFINITY).is_err());
        let s = TruncationSchedule::geometric(0.0, 10.0, 2.0, 3, 2);
        assert!(s.validate(0.0, f64::INFINITY).is_ok());
    }

    #[test]
    fn regular_problem_gets_fixed_schedule() {
        let p = SLProblem::dirichlet(Coefficients::free(), 0.0, PI).unwrap();
        let s = p.schedule().unwrap();
        assert!(s.steps().all(|st| st == (0.0, PI)));
    }
}
