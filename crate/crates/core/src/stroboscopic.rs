//! Period-by-period propagation of Prüfer angles over very long ranges.
//!
//! For piecewise-constant periodic cells the transfer matrix of each piece is
//! an entire function of the spectral parameter, so it can be evaluated in
//! double-double arithmetic. A period map acts on angles through a *lift*
//! `(M, w)`: `θ = kπ + ρ(v) ↦ (k + w + [ρ(Mv) < ρ(Me₀)])π + ρ(Mv)`, where
//! `ρ(v) ∈ [0, π)` is the angle of the line through `v = (u, pu')` and
//! `e₀ = (0, 1)`. Lifts compose exactly, so `K` periods cost `O(log K)`
//! products and windings stay exact integers.
//!
//! A slowly decaying perturbation `δ(x)` is frozen over blocks of `≈ ε·n`
//! periods (at period index `n`), which is how the growth of flip counts
//! against band edges is followed out to `x ~ 10¹³`.

use crate::coefficients::Coefficients;
use crate::error::{Error, Result};
use twofloat::TwoFloat;

pub type DD = TwoFloat;
type M2 = [[DD; 2]; 2];
type V2 = [DD; 2];

fn dd(x: f64) -> DD {
    DD::from(x)
}

/// `a / b` by two correction steps of long division; the crate's own
/// double-double quotient is only accurate to about 1e-17.
pub fn ddiv(a: DD, b: DD) -> DD {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    DD::from(q1) + DD::from(q2) + DD::from(q3)
}

fn mat_mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[dd(0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn mat_vec(a: &M2, v: &V2) -> V2 {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

fn identity() -> M2 {
    [[dd(1.0), dd(0.0)], [dd(0.0), dd(1.0)]]
}

/// Scales a matrix by a power of two so its largest entry is near 1; the
/// projective action is unchanged and nothing over- or underflows.
fn rescale(m: &mut M2) {
    let big = m.iter().flatten().map(|x| x.hi().abs()).fold(0.0, f64::max);
    if big > 0.0 && !(0.25..=4.0).contains(&big) {
        let s = dd((2f64).powi(-(big.log2().round() as i32)));
        for x in m.iter_mut().flatten() {
            *x *= s;
        }
    }
}

fn canonical(v: V2) -> V2 {
    let s = v[0].hi();
    if s < 0.0 || (s == 0.0 && v[1].hi() < 0.0) {
        [-v[0], -v[1]]
    } else {
        v
    }
}

fn normalize(v: V2) -> V2 {
    let n = v[0].hi().abs().max(v[1].hi().abs());
    if n == 0.0 {
        return v;
    }
    let s = dd((2f64).powi(-(n.log2().round() as i32)));
    [v[0] * s, v[1] * s]
}

/// `ρ(a) < ρ(b)` for canonical vectors.
fn line_less(a: &V2, b: &V2) -> bool {
    (b[0] * a[1] - a[0] * b[1]).hi() > 0.0
}

/// Sine of the angle between two lines (unsigned, relative).
fn line_separation(a: &V2, b: &V2) -> f64 {
    let cross = (b[0] * a[1] - a[0] * b[1]).hi().abs();
    let na = a[0].hi().hypot(a[1].hi());
    let nb = b[0].hi().hypot(b[1].hi());
    cross / (na * nb)
}

/// A Prüfer angle `k·π + ρ(v)`.
#[derive(Debug, Clone, Copy)]
pub struct StrobeAngle {
    pub winding: i64,
    v: V2,
}

impl StrobeAngle {
    pub fn from_angle(alpha: f64) -> Self {
        let a = crate::angle::Angle::from_radians(alpha);
        let (s, c) = a.residual().sin_cos();
        StrobeAngle { winding: a.winding(), v: canonical([dd(s), dd(c)]) }
    }

    pub fn residual(&self) -> f64 {
        let r = self.v[0].hi().atan2(self.v[1].hi());
        if r >= std::f64::consts::PI {
            0.0
        } else {
            r
        }
    }

    pub fn to_radians(&self) -> f64 {
        self.winding as f64 * std::f64::consts::PI + self.residual()
    }
}

/// Lift of a period map: `F(0) ∈ [wπ, (w+1)π)`.
#[derive(Debug, Clone, Copy)]
pub struct Lift {
    m: M2,
    w: i64,
}

impl Lift {
    pub fn identity() -> Self {
        Lift { m: identity(), w: 0 }
    }

    pub fn dd_matrix(&self) -> [[DD; 2]; 2] {
        self.m
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.m[0][0].hi(), self.m[0][1].hi()], [self.m[1][0].hi(), self.m[1][1].hi()]]
    }

    pub fn apply(&self, a: &StrobeAngle) -> StrobeAngle {
        let b = canonical(mat_vec(&self.m, &a.v));
        let c = canonical([self.m[0][1], self.m[1][1]]);
        let carry = line_less(&b, &c) as i64;
        StrobeAngle { winding: a.winding + self.w + carry, v: normalize(b) }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Lift) -> Lift {
        let g0 = StrobeAngle { winding: other.w, v: canonical([other.m[0][1], other.m[1][1]]) };
        let w = self.apply(&g0).winding;
        let mut m = mat_mul(&self.m, &other.m);
        rescale(&mut m);
        Lift { m, w }
    }

    /// `self ∘ other` with the product matrix supplied by the caller.
    fn compose_onto(&self, other: &Lift, m: M2) -> Lift {
        let g0 = StrobeAngle { winding: other.w, v: canonical([other.m[0][1], other.m[1][1]]) };
        Lift { m, w: self.apply(&g0).winding }
    }

    /// `k`-fold iterate. Matrix powers come from the Chebyshev form
    /// `Mᵏ = Tₖ(t)·I + Uₖ₋₁(t)·(M − t·I)`, carried as `(Tₘ − 1, Uₘ₋₁)` so that
    /// nothing cancels near `t = ±1`; plain squaring loses a factor `k²`
    /// there.
    pub fn pow(&self, k: u64) -> Lift {
        self.chebyshev_pow(k).unwrap_or_else(|| self.pow_by_squaring(k))
    }

    fn pow_by_squaring(&self, mut k: u64) -> Lift {
        let mut acc = Lift::identity();
        let mut base = *self;
        while k > 0 {
            if k & 1 == 1 {
                acc = base.compose(&acc);
            }
            k >>= 1;
            if k > 0 {
                base = base.compose(&base);
            }
        }
        acc
    }

    fn chebyshev_pow(&self, mut k: u64) -> Option<Lift> {
        let m = self.m;
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if !(det.hi() > 0.0) {
            return None;
        }
        let sq = det.sqrt();
        let mut mp = [[dd(0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                mp[i][j] = ddiv(m[i][j], sq);
            }
        }
        let mut t = (mp[0][0] + mp[1][1]) * 0.5;
        if t.hi() < 0.0 {
            // projectively the same map
            for x in mp.iter_mut().flatten() {
                *x = -*x;
            }
            t = -t;
        }
        let s = t - dd(1.0);
        let s2 = s * (s + dd(2.0));
        let n = [[mp[0][0] - t, mp[0][1]], [mp[1][0], mp[1][1] - t]];
        let combine = |a: (DD, DD), b: (DD, DD)| -> (DD, DD) {
            (a.0 + b.0 + a.0 * b.0 + s2 * a.1 * b.1, a.1 * (dd(1.0) + b.0) + (dd(1.0) + a.0) * b.1)
        };
        let matrix = |c: (DD, DD)| -> M2 {
            let d = dd(1.0) + c.0;
            [[d + c.1 * n[0][0], c.1 * n[0][1]], [c.1 * n[1][0], d + c.1 * n[1][1]]]
        };
        let mut acc_c = (dd(0.0), dd(0.0));
        let mut acc = Lift::identity();
        let mut base_c = (s, dd(1.0));
        let mut base = Lift { m: mp, w: self.w };
        while k > 0 {
            if k & 1 == 1 {
                acc_c = combine(base_c, acc_c);
                acc = base.compose_onto(&acc, matrix(acc_c));
            }
            k >>= 1;
            if k > 0 {
                base_c = combine(base_c, base_c);
                base = base.compose_onto(&base, matrix(base_c));
            }
            let big = acc_c.0.hi().abs().max(acc_c.1.hi().abs()).max(base_c.0.hi().abs()).max(base_c.1.hi().abs());
            if !(big < 1e150) {
                return None;
            }
        }
        Some(acc)
    }
}

/// `cos(h√z)` and `sin(h√z)/√z` as power series in `z`.
pub fn entire_pair(h: f64, z: DD) -> (DD, DD) {
    let t = -(z * dd(h) * dd(h));
    let mut c = dd(1.0);
    let mut s = dd(1.0);
    let mut tc = dd(1.0);
    let mut ts = dd(1.0);
    for n in 1..400 {
        let nf = n as f64;
        tc = ddiv(tc * t, dd((2.0 * nf - 1.0) * (2.0 * nf)));
        ts = ddiv(ts * t, dd((2.0 * nf) * (2.0 * nf + 1.0)));
        c += tc;
        s += ts;
        let small = tc.hi().abs() < 1e-34 * c.hi().abs().max(1.0) && ts.hi().abs() < 1e-34 * s.hi().abs().max(1.0);
        if small && nf * nf > t.hi().abs() {
            break;
        }
    }
    (c, s * dd(h))
}

/// One period of piecewise-constant coefficients starting at a period boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct StrobeCell {
    pub widths: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
}

impl StrobeCell {
    /// Extracts the cell of a periodic piecewise-constant family on `[0, period)`.
    pub fn from_coefficients(coeffs: &Coefficients, period: f64) -> Result<Self> {
        let cuts = coeffs.breakpoints_in(0.0, period);
        let mut edges = vec![0.0];
        edges.extend(cuts);
        edges.push(period);
        let mut cell = StrobeCell { widths: vec![], p: vec![], q: vec![], r: vec![] };
        for w in edges.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let probe = [w[0] + 0.25 * (w[1] - w[0]), mid, w[0] + 0.75 * (w[1] - w[0])];
            let pts: Vec<_> = probe.iter().map(|x| coeffs.eval(*x)).collect::<Result<_>>()?;
            if pts.iter().any(|p| *p != pts[0]) {
                return Err(Error::Precondition("stroboscopic propagation needs piecewise-constant cells".into()));
            }
            cell.widths.push(w[1] - w[0]);
            cell.p.push(pts[0].p);
            cell.q.push(pts[0].q);
            cell.r.push(pts[0].r);
        }
        Ok(cell)
    }

    pub fn period(&self) -> f64 {
        self.widths.iter().sum()
    }

    /// Lift and matrix of one period for `−(pu')' + (q + δ)u = λru`.
    pub fn period_lift(&self, lambda: DD, delta: DD) -> Lift {
        let mut acc = Lift::identity();
        for i in 0..self.widths.len() {
            let p = dd(self.p[i]);
            let z = ddiv(lambda * dd(self.r[i]) - dd(self.q[i]) - delta, p);
            let (c, s) = entire_pair(self.widths[i], z);
            let m: M2 = [[c, ddiv(s, p)], [-(p * z * s), c]];
            // θ(0) = 0 reaches θ(h) = h√z, so the winding is ⌊h√z/π⌋ for z > 0
            let w = if z.hi() > 0.0 {
                let phase = ddiv(dd(self.widths[i]) * z.sqrt(), DD::from(std::f64::consts::PI));
                let f = phase.hi().floor();
                let mut w = f as i64;
                if (phase - dd(f)).hi() < 0.0 {
                    w -= 1;
                }
                w
            } else {
                0
            };
            acc = Lift { m, w }.compose(&acc);
        }
        acc
    }

    /// Discriminant `tr M` in double-double.
    pub fn discriminant(&self, lambda: DD) -> DD {
        let l = self.period_lift(lambda, dd(0.0));
        // undo the rescaling: det M = 1
        let m = l.m;
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        ddiv(m[0][0] + m[1][1], det.sqrt())
    }

    /// Refines a band edge `D = s·2` (s = ±1) near `approx` by bisection.
    pub fn refine_edge(&self, approx: f64, s: f64) -> Result<DD> {
        let g = |l: DD| self.discriminant(l) - dd(2.0 * s);
        let mut width = 1e-9 * (1.0 + approx.abs());
        let (mut lo, mut hi);
        loop {
            lo = dd(approx - width);
            hi = dd(approx + width);
            if (g(lo).hi() < 0.0) != (g(hi).hi() < 0.0) {
                break;
            }
            width *= 4.0;
            if width > 1e-3 * (1.0 + approx.abs()) {
                return Err(Error::NotConverged(format!("no sign change of D - {} near {approx}", 2.0 * s)));
            }
        }
        let glo_neg = g(lo).hi() < 0.0;
        for _ in 0..120 {
            let mid = (lo + hi) * 0.5;
            let gm = g(mid);
            if gm.hi() == 0.0 {
                return Ok(mid);
            }
            if (gm.hi() < 0.0) == glo_neg {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo + hi) * 0.5)
    }
}

/// One frozen-perturbation block: periods `[start, start + len)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub start: u64,
    pub len: u64,
    pub delta: f64,
}

/// Blocks covering periods `[first, last)`, each of length `≈ max(1, ε·n)`,
/// never straddling a period index listed in `stops`; `δ` is sampled at the
/// block midpoint.
pub fn blocks<F: Fn(f64) -> Result<f64>>(
    period: f64,
    first: u64,
    last: u64,
    stops: &[u64],
    eps: f64,
    delta: F,
) -> Result<Vec<Block>> {
    let mut out = Vec::new();
    let mut n = first;
    let mut stops: Vec<u64> = stops.iter().copied().filter(|s| *s > first && *s <= last).collect();
    stops.sort_unstable();
    let mut si = 0;
    while n < last {
        while si < stops.len() && stops[si] <= n {
            si += 1;
        }
        let limit = if si < stops.len() { stops[si] } else { last };
        let len = ((eps * n as f64).floor() as u64).max(1).min(limit - n);
        let mid = (n as f64 + 0.5 * len as f64) * period;
        out.push(Block { start: n, len, delta: delta(mid)? });
        n += len;
    }
    Ok(out)
}

/// Angles of the unperturbed and perturbed solutions at each stop.
#[derive(Debug, Clone)]
pub struct StrobeHistory {
    pub stops: Vec<u64>,
    pub x: Vec<f64>,
    pub theta0: Vec<StrobeAngle>,
    pub theta1: Vec<StrobeAngle>,
}

impl StrobeHistory {
    /// `#_{(a, x_k)}(u0, u1)` for solutions sharing `θ(a)`, with a flag when
    /// `Δ(x_k)` is within `eps_pi` of a multiple of π.
    pub fn counts(&self, eps_pi: f64) -> Vec<(i64, bool)> {
        self.theta0
            .iter()
            .zip(&self.theta1)
            .map(|(a, b)| {
                let up = line_less(&a.v, &b.v) as i64;
                let flagged = line_separation(&a.v, &b.v) < eps_pi;
                (b.winding - a.winding + up - 1, flagged)
            })
            .collect()
    }
}

/// Propagates `θ(first·L) = alpha` for `q` and `q + δ` to each stop.
pub fn propagate<F: Fn(f64) -> Result<f64>>(
    cell: &StrobeCell,
    lambda: DD,
    alpha: f64,
    first: u64,
    stops: &[u64],
    eps: f64,
    delta: F,
) -> Result<StrobeHistory> {
    let period = cell.period();
    let last = *stops.iter().max().ok_or_else(|| Error::Precondition("no stops".into()))?;
    let bl = blocks(period, first, last, stops, eps, delta)?;
    let base = cell.period_lift(lambda, dd(0.0));
    let mut th0 = StrobeAngle::from_angle(alpha);
    let mut th1 = th0;
    let mut n = first;
    let mut hist = StrobeHistory { stops: vec![], x: vec![], theta0: vec![], theta1: vec![] };
    let mut sorted: Vec<u64> = stops.to_vec();
    sorted.sort_unstable();
    let mut si = 0;
    let record = |n: u64, t0: StrobeAngle, t1: StrobeAngle, hist: &mut StrobeHistory, si: &mut usize| {
        while *si < sorted.len() && sorted[*si] == n {
            hist.stops.push(n);
            hist.x.push(n as f64 * period);
            hist.theta0.push(t0);
            hist.theta1.push(t1);
            *si += 1;
        }
    };
    record(n, th0, th1, &mut hist, &mut si);
    for b in bl {
        th0 = base.pow(b.len).apply(&th0);
        th1 = cell.period_lift(lambda, dd(b.delta)).pow(b.len).apply(&th1);
        n = b.start + b.len;
        record(n, th0, th1, &mut hist, &mut si);
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::monodromy;
    use std::f64::consts::PI;

    fn kp() -> Coefficients {
        Coefficients::Periodic {
            period: PI,
            cell: Box::new(Coefficients::piecewise_potential(vec![PI / 2.0], vec![0.0, 5.0])),
        }
    }

    #[test]
    fn quotient_is_double_double_accurate() {
        let third = ddiv(dd(1.0), dd(3.0));
        assert!((third * dd(3.0) - dd(1.0)).hi().abs() < 1e-31);
        let x = dd(7.0) + dd(1e-20);
        let y = ddiv(x, dd(1.1) + dd(3e-18));
        assert!((y * (dd(1.1) + dd(3e-18)) - x).hi().abs() < 1e-30);
    }

    #[test]
    fn edge_rotation_survives_huge_powers() {
        let cell = StrobeCell::from_coefficients(&kp(), PI).unwrap();
        let e = cell.refine_edge(6.119828122548165, 1.0).unwrap();
        let n = 1u64 << 40;
        let th = cell.period_lift(e, dd(0.0)).pow(n).apply(&StrobeAngle::from_angle(0.0));
        assert!((th.winding - 2 * n as i64).abs() <= 2, "{}", th.winding - 2 * n as i64);
    }

    #[test]
    fn series_match_closed_forms() {
        let (c, s) = entire_pair(1.3, dd(2.0));
        assert!((c.hi() - (1.3 * 2f64.sqrt()).cos()).abs() < 1e-15);
        assert!((s.hi() - (1.3 * 2f64.sqrt()).sin() / 2f64.sqrt()).abs() < 1e-15);
        let (c, s) = entire_pair(1.3, dd(-3.0));
        assert!((c.hi() - (1.3 * 3f64.sqrt()).cosh()).abs() < 1e-14);
        assert!((s.hi() - (1.3 * 3f64.sqrt()).sinh() / 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn period_matrix_matches_ode_monodromy() {
        let cell = StrobeCell::from_coefficients(&kp(), PI).unwrap();
        for l in [-1.0, 0.7, 3.3] {
            let lift = cell.period_lift(dd(l), dd(0.0));
            let rec = monodromy(&kp(), PI, l, 1e-13).unwrap();
            let m = lift.matrix();
            let scale = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).sqrt();
            for (row, want) in m.iter().zip(rec.m) {
                for (x, y) in row.iter().zip(want) {
                    assert!((x / scale - y).abs() < 1e-9, "{l}");
                }
            }
        }
    }

    #[test]
    fn lift_windings_match_prufer() {
        use crate::prufer::integrate_coefficients;
        let cell = StrobeCell::from_coefficients(&kp(), PI).unwrap();
        for l in [0.3, 2.0, 9.5] {
            let lift = cell.period_lift(dd(l), dd(0.0)).pow(7);
            for a in [0.0, 1.0, 2.5] {
                let got = lift.apply(&StrobeAngle::from_angle(a)).to_radians();
                let t = integrate_coefficients(&kp(), l, 0.0, crate::angle::Angle::from_radians(a), 0.0, 7.0 * PI, 1e-11)
                    .unwrap();
                let want = t.theta_at(7.0 * PI).unwrap().to_radians();
                assert!((got - want).abs() < 1e-7, "lambda {l}, alpha {a}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn free_lowest_edge_is_exact() {
        let cell = StrobeCell { widths: vec![1.0], p: vec![1.0], q: vec![0.0], r: vec![1.0] };
        let e = cell.refine_edge(1e-12, 1.0).unwrap();
        assert!(e.hi().abs() < 1e-25);
    }

    #[test]
    fn blocks_respect_stops() {
        let b = blocks(1.0, 10, 1000, &[100, 500], 0.1, |_| Ok(0.0)).unwrap();
        let mut n = 10;
        for blk in &b {
            assert_eq!(blk.start, n);
            assert!(blk.start < 100 && blk.start + blk.len <= 100 || blk.start >= 100);
            assert!(blk.start < 500 && blk.start + blk.len <= 500 || blk.start >= 500);
            n += blk.len;
        }
        assert_eq!(n, 1000);
    }
}
