//! Monodromy matrix, discriminant and band edges of periodic coefficients.

use crate::angle::Angle;
use crate::coefficients::Coefficients;
use crate::error::{Error, Result};
use crate::ode::{integrate, Dopri5Options};
use crate::prufer::integrate_coefficients;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

pub const DEFAULT_MONODROMY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonodromyRecord {
    pub lambda: f64,
    /// `[[c, s], [p c', p s']]` at the end of the period.
    pub m: [[f64; 2]; 2],
    pub m_prime: [[f64; 2]; 2],
    pub d: f64,
    pub d_prime: f64,
    pub period_length: f64,
}

impl MonodromyRecord {
    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }
}

/// Fundamental system `(c, s)` and its λ-derivative over `[0, period_length]`.
pub fn monodromy(coeffs: &Coefficients, period_length: f64, lambda: f64, tol: f64) -> Result<MonodromyRecord> {
    if !(period_length > 0.0 && period_length.is_finite()) {
        return Err(Error::Precondition(format!("period must be positive, got {period_length}")));
    }
    // [u_c, v_c, u_s, v_s, du_c, dv_c, du_s, dv_s] with v = p u'
    let y0 = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
    let opts = Dopri5Options { tol, ..Default::default() };
    let y = integrate(
        |x, y: &[f64; 8], side| {
            let pt = coeffs.eval_side(x, side)?;
            let ip = 1.0 / pt.p;
            let w = pt.q - lambda * pt.r;
            Ok([
                y[1] * ip,
                w * y[0],
                y[3] * ip,
                w * y[2],
                y[5] * ip,
                w * y[4] - pt.r * y[0],
                y[7] * ip,
                w * y[6] - pt.r * y[2],
            ])
        },
        0.0,
        y0,
        period_length,
        |x, fwd| coeffs.next_breakpoint(x, fwd),
        &[],
        [1.0; 8],
        &opts,
        |_, _| {},
    )?;
    let m = [[y[0], y[2]], [y[1], y[3]]];
    let m_prime = [[y[4], y[6]], [y[5], y[7]]];
    Ok(MonodromyRecord {
        lambda,
        m,
        m_prime,
        d: m[0][0] + m[1][1],
        d_prime: m_prime[0][0] + m_prime[1][1],
        period_length,
    })
}

/// Records on a uniform λ grid, computed in parallel.
pub fn discriminant_scan(
    coeffs: &Coefficients,
    period_length: f64,
    lambda_min: f64,
    lambda_max: f64,
    n: usize,
    tol: f64,
) -> Result<Vec<MonodromyRecord>> {
    let n = n.max(2);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let l = lambda_min + (lambda_max - lambda_min) * i as f64 / (n - 1) as f64;
            monodromy(coeffs, period_length, l, tol)
        })
        .collect()
}

/// CSV with columns `lambda, D, D_prime`.
pub fn write_discriminant_csv<W: Write>(records: &[MonodromyRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Precondition(format!("csv output failed: {e}"));
    wr.write_record(["lambda", "D", "D_prime"]).map_err(io)?;
    for r in records {
        wr.write_record(&[r.lambda.to_string(), r.d.to_string(), r.d_prime.to_string()]).map_err(io)?;
    }
    wr.flush().map_err(|e| Error::Precondition(format!("csv output failed: {e}")))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    /// Top of a band: `|D|` increases through 2.
    LowerGapEdge,
    /// Bottom of a band: `|D|` decreases through 2.
    UpperGapEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kappa {
    Finite(f64),
    Infinite,
}

impl Kappa {
    pub fn value(&self) -> Option<f64> {
        match self {
            Kappa::Finite(k) => Some(*k),
            Kappa::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandEdge {
    #[serde(rename = "E")]
    pub e: f64,
    pub kind: EdgeKind,
    pub index: u64,
    pub kappa: Kappa,
    pub collapsed: bool,
    pub d: f64,
    pub d_prime: f64,
}

/// `κ = L² / (4·sign(D)·D')` at an edge.
pub fn critical_kappa(record: &MonodromyRecord, tol: f64) -> Result<f64> {
    if (record.d.abs() - 2.0).abs() > 1e-6 {
        return Err(Error::Precondition(format!(
            "critical_kappa needs |D| = 2, got D({}) = {}",
            record.lambda, record.d
        )));
    }
    if record.d_prime.abs() < tol {
        return Err(Error::CollapsedGap { energy: record.lambda, d_prime: record.d_prime });
    }
    let l = record.period_length;
    Ok(l * l / (4.0 * record.d.signum() * record.d_prime))
}

#[derive(Debug, Clone, Copy)]
pub struct BandOptions {
    pub scan_points: usize,
    pub ode_tol: f64,
    pub root_tol: f64,
    /// `|D'|` below this at a root, or `||D| − 2|` below it squared at an
    /// extremum, marks a collapsed gap.
    pub collapse_tol: f64,
}

impl Default for BandOptions {
    fn default() -> Self {
        BandOptions { scan_points: 512, ode_tol: DEFAULT_MONODROMY_TOL, root_tol: 1e-13, collapse_tol: 1e-6 }
    }
}

/// Zeros of the Floquet solution per period at an edge.
fn floquet_zeros(coeffs: &Coefficients, rec: &MonodromyRecord, tol: f64) -> Result<u64> {
    let s = rec.d.signum();
    let [[a, b], [c, d]] = rec.m;
    let v1 = (b, s - a);
    let v2 = (s - d, c);
    let n1 = v1.0.hypot(v1.1);
    let n2 = v2.0.hypot(v2.1);
    let (u, pu) = if n1.max(n2) < 1e-8 { (0.0, 1.0) } else if n1 >= n2 { v1 } else { v2 };
    let th0 = Angle::from_radians(u.atan2(pu));
    let t = integrate_coefficients(coeffs, rec.lambda, 0.0, th0, 0.0, rec.period_length, tol)?;
    let adv = (t.theta_at(rec.period_length)? - th0).to_radians() / PI;
    Ok(adv.round().max(0.0) as u64)
}

fn bisect<F: Fn(f64) -> Result<f64>>(g: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut glo = g(lo)?;
    for _ in 0..200 {
        if hi - lo <= tol * (1.0 + lo.abs().max(hi.abs())) {
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

fn edge_from_record(
    coeffs: &Coefficients,
    rec: &MonodromyRecord,
    opts: &BandOptions,
) -> Result<BandEdge> {
    let increasing = rec.d.signum() * rec.d_prime > 0.0;
    let kind = if increasing { EdgeKind::LowerGapEdge } else { EdgeKind::UpperGapEdge };
    let j = floquet_zeros(coeffs, rec, opts.ode_tol.max(1e-11))?;
    let index = match (j, kind) {
        (0, _) => 0,
        (j, EdgeKind::LowerGapEdge) => 2 * j - 1,
        (j, EdgeKind::UpperGapEdge) => 2 * j,
    };
    let (kappa, collapsed) = match critical_kappa(rec, opts.collapse_tol) {
        Ok(k) => (Kappa::Finite(k), false),
        Err(Error::CollapsedGap { .. }) => (Kappa::Infinite, true),
        Err(e) => return Err(e),
    };
    Ok(BandEdge { e: rec.lambda, kind, index, kappa, collapsed, d: rec.d, d_prime: rec.d_prime })
}

/// All solutions of `D(λ) = ±2` in `[lambda_min, lambda_max]`, ascending.
///
/// Tangential solutions (a maximum of `|D|` touching 2) are reported as a
/// pair of collapsed edges with infinite κ.
pub fn band_edges(
    coeffs: &Coefficients,
    period_length: f64,
    lambda_min: f64,
    lambda_max: f64,
    opts: &BandOptions,
) -> Result<Vec<BandEdge>> {
    if !(lambda_min < lambda_max) || !lambda_min.is_finite() || !lambda_max.is_finite() {
        return Err(Error::Precondition("band scan needs a finite range lambda_min < lambda_max".into()));
    }
    let mono = |l: f64| monodromy(coeffs, period_length, l, opts.ode_tol);
    let mut recs = discriminant_scan(coeffs, period_length, lambda_min, lambda_max, opts.scan_points, opts.ode_tol)?;

    // refine near |D| = 2 and wherever an interval is not explained by at most one extremum
    for depth in 0..5 {
        let mut extra = Vec::new();
        for w in recs.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let near = (a.d.abs() - 2.0).abs() < 0.1 || (b.d.abs() - 2.0).abs() < 0.1;
            let one_sign = a.d_prime.signum() == b.d_prime.signum();
            let inconsistent = one_sign && (b.d - a.d) * a.d_prime < 0.0;
            if inconsistent || (near && depth == 0) {
                for i in 1..8 {
                    extra.push(a.lambda + (b.lambda - a.lambda) * i as f64 / 8.0);
                }
            }
        }
        if extra.is_empty() {
            break;
        }
        if depth == 4 {
            return Err(Error::ScanTooCoarse { lambda: extra[0] });
        }
        let more: Vec<MonodromyRecord> = extra.into_par_iter().map(mono).collect::<Result<_>>()?;
        recs.extend(more);
        recs.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    }

    // split at extrema of D
    let mut extrema = Vec::new();
    for w in recs.windows(2) {
        if w[0].d_prime.signum() != w[1].d_prime.signum() && w[0].d_prime != 0.0 && w[1].d_prime != 0.0 {
            let e = bisect(|l| Ok(mono(l)?.d_prime), w[0].lambda, w[1].lambda, opts.root_tol)?;
            extrema.push(mono(e)?);
        }
    }
    let mut pieces = recs.clone();
    pieces.extend(extrema.iter().copied());
    pieces.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));

    let mut edges = Vec::new();
    let mut collapsed_at = Vec::new();
    for ex in &extrema {
        if (ex.d.abs() - 2.0).abs() <= opts.collapse_tol * opts.collapse_tol {
            let j = floquet_zeros(coeffs, ex, opts.ode_tol.max(1e-11))?.max(1);
            for (kind, index) in [(EdgeKind::LowerGapEdge, 2 * j - 1), (EdgeKind::UpperGapEdge, 2 * j)] {
                edges.push(BandEdge {
                    e: ex.lambda,
                    kind,
                    index,
                    kappa: Kappa::Infinite,
                    collapsed: true,
                    d: ex.d,
                    d_prime: ex.d_prime,
                });
            }
            collapsed_at.push(ex.lambda);
        }
    }
    let near_collapsed = |l: f64| collapsed_at.iter().any(|c| (c - l).abs() < 1e-6 * (1.0 + c.abs()));

    let mut roots = Vec::new();
    for w in pieces.windows(2) {
        for s in [2.0, -2.0] {
            let (ga, gb) = (w[0].d - s, w[1].d - s);
            if ga == 0.0 {
                roots.push(w[0].lambda);
            } else if ga * gb < 0.0 {
                roots.push(bisect(|l| Ok(mono(l)?.d - s), w[0].lambda, w[1].lambda, opts.root_tol)?);
            }
        }
    }
    if let Some(last) = pieces.last() {
        if last.d.abs() == 2.0 {
            roots.push(last.lambda);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * (1.0 + b.abs()));
    for r in roots {
        if near_collapsed(r) {
            continue;
        }
        let rec = mono(r)?;
        edges.push(edge_from_record(coeffs, &rec, opts)?);
    }
    edges.sort_by(|a, b| a.e.total_cmp(&b.e).then(a.index.cmp(&b.index)));
    Ok(edges)
}
