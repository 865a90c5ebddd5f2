//! Dormand–Prince 5(4) with PI step control and Hairer's dense output.
//!
//! The right-hand side receives a [`Side`] so that piecewise coefficients are
//! sampled on the cell the step actually lives in; breakpoints and requested
//! stops are forced step boundaries.

use crate::coefficients::Side;
use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Controller settings.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5Options {
    /// Local error allowance per unit length (per step when `|h| > 1`).
    pub tol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Dopri5Options { tol: 1e-9, h_init: None, h_max: f64::INFINITY, max_steps: 50_000_000 }
    }
}

/// One accepted step with its dense-output polynomial.
#[derive(Debug, Clone, Copy)]
pub struct Step<const N: usize> {
    pub x0: f64,
    pub x1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    pub dense: [[f64; N]; 5],
}

impl<const N: usize> Step<N> {
    /// Fourth-order interpolant inside the step.
    pub fn interpolate(&self, x: f64) -> [f64; N] {
        if x == self.x1 {
            return self.y1;
        }
        if x == self.x0 {
            return self.y0;
        }
        let s = (x - self.x0) / (self.x1 - self.x0);
        let s1 = 1.0 - s;
        let r = &self.dense;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])));
        }
        out
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

/// Integrates `y' = f(x, y)` from `x0` to `x1` (either direction).
///
/// `next_break(x, forward)` returns the next coefficient breakpoint, `stops`
/// lists additional forced boundaries, `scale` weights each component's
/// error. After every accepted step `on_step` may rewrite the new state (for
/// example to renormalize an angle) provided it leaves `f` unchanged.
#[allow(clippy::too_many_arguments)]
pub fn integrate<const N: usize, F, B, S>(
    mut f: F,
    x0: f64,
    y0: [f64; N],
    x1: f64,
    next_break: B,
    stops: &[f64],
    scale: [f64; N],
    opts: &Dopri5Options,
    mut on_step: S,
) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N], Side) -> Result<[f64; N]>,
    B: Fn(f64, bool) -> Option<f64>,
    S: FnMut(&Step<N>, &mut [f64; N]),
{
    if x0 == x1 {
        return Ok(y0);
    }
    let forward = x1 > x0;
    let dir = if forward { 1.0 } else { -1.0 };
    let (side_start, side_inner) = if forward { (Side::Right, Side::Left) } else { (Side::Left, Side::Right) };
    let mut stop_iter = stops
        .iter()
        .copied()
        .filter(|s| if forward { *s > x0 && *s < x1 } else { *s < x0 && *s > x1 })
        .peekable();

    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y, side_start)?;
    let mut h = opts.h_init.unwrap_or_else(|| {
        let n = (0..N).map(|i| (k1[i] / scale[i]).abs()).fold(0.0, f64::max);
        let guess = if n > 0.0 { 0.01 / n } else { 0.1 };
        guess.clamp(1e-6, 1.0)
    });
    h = h.min(opts.h_max).min((x1 - x0).abs());
    let mut err_prev: f64 = 1e-4;
    let mut steps = 0usize;

    while x != x1 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::StepUnderflow { x, h });
        }
        // next forced boundary
        let mut target = x1;
        while let Some(&s) = stop_iter.peek() {
            if (s - x) * dir <= 0.0 {
                stop_iter.next();
            } else {
                break;
            }
        }
        if let Some(&s) = stop_iter.peek() {
            if (s - target) * dir < 0.0 {
                target = s;
            }
        }
        if let Some(b) = next_break(x, forward) {
            if (b - target) * dir < 0.0 {
                target = b;
            }
        }
        let remaining = (target - x).abs();
        let mut hit = false;
        if h >= remaining {
            h = remaining;
            hit = true;
        } else if h > 0.5 * remaining {
            // avoid a sliver step before the boundary
            h = 0.5 * remaining;
        }
        let hs = h * dir;
        let x_new = if hit { target } else { x + hs };
        if x_new == x {
            return Err(Error::StepUnderflow { x, h });
        }

        let k2 = f(x + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]), side_inner)?;
        let k3 = f(x + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]), side_inner)?;
        let k4 = f(x + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]), side_inner)?;
        let k5 = f(
            x + C5 * hs,
            &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            side_inner,
        )?;
        let k6 = f(
            x_new,
            &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            side_inner,
        )?;
        let y_new = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(x_new, &y_new, side_inner)?;

        let allowance = opts.tol * h.min(1.0);
        let mut err: f64 = 0.0;
        for i in 0..N {
            let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            err = err.max((e / (scale[i] * allowance)).abs());
        }
        if !err.is_finite() {
            err = 1e10;
        }

        if err <= 1.0 {
            let mut dense = [[0.0; N]; 5];
            for i in 0..N {
                let dy = y_new[i] - y[i];
                let bspl = hs * k1[i] - dy;
                dense[0][i] = y[i];
                dense[1][i] = dy;
                dense[2][i] = bspl;
                dense[3][i] = dy - hs * k7[i] - bspl;
                dense[4][i] =
                    hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let step = Step { x0: x, x1: x_new, y0: y, y1: y_new, dense };
            let mut y_next = y_new;
            on_step(&step, &mut y_next);
            let breakpoint_hit = hit && target != x1 && next_break(x, forward) == Some(target);
            x = x_new;
            y = y_next;
            k1 = if breakpoint_hit { f(x, &y, side_start)? } else { k7 };
            let fac = (0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0)).clamp(0.2, 5.0);
            err_prev = err.max(1e-4);
            if !hit {
                h *= fac;
            } else {
                h = (h * fac).max(h);
            }
            h = h.min(opts.h_max);
        } else {
            let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            h *= fac;
            if h < 1e-14 * x.abs().max(1.0) {
                return Err(Error::StepUnderflow { x, h });
            }
        }
    }
    Ok(y)
}
