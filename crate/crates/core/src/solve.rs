//! Bracketed root finding for monotone functions.

use crate::error::{Error, Result};

const MAX_BISECTIONS: usize = 400;
const MAX_NEWTON: usize = 20;
/// Bracket width at which bisection hands over to Newton.
const NEWTON_HANDOVER: f64 = 1e-6;

/// Smallest meaningful bracket width around `x`.
fn resolution(x: f64) -> f64 {
    (4.0 * f64::EPSILON * x.abs()).max(1e-13)
}

/// Root of a non-decreasing `g` with `g(lo) < 0 <= g(hi)`.
///
/// Bisects down to a 1e-6 bracket, then takes up to 20 Newton steps with the
/// supplied derivative. Any step that leaves the bracket or fails to converge
/// drops back to plain bisection.
pub(crate) fn increasing_root(
    g: impl Fn(f64) -> f64,
    dg: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64> {
    let mut iters = 0;
    while hi - lo > NEWTON_HANDOVER {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
        if iters > MAX_BISECTIONS {
            return Err(Error::NoConvergence(format!("bisection stalled on [{lo}, {hi}]")));
        }
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_NEWTON {
        let gx = g(x);
        if gx == 0.0 {
            return Ok(x);
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = dg(x);
        let next = x - gx / d;
        if !next.is_finite() || next < lo || next > hi {
            break;
        }
        if (next - x).abs() <= resolution(x) {
            return Ok(next);
        }
        x = next;
    }

    leftmost_crossing(g, lo, hi)
}

/// Smallest `s` in `(lo, hi]` with `g(s) >= 0`, for non-decreasing `g` with
/// `g(lo) < 0 <= g(hi)`. On a plateau at zero this returns the plateau's left
/// end.
pub(crate) fn leftmost_crossing(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= resolution(hi) {
            return Ok(hi);
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(hi);
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence(format!("bisection stalled on [{lo}, {hi}]")))
}

/// Root of a continuous `g` on `[a, b]` with a sign change, by bisection.
/// Stops early once `|g| <= ftol`.
pub(crate) fn bisect_sign_change(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, ftol: f64) -> f64 {
    let mut ga = g(a);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (a + b);
        if b - a <= resolution(mid) || mid <= a || mid >= b {
            return mid;
        }
        let gm = g(mid);
        if gm.abs() <= ftol {
            return mid;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Golden-section search for the minimum of a unimodal `h` on `[a, b]`.
pub(crate) fn golden_min(h: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut hc = h(c);
    let mut hd = h(d);
    for _ in 0..100 {
        if b - a <= resolution(b) {
            break;
        }
        if hc < hd {
            b = d;
            d = c;
            hd = hc;
            c = b - inv_phi * (b - a);
            hc = h(c);
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + inv_phi * (b - a);
            hd = h(d);
        }
    }
    if hc < hd {
        (c, hc)
    } else {
        (d, hd)
    }
}
