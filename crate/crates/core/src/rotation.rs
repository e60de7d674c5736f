//! Rotation numbers, phase locking and parameter scans.
//!
//! For the lift `Phi` of a circle homeomorphism, `|Phi^n(t) - t - n rho| < 1`
//! for every `t` and `n`, so `(Phi^n(t) - t) / n` estimates the rotation
//! number `rho` with a guaranteed error below `1/n`.
//!
//! Locking is reported as a pair `(p, q)` with `Phi^q(t) = t + p` on a
//! periodic orbit, i.e. `rho = p/q`: `q` spikes every `p` forcing periods.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::firing::{IFSystem, Regime};
use crate::signal::PeriodicSignal;
use crate::solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RotationMethod {
    IterateBound,
    PiClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotationEstimate {
    pub value: f64,
    pub error_bound: f64,
    pub n_iterates: usize,
    pub method: RotationMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LockingResult {
    pub locked: bool,
    pub p: i64,
    pub q: u64,
    /// Smallest `|Phi^q(t) - t - p|` found; the periodic-orbit witness.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockingConfig {
    pub q_max: u64,
    pub grid_size: usize,
    /// Accuracy of the rotation estimate; sets the number of iterates.
    pub rotation_tol: f64,
    /// Largest periodic-orbit residual accepted as a witness.
    pub residual_tol: f64,
}

impl Default for LockingConfig {
    fn default() -> Self {
        LockingConfig {
            q_max: 64,
            grid_size: 256,
            rotation_tol: 1e-6,
            residual_tol: 1e-8,
        }
    }
}

impl LockingConfig {
    /// Iterates needed for `1/n < rotation_tol`.
    pub fn iterates(&self) -> usize {
        (1.0 / self.rotation_tol).ceil() as usize + 1
    }
}

/// `(Phi^n(t0) - t0) / n` with error bound `1/n`.
pub fn rotation_number(system: &IFSystem, t0: f64, n: usize) -> Result<RotationEstimate> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one iterate".into()));
    }
    let end = system.advance(t0, n)?;
    Ok(RotationEstimate {
        value: (end - t0) / n as f64,
        error_bound: 1.0 / n as f64,
        n_iterates: n,
        method: RotationMethod::IterateBound,
    })
}

/// Closed form for the perfect integrator: `rho = 1 / ∫_0^1 f`.
pub fn pi_rotation(signal: &PeriodicSignal) -> Result<RotationEstimate> {
    let mean = signal.mean();
    if !(mean > 0.0) {
        return Err(Error::IllPosed(format!(
            "perfect integrator input has non-positive mean {mean:.6e}"
        )));
    }
    let value = 1.0 / mean;
    Ok(RotationEstimate {
        value,
        error_bound: 4.0 * f64::EPSILON * value,
        n_iterates: 0,
        method: RotationMethod::PiClosedForm,
    })
}

fn require_nonneg(signal: &PeriodicSignal) -> Result<f64> {
    let b = signal.essential_bounds(0.0);
    if b.lower < -1e-12 {
        return Err(Error::IllPosed(format!(
            "input takes negative values (ess inf f = {:.6e})",
            b.lower
        )));
    }
    let mean = signal.mean();
    if !(mean > 0.0) {
        return Err(Error::IllPosed(format!("input has non-positive mean {mean:.6e}")));
    }
    Ok(mean)
}

/// `Gamma(t) = ∫_0^t f / ∫_0^1 f`, the conjugacy of the perfect integrator's
/// firing map to the rigid rotation.
pub fn pi_conjugacy(signal: &PeriodicSignal, t: f64) -> Result<f64> {
    let mean = require_nonneg(signal)?;
    let num = if t >= 0.0 {
        signal.integral(0.0, t)
    } else {
        -signal.integral(t, 0.0)
    };
    Ok(num / mean)
}

/// Continued-fraction convergents `p/q` of `x` with `q <= q_max`.
pub fn convergents(x: f64, q_max: u64) -> Vec<(i64, u64)> {
    let mut out = Vec::new();
    if !x.is_finite() {
        return out;
    }
    // h/k recurrences seeded with 1/0 and 0/1
    let (mut h_prev, mut h) = (1i128, x.floor() as i128);
    let (mut k_prev, mut k) = (0i128, 1i128);
    out.push((h as i64, k as u64));
    let mut frac = x - x.floor();
    for _ in 0..64 {
        if frac.abs() < 1e-15 {
            break;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv - a;
        let a = a as i128;
        let (h_next, k_next) = (a * h + h_prev, a * k + k_prev);
        if k_next > q_max as i128 {
            break;
        }
        h_prev = h;
        h = h_next;
        k_prev = k;
        k = k_next;
        out.push((h as i64, k as u64));
    }
    out
}

/// Smallest `|Phi^q(t) - t - p|` over a uniform grid on `[0, 1]`, refined by
/// bisection inside every sign change.
pub fn periodic_residual(system: &IFSystem, p: i64, q: u64, grid_size: usize, tol: f64) -> Result<f64> {
    let g = |t: f64| -> Result<f64> { Ok(system.advance(t, q as usize)? - t - p as f64) };
    let n = grid_size.max(2);
    let vals = (0..=n).map(|i| g(i as f64 / n as f64)).collect::<Result<Vec<_>>>()?;
    let mut best = vals.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if best < tol {
        return Ok(best);
    }
    for i in 0..n {
        let (a, b) = (vals[i], vals[i + 1]);
        if (a < 0.0) == (b < 0.0) {
            continue;
        }
        let lo = i as f64 / n as f64;
        let hi = (i + 1) as f64 / n as f64;
        // g is continuous for strict systems; errors inside are treated as misses
        let h = |t: f64| g(t).unwrap_or(f64::NAN);
        let root = solve::bisect_sign_change(h, lo, hi, tol * 1e-3);
        let r = g(root)?.abs();
        best = best.min(r);
        if best < tol {
            break;
        }
    }
    Ok(best)
}

/// Estimates `rho`, picks the continued-fraction convergent with `q <= q_max`
/// consistent with the estimate, and declares locking only when a periodic
/// orbit `Phi^q(t) = t + p` is witnessed within `residual_tol`.
pub fn detect_locking(system: &IFSystem, cfg: &LockingConfig) -> Result<LockingResult> {
    let est = rotation_number(system, 0.0, cfg.iterates())?;
    detect_locking_from(system, &est, cfg)
}

/// [`detect_locking`] with a precomputed rotation estimate.
pub fn detect_locking_from(system: &IFSystem, est: &RotationEstimate, cfg: &LockingConfig) -> Result<LockingResult> {
    let conv = convergents(est.value, cfg.q_max);
    let (p, q) = *conv.last().expect("at least the integer part");
    let consistent = (est.value - p as f64 / q as f64).abs() <= est.error_bound + 1e-12;
    let residual = periodic_residual(system, p, q, cfg.grid_size, cfg.residual_tol)?;
    Ok(LockingResult {
        locked: consistent && residual < cfg.residual_tol,
        p,
        q,
        residual,
    })
}

/// One point of a rotation-number scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub param: f64,
    pub result: std::result::Result<(RotationEstimate, Option<LockingResult>), String>,
}

/// Rotation number at each parameter value, computed in parallel and returned
/// in parameter order. Failures are recorded per point.
pub fn staircase_scan<F>(family: F, params: &[f64], n: usize, locking: Option<&LockingConfig>) -> Vec<ScanPoint>
where
    F: Fn(f64) -> Result<IFSystem> + Sync,
{
    let mut points: Vec<ScanPoint> = params
        .par_iter()
        .map(|&param| {
            let result = family(param)
                .and_then(|sys| {
                    let est = rotation_number(&sys, 0.0, n)?;
                    let lock = locking.map(|cfg| detect_locking_from(&sys, &est, cfg)).transpose()?;
                    Ok((est, lock))
                })
                .map_err(|e| e.to_string());
            ScanPoint { param, result }
        })
        .collect();
    points.sort_by(|a, b| a.param.total_cmp(&b.param));
    points
}

pub const SCAN_CSV_HEADER: &str = "param,rho,error_bound,locked,p,q,residual,error";

/// Writes `param,rho,error_bound,locked,p,q,residual,error`; fields that do
/// not apply are left empty.
pub fn write_scan_csv(mut w: impl Write, points: &[ScanPoint], fmt: impl Fn(f64) -> String) -> std::io::Result<()> {
    writeln!(w, "{SCAN_CSV_HEADER}")?;
    for pt in points {
        match &pt.result {
            Ok((est, lock)) => {
                let (locked, p, q, res) = match lock {
                    Some(l) => (l.locked.to_string(), l.p.to_string(), l.q.to_string(), fmt(l.residual)),
                    None => Default::default(),
                };
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},",
                    fmt(pt.param),
                    fmt(est.value),
                    fmt(est.error_bound),
                    locked,
                    p,
                    q,
                    res
                )?;
            }
            Err(msg) => {
                writeln!(w, "{},,,,,,,\"{}\"", fmt(pt.param), msg.replace('"', "'"))?;
            }
        }
    }
    Ok(())
}

/// Empirical conjugacy: `Gamma(t)` as the fraction of the orbit phases
/// `Phi^i(t0) mod 1`, `0 <= i < n`, lying in `[0, t]`.
///
/// The estimate is only meaningful for irrational rotation numbers; unless
/// `skip_locking_check` is set the system is first tested for locking with the
/// default [`LockingConfig`].
pub fn estimate_conjugacy(
    system: &IFSystem,
    t0: f64,
    n: usize,
    grid: &[f64],
    skip_locking_check: bool,
) -> Result<Vec<f64>> {
    if system.regime() == Regime::NonnegPi && system.signal().essential_bounds(0.0).lower <= 0.0 {
        return Err(Error::IllPosed(
            "empirical conjugacy needs a strictly positive input".into(),
        ));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one orbit point".into()));
    }
    if !skip_locking_check {
        let lock = detect_locking(system, &LockingConfig::default())?;
        if lock.locked {
            return Err(Error::Locked { p: lock.p, q: lock.q });
        }
    }
    let mut phases = Vec::with_capacity(n);
    let mut t = t0;
    for _ in 0..n {
        phases.push(t - t.floor());
        t = system.firing_time(t)?;
    }
    phases.sort_by(f64::total_cmp);
    Ok(grid
        .iter()
        .map(|&x| phases.partition_point(|&p| p <= x) as f64 / n as f64)
        .collect())
}
