//! Interspike-interval sequences and their distributions.
//!
//! The interspike intervals along an orbit are the values of the displacement
//! function `Psi(t) = Phi(t) - t` at the firing times. When the rotation number
//! is irrational the orbit phases equidistribute with respect to the unique
//! invariant measure, so the long-run empirical ISI distribution converges to
//! the push-forward of that measure by `Psi`. For the perfect integrator the
//! invariant density and the push-forward density are explicit.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::firing::{IFSystem, Orbit, Regime};
use crate::rotation;
use crate::signal::PeriodicSignal;
use crate::solve;

/// Samples inspected by the recurrence check after the burn-in.
pub const DEFAULT_RECURRENCE_WINDOW: usize = 4096;
pub const DEFAULT_BURN_IN: usize = 1000;
pub const DEFAULT_BINS: usize = 200;
/// Distance from a critical value of `Psi` at which a density point is
/// flagged singular.
pub const CRITICAL_VALUE_TOL: f64 = 1e-6;
/// A perfect-integrator rotation number within this distance of a fraction
/// with denominator at most [`RATIONAL_Q_MAX`] is treated as rational.
pub const RATIONAL_TOL: f64 = 1e-9;
pub const RATIONAL_Q_MAX: u64 = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct IsiSeq {
    pub values: Vec<f64>,
}

impl IsiSeq {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The sequence with the first `n` intervals dropped.
    pub fn after(&self, n: usize) -> IsiSeq {
        IsiSeq {
            values: self.values[n.min(self.values.len())..].to_vec(),
        }
    }
}

/// Successive differences of the firing times, starting with `t_1 - t_0`.
pub fn isi_sequence(orbit: &Orbit) -> Result<IsiSeq> {
    if orbit.times.is_empty() {
        return Err(Error::InsufficientData { needed: 1, have: 0 });
    }
    let values: Vec<f64> = std::iter::once(orbit.t0)
        .chain(orbit.times.iter().copied())
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| w[1] - w[0])
        .collect();
    Ok(IsiSeq { values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Regularity {
    Periodic {
        q: usize,
    },
    AsymptoticallyPeriodic {
        q: usize,
    },
    /// Every value recurs within `n_bound` steps, over a window of `window`
    /// samples after the burn-in.
    AlmostStronglyRecurrent {
        n_bound: usize,
        window: usize,
    },
    Unclassified,
}

/// Finite-sample regularity test with the default recurrence window.
pub fn classify_regularity(isi: &IsiSeq, q: usize, eps: f64, burn_in: usize) -> Result<Regularity> {
    classify_regularity_in(isi, q, eps, burn_in, DEFAULT_RECURRENCE_WINDOW)
}

/// Periodic when `|ISI_{n+q} - ISI_n| < eps` for all `n`; asymptotically
/// periodic when that holds only from `burn_in` on. Otherwise checks almost
/// strong recurrence on `window` samples after the burn-in: each value must
/// come back within `eps` at bounded gaps, and the largest gap is reported.
/// A value that does not recur within the first half of the window, or a gap
/// longer than half the window, leaves the sequence unclassified.
pub fn classify_regularity_in(isi: &IsiSeq, q: usize, eps: f64, burn_in: usize, window: usize) -> Result<Regularity> {
    if q == 0 {
        return Err(Error::InvalidArgument("period must be >= 1".into()));
    }
    let x = &isi.values;
    let needed = burn_in + 4 * q;
    if x.len() < needed {
        return Err(Error::InsufficientData { needed, have: x.len() });
    }
    let periodic_from = |start: usize| (start..x.len() - q).all(|n| (x[n + q] - x[n]).abs() < eps);
    if periodic_from(0) {
        return Ok(Regularity::Periodic { q });
    }
    if periodic_from(burn_in) {
        return Ok(Regularity::AsymptoticallyPeriodic { q });
    }

    let end = x.len().min(burn_in.saturating_add(window));
    let y = &x[burn_in..end];
    let half = y.len() / 2;
    let mut n_bound = 0usize;
    for n in 0..y.len() {
        let mut prev = n;
        let mut max_gap = 0usize;
        for (j, v) in y.iter().enumerate().skip(n + 1) {
            if (v - y[n]).abs() < eps {
                max_gap = max_gap.max(j - prev);
                prev = j;
            }
        }
        if prev == n {
            if n < half {
                return Ok(Regularity::Unclassified);
            }
            continue;
        }
        n_bound = n_bound.max(max_gap - 1);
    }
    if n_bound > half {
        return Ok(Regularity::Unclassified);
    }
    Ok(Regularity::AlmostStronglyRecurrent {
        n_bound,
        window: y.len(),
    })
}

fn nonneg_mean(signal: &PeriodicSignal) -> Result<f64> {
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

/// Density `f(t) / ∫_0^1 f` of the perfect integrator's invariant measure.
pub fn pi_invariant_density(signal: &PeriodicSignal, t: f64) -> Result<f64> {
    Ok(signal.eval(t) / nonneg_mean(signal)?)
}

/// `max |∫_a^b f - ∫_{Phi(a)}^{Phi(b)} f|` over the intervals, for the
/// perfect integrator driven by `signal`.
pub fn check_measure_invariance(signal: &PeriodicSignal, intervals: &[(f64, f64)]) -> Result<f64> {
    let sys = IFSystem::perfect(signal.clone())?;
    intervals.iter().try_fold(0.0f64, |worst, &(a, b)| {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let before = signal.integral(a, b);
        let after = signal.integral(sys.firing_time(a)?, sys.firing_time(b)?);
        Ok(worst.max((before - after).abs()))
    })
}

/// The displacement `Psi(t) = Phi(t) - t`; 1-periodic.
#[derive(Debug, Clone, Copy)]
pub struct Displacement<'a> {
    pub system: &'a IFSystem,
}

impl Displacement<'_> {
    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.system.firing_time(t)? - t)
    }
}

/// `[min Psi, max Psi]` over one period: grid scan refined by golden-section
/// search around the grid extrema.
pub fn displacement_range(system: &IFSystem, grid_size: usize) -> Result<(f64, f64)> {
    if system.regime() != Regime::StrictLif {
        return Err(Error::IllPosed(
            "displacement range needs a continuous firing map (strict regime)".into(),
        ));
    }
    let psi = Displacement { system };
    let n = grid_size.max(3);
    let h = 1.0 / n as f64;
    let vals = (0..n).map(|i| psi.eval(i as f64 * h)).collect::<Result<Vec<_>>>()?;
    let arg =
        |better: fn(f64, f64) -> bool| (1..n).fold(0, |best, i| if better(vals[i], vals[best]) { i } else { best });
    let imin = arg(|a, b| a < b);
    let imax = arg(|a, b| a > b);
    let eval = |t: f64| psi.eval(t).unwrap_or(f64::NAN);
    let around = |i: usize| ((i as f64 - 1.0) * h, (i as f64 + 1.0) * h);
    let (a, b) = around(imin);
    let (_, lo) = solve::golden_min(eval, a, b);
    let (a, b) = around(imax);
    let (_, neg_hi) = solve::golden_min(|t| -eval(t), a, b);
    let lo = lo.min(vals[imin]);
    let hi = (-neg_hi).max(vals[imax]);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::NoConvergence("displacement extrema".into()));
    }
    Ok((lo, hi))
}

/// Equally weighted atoms at the sorted samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDist {
    samples: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bins: Vec<HistBin>,
    /// Samples falling outside the binned range.
    pub outside: usize,
}

impl Histogram {
    pub fn occupied(&self) -> usize {
        self.bins.iter().filter(|b| b.count > 0).count()
    }

    /// Empty bins lying between the first and last occupied bin.
    pub fn interior_gaps(&self) -> usize {
        let first = self.bins.iter().position(|b| b.count > 0);
        let last = self.bins.iter().rposition(|b| b.count > 0);
        match (first, last) {
            (Some(f), Some(l)) => self.bins[f..=l].iter().filter(|b| b.count == 0).count(),
            _ => 0,
        }
    }

    pub fn write_csv(&self, mut w: impl Write, fmt: impl Fn(f64) -> String) -> std::io::Result<()> {
        writeln!(w, "bin_left,bin_right,count,frequency")?;
        for b in &self.bins {
            writeln!(w, "{},{},{},{}", fmt(b.left), fmt(b.right), b.count, fmt(b.frequency))?;
        }
        Ok(())
    }
}

/// A run of samples within a merge tolerance of each other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cluster {
    pub center: f64,
    pub count: usize,
}

impl EmpiricalDist {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalDist { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.samples[0]
    }

    pub fn max(&self) -> f64 {
        self.samples[self.samples.len() - 1]
    }

    /// Right-continuous `#{x_i <= x} / n`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 / self.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        let var = self.samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / self.len() as f64;
        var.sqrt()
    }

    /// `bins` equal-width bins over `[lo, hi]`; the last bin is closed.
    pub fn histogram(&self, lo: f64, hi: f64, bins: usize) -> Histogram {
        let bins = bins.max(1);
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        let mut outside = 0;
        for &x in &self.samples {
            if x < lo || x > hi {
                outside += 1;
                continue;
            }
            let idx = if width > 0.0 { ((x - lo) / width) as usize } else { 0 };
            counts[idx.min(bins - 1)] += 1;
        }
        let n = self.len() as f64;
        Histogram {
            bins: counts
                .into_iter()
                .enumerate()
                .map(|(i, count)| HistBin {
                    left: lo + i as f64 * width,
                    right: if i + 1 == bins { hi } else { lo + (i + 1) as f64 * width },
                    count,
                    frequency: count as f64 / n,
                })
                .collect(),
            outside,
        }
    }

    /// Groups sorted samples, starting a new cluster at every gap larger than
    /// `tol`.
    pub fn clusters(&self, tol: f64) -> Vec<Cluster> {
        let mut out: Vec<(f64, usize, f64)> = Vec::new();
        for &x in &self.samples {
            match out.last_mut() {
                Some((sum, count, last)) if x - *last <= tol => {
                    *sum += x;
                    *count += 1;
                    *last = x;
                }
                _ => out.push((x, 1, x)),
            }
        }
        out.into_iter()
            .map(|(sum, count, _)| Cluster {
                center: sum / count as f64,
                count,
            })
            .collect()
    }

    /// Kolmogorov-Smirnov distance to a continuous CDF.
    pub fn ks_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.len() as f64;
        self.samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Empirical distribution of the intervals.
pub fn empirical_isi_dist(isi: &IsiSeq) -> Result<EmpiricalDist> {
    EmpiricalDist::new(isi.values.clone())
}

/// Default histogram range: `range` padded by 1% on both sides. A range
/// narrower than `1e-6` relative to its magnitude is widened unevenly, so that
/// a single atom lands inside one bin instead of on the middle bin edge.
pub fn padded_range((lo, hi): (f64, f64)) -> (f64, f64) {
    let floor = 1e-6 * lo.abs().max(hi.abs()).max(1.0);
    let pad = 0.01 * (hi - lo);
    if pad < floor {
        (lo - floor, hi + 2.0 * floor)
    } else {
        (lo - pad, hi + pad)
    }
}

/// Fortet-Mourier (Kantorovich-Rubinstein) distance between two empirical
/// distributions on the line: the area between their CDFs.
pub fn fortet_mourier(d1: &EmpiricalDist, d2: &EmpiricalDist) -> f64 {
    let (a, b) = (&d1.samples, &d2.samples);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = a[0].min(b[0]);
    let mut area = 0.0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        area += (i as f64 / na - j as f64 / nb).abs() * (x - prev);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        prev = x;
    }
    area
}

/// Interspike-interval density sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    /// Grid points within [`CRITICAL_VALUE_TOL`] of a critical value of `Psi`.
    pub singular: Vec<bool>,
    /// Number of solutions of `Psi(t) = y` found in `[0, 1)`.
    pub roots: Vec<usize>,
    pub support: (f64, f64),
    pub critical_values: Vec<f64>,
}

impl DensityCurve {
    fn regular(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid
            .iter()
            .zip(&self.density)
            .zip(&self.singular)
            .filter(|((_, d), s)| !**s && d.is_finite())
            .map(|((y, d), _)| (*y, *d))
    }

    /// Trapezoid integral over the non-singular grid points.
    pub fn integral(&self) -> f64 {
        self.cdf().last().map(|p| p.1).unwrap_or(0.0)
    }

    /// Cumulative trapezoid integral at the non-singular grid points.
    pub fn cdf(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.grid.len());
        let mut acc = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for (y, d) in self.regular() {
            if let Some((py, pd)) = prev {
                acc += 0.5 * (d + pd) * (y - py);
            }
            out.push((y, acc));
            prev = Some((y, d));
        }
        out
    }

    pub fn write_csv(&self, mut w: impl Write, fmt: impl Fn(f64) -> String) -> std::io::Result<()> {
        writeln!(w, "y,delta")?;
        for (y, d) in self.grid.iter().zip(&self.density) {
            writeln!(w, "{},{}", fmt(*y), fmt(*d))?;
        }
        Ok(())
    }
}

/// `n` Chebyshev points of the first kind on `(lo, hi)`, ascending. They
/// cluster at the ends, where the density has square-root singularities.
pub fn chebyshev_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    (0..n)
        .map(|j| mid - half * (std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos())
        .collect()
}

/// Perfect-integrator ISI density
/// `Delta(y) = Σ_{Psi(t) = y} f(t)/∫f * f(Phi(t)) / |f(t) - f(Phi(t))|`.
///
/// Requires a trigonometric-polynomial input that is strictly positive and an
/// irrational rotation number `1/∫f` (checked against fractions with
/// denominator up to [`RATIONAL_Q_MAX`]).
pub fn isi_density_pi(signal: &PeriodicSignal, y_grid: &[f64], root_grid_size: usize) -> Result<DensityCurve> {
    let sys = pi_density_system(signal)?;
    let rho = 1.0 / signal.mean();
    let (p, q) = *rotation::convergents(rho, RATIONAL_Q_MAX).last().expect("integer part");
    if (rho - p as f64 / q as f64).abs() < RATIONAL_TOL {
        return Err(Error::RationalRotation(rho));
    }
    pi_isi_density(&sys, y_grid, root_grid_size)
}

fn pi_density_system(signal: &PeriodicSignal) -> Result<IFSystem> {
    if !matches!(signal, PeriodicSignal::Trig(_)) {
        return Err(Error::IllPosed(
            "the density formula needs a continuously differentiable (trigonometric) input".into(),
        ));
    }
    let sys = IFSystem::perfect(signal.clone())?;
    if sys.regime() != Regime::StrictLif {
        return Err(Error::IllPosed("the density formula needs f > 0 everywhere".into()));
    }
    Ok(sys)
}

/// The density formula of [`isi_density_pi`] without the rationality check.
/// For a rational rotation number the result is the ISI distribution of the
/// conjugacy-transported Lebesgue measure, which single orbits do not sample.
pub fn pi_isi_density(sys: &IFSystem, y_grid: &[f64], root_grid_size: usize) -> Result<DensityCurve> {
    if !sys.is_perfect_integrator() {
        return Err(Error::InvalidArgument("perfect integrator expected".into()));
    }
    let f = sys.signal();
    let mean = f.mean();
    let n = root_grid_size.max(8);
    let ts: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let phis = ts.iter().map(|&t| sys.firing_time(t)).collect::<Result<Vec<_>>>()?;
    let psi: Vec<f64> = ts.iter().zip(&phis).map(|(t, p)| p - t).collect();
    let slope = |t: f64, phi: f64| f.eval(t) / f.eval(phi) - 1.0;
    let dpsi: Vec<f64> = ts.iter().zip(&phis).map(|(&t, &p)| slope(t, p)).collect();
    if dpsi.iter().all(|d| d.abs() < 1e-12) {
        return Err(Error::NoDensity(
            "the displacement is constant; the ISI distribution is a single atom".into(),
        ));
    }

    let psi_at = |t: f64| sys.firing_time(t).map(|p| p - t).unwrap_or(f64::NAN);
    let dpsi_at = |t: f64| sys.firing_time(t).map(|p| slope(t, p)).unwrap_or(f64::NAN);
    let mut critical_values = Vec::new();
    for i in 0..n {
        if dpsi[i] == 0.0 {
            critical_values.push(psi[i]);
        } else if (dpsi[i] < 0.0) != (dpsi[i + 1] < 0.0) && dpsi[i + 1] != 0.0 {
            let c = solve::bisect_sign_change(dpsi_at, ts[i], ts[i + 1], 0.0);
            critical_values.push(psi_at(c));
        }
    }
    let lo = psi
        .iter()
        .chain(&critical_values)
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = psi
        .iter()
        .chain(&critical_values)
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);

    let mut density = Vec::with_capacity(y_grid.len());
    let mut singular = Vec::with_capacity(y_grid.len());
    let mut roots = Vec::with_capacity(y_grid.len());
    for &y in y_grid {
        singular.push(critical_values.iter().any(|v| (y - v).abs() < CRITICAL_VALUE_TOL));
        if y < lo || y > hi {
            density.push(0.0);
            roots.push(0);
            continue;
        }
        let mut sum = 0.0;
        let mut count = 0;
        for i in 0..n {
            let a = psi[i] - y;
            let b = psi[i + 1] - y;
            let t = if a == 0.0 {
                ts[i]
            } else if (a < 0.0) != (b < 0.0) && b != 0.0 {
                solve::bisect_sign_change(|t| psi_at(t) - y, ts[i], ts[i + 1], 0.0)
            } else {
                continue;
            };
            let phi = sys.firing_time(t)?;
            let (ft, fphi) = (f.eval(t), f.eval(phi));
            sum += ft / mean * fphi / (ft - fphi).abs();
            count += 1;
        }
        density.push(sum);
        roots.push(count);
    }
    Ok(DensityCurve {
        grid: y_grid.to_vec(),
        density,
        singular,
        roots,
        support: (lo, hi),
        critical_values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub sup_phi_dev: f64,
    pub sup_dphi_dev: f64,
    #[serde(rename = "d_F_isi")]
    pub d_f_isi: f64,
}

/// Distance between a strict base system and a perturbation: sup-norm gaps of
/// `Phi` and `Phi'` over a grid on `[0, 1]` (enough by the lift property), and
/// the Fortet-Mourier distance between ISI distributions of runs of length
/// `orbit_len` from `t0 = 0`.
pub fn perturbation_harness(
    base: &IFSystem,
    perturbed: &IFSystem,
    grid_size: usize,
    orbit_len: usize,
) -> Result<PerturbationReport> {
    if base.regime() != Regime::StrictLif {
        return Err(Error::IllPosed("the base system must be in the strict regime".into()));
    }
    let n = grid_size.max(1);
    let mut sup_phi: f64 = 0.0;
    let mut sup_dphi: f64 = 0.0;
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let (pb, pp) = (base.firing_time(t)?, perturbed.firing_time(t)?);
        sup_phi = sup_phi.max((pb - pp).abs());
        let (db, dp) = (base.derivative_at(t, pb)?, perturbed.derivative_at(t, pp)?);
        sup_dphi = sup_dphi.max((db - dp).abs());
    }
    let dist =
        |s: &IFSystem| -> Result<EmpiricalDist> { empirical_isi_dist(&isi_sequence(&s.iterate(0.0, orbit_len)?)?) };
    let d_f_isi = fortet_mourier(&dist(base)?, &dist(perturbed)?);
    Ok(PerturbationReport {
        sup_phi_dev: sup_phi,
        sup_dphi_dev: sup_dphi,
        d_f_isi,
    })
}
