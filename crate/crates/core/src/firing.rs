//! The firing map and its iterates.
//!
//! For `x' = -sigma x + f(t)` started from the reset value 0 at time `t`, the
//! next firing time is
//!
//! ```text
//! Phi(t) = inf { s > t : ∫_t^s [f(u) - sigma] e^{sigma (u - t)} du >= 1 }
//! ```
//!
//! which is the threshold condition rewritten through the explicit solution of
//! the linear equation. The implicit equation is solved directly; there is no
//! time stepping.

use crate::error::{Error, Result};
use crate::signal::{split, EssentialBounds, PeriodicSignal};
use crate::solve;

/// Margin below which an essential infimum is treated as zero.
const POSITIVITY_MARGIN: f64 = 1e-12;
/// Slack added to the `1/ς` displacement bound before bracketing.
const BRACKET_SLACK: f64 = 1e-9;
const MAX_BRACKET_DOUBLINGS: usize = 64;
const MAX_SEGMENTS: usize = 10_000_000;
/// Phase distance from a jump within which the derivative is refused.
const JUMP_TOL: f64 = 1e-12;

/// Which sufficient condition makes the firing map total.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `ess inf (f - sigma) > 0`: the firing map lifts a circle homeomorphism.
    StrictLif,
    /// `sigma = 0`, `f >= 0` a.e. and positive mean: non-decreasing and left
    /// continuous, possibly with jumps.
    NonnegPi,
}

/// An integrate-and-fire system with threshold 1 and reset 0.
#[derive(Debug, Clone)]
pub struct IFSystem {
    sigma: f64,
    signal: PeriodicSignal,
    regime: Regime,
    bounds: EssentialBounds,
}

/// Firing times `t_1 < t_2 < ...` of the run started from reset at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub t0: f64,
    pub times: Vec<f64>,
    /// `isi[i] = times[i] - times[i - 1]`, with `times[-1] = t0`.
    pub isi: Vec<f64>,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> f64 {
        self.times.last().copied().unwrap_or(self.t0)
    }
}

/// Classifies `(sigma, signal)` or explains why the firing map may not be
/// total.
pub fn validate(sigma: f64, signal: &PeriodicSignal) -> Result<(Regime, EssentialBounds)> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::IllPosed(format!(
            "leak rate sigma = {sigma} must be finite and >= 0"
        )));
    }
    let bounds = signal.essential_bounds(sigma);
    if bounds.lower > POSITIVITY_MARGIN {
        return Ok((Regime::StrictLif, bounds));
    }
    if sigma > 0.0 {
        return Err(Error::IllPosed(format!(
            "ess inf (f - sigma) = {:.6e} is not positive; the leaky integrator needs f - sigma bounded away from 0",
            bounds.lower
        )));
    }
    if bounds.lower < -POSITIVITY_MARGIN {
        return Err(Error::IllPosed(format!(
            "perfect integrator with sign-changing input (ess inf f = {:.6e}); f must be >= 0 almost everywhere",
            bounds.lower
        )));
    }
    let mean = signal.mean();
    if mean <= 0.0 {
        return Err(Error::IllPosed(format!(
            "perfect integrator input has non-positive mean {mean:.6e}; the threshold is never reached"
        )));
    }
    Ok((Regime::NonnegPi, bounds))
}

impl IFSystem {
    pub fn new(sigma: f64, signal: PeriodicSignal) -> Result<Self> {
        let (regime, bounds) = validate(sigma, &signal)?;
        Ok(IFSystem {
            sigma,
            signal,
            regime,
            bounds,
        })
    }

    /// Perfect integrator `x' = f(t)`.
    pub fn perfect(signal: PeriodicSignal) -> Result<Self> {
        Self::new(0.0, signal)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn signal(&self) -> &PeriodicSignal {
        &self.signal
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn bounds(&self) -> EssentialBounds {
        self.bounds
    }

    pub fn is_perfect_integrator(&self) -> bool {
        self.sigma == 0.0
    }

    /// Upper bound `1/ς` on `Phi(t) - t` for strict systems.
    pub fn isi_bound(&self) -> Option<f64> {
        match self.regime {
            Regime::StrictLif => Some(1.0 / self.bounds.lower),
            Regime::NonnegPi => None,
        }
    }

    /// `Phi(t)`, the first firing after a reset at `t`.
    pub fn firing_time(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("time {t} is not finite")));
        }
        // Work in the period containing t; Phi(t + k) = Phi(t) + k.
        let (k, tau) = split(t);
        let local = match self.regime {
            Regime::StrictLif => self.strict_local(tau)?,
            Regime::NonnegPi => self.level_crossing(tau, 1.0)?,
        };
        Ok(k + local)
    }

    fn strict_local(&self, tau: f64) -> Result<f64> {
        if let Some(segments) = self.signal.step_segments(tau) {
            return walk_steps(segments, self.sigma, tau, 1.0);
        }
        let sigma = self.sigma;
        let g = |s: f64| self.signal.weighted_integral_rel(sigma, tau, s) - 1.0;
        let dg = |s: f64| (self.signal.eval(s) - sigma) * (sigma * (s - tau)).exp();
        let mut width = 1.0 / self.bounds.lower + BRACKET_SLACK;
        let mut doublings = 0;
        while g(tau + width) < 0.0 {
            width *= 2.0;
            doublings += 1;
            if doublings > MAX_BRACKET_DOUBLINGS {
                return Err(Error::NoConvergence(format!(
                    "no bracket for the firing time after t = {tau}"
                )));
            }
        }
        solve::increasing_root(g, dg, tau, tau + width)
    }

    /// Smallest `s > tau` with `∫_tau^s f >= level`, for the perfect integrator.
    fn level_crossing(&self, tau: f64, level: f64) -> Result<f64> {
        debug_assert!(self.sigma == 0.0);
        if let Some(segments) = self.signal.step_segments(tau) {
            return walk_steps(segments, 0.0, tau, level);
        }
        let mean = self.signal.mean();
        let hi = tau + (level / mean).ceil() + 1.0;
        let g = |s: f64| self.signal.integral(tau, s) - level;
        solve::leftmost_crossing(g, tau, hi)
    }

    /// `Phi^n(t)` computed as the first time the perfect integrator's
    /// cumulative input from `t` reaches `n`, without intermediate resets.
    pub fn cumulative_firing_time(&self, t: f64, n: usize) -> Result<f64> {
        if !self.is_perfect_integrator() {
            return Err(Error::InvalidArgument(
                "cumulative firing times are defined for the perfect integrator only".into(),
            ));
        }
        let (k, tau) = split(t);
        Ok(k + self.level_crossing(tau, n as f64)?)
    }

    /// `Phi^n(t0)` without storing the orbit.
    pub fn advance(&self, t0: f64, n: usize) -> Result<f64> {
        (0..n).try_fold(t0, |t, _| self.firing_time(t))
    }

    /// The first `n` firing times from a reset at `t0`.
    pub fn iterate(&self, t0: f64, n: usize) -> Result<Orbit> {
        if n == 0 {
            return Err(Error::InvalidArgument("orbit length must be >= 1".into()));
        }
        let mut times = Vec::with_capacity(n);
        let mut isi = Vec::with_capacity(n);
        let mut t = t0;
        for _ in 0..n {
            let next = self.firing_time(t)?;
            isi.push(next - t);
            times.push(next);
            t = next;
        }
        Ok(Orbit { t0, times, isi })
    }

    /// `Phi'(t) = f(t) / (f(Phi(t)) - sigma) * e^{-sigma (Phi(t) - t)}`.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        let phi = self.firing_time(t)?;
        self.derivative_at(t, phi)
    }

    /// The derivative formula with a precomputed `Phi(t)`.
    pub fn derivative_at(&self, t: f64, phi: f64) -> Result<f64> {
        if self.signal.jump_near(t, JUMP_TOL) || self.signal.jump_near(phi, JUMP_TOL) {
            return Err(Error::NotDifferentiable(format!(
                "input jumps at t = {t} or at Phi(t) = {phi}"
            )));
        }
        let ft = self.signal.eval(t);
        let denom = self.signal.eval(phi) - self.sigma;
        if denom.abs() <= POSITIVITY_MARGIN {
            return Err(Error::NotDifferentiable(format!(
                "f(Phi(t)) - sigma vanishes at Phi(t) = {phi}"
            )));
        }
        if self.regime == Regime::NonnegPi && ft <= 0.0 {
            return Err(Error::NotDifferentiable(format!(
                "f(t) = {ft} is not positive at t = {t}"
            )));
        }
        Ok(ft / denom * (-self.sigma * (phi - t)).exp())
    }

    /// `max |Phi(t + 1) - Phi(t) - 1|` over `grid`.
    pub fn check_lift(&self, grid: &[f64]) -> Result<f64> {
        grid.iter().try_fold(0.0f64, |worst, &t| {
            let d = self.firing_time(t + 1.0)? - self.firing_time(t)? - 1.0;
            Ok(worst.max(d.abs()))
        })
    }
}

/// Exact solve over step-function segments: finds where the normalized
/// weighted integral from `tau` reaches `level`. Zero-gain segments are
/// skipped, so a plateau at the threshold resolves to its left end.
fn walk_steps(segments: impl Iterator<Item = (f64, f64, f64)>, sigma: f64, tau: f64, level: f64) -> Result<f64> {
    let mut need = level;
    for (x0, x1, v) in segments.take(MAX_SEGMENTS) {
        let rate = v - sigma;
        let weight = if sigma == 0.0 {
            x1 - x0
        } else {
            (sigma * (x0 - tau)).exp() * (sigma * (x1 - x0)).exp_m1() / sigma
        };
        let gain = rate * weight;
        if rate > 0.0 && gain >= need * (1.0 - 4.0 * f64::EPSILON) {
            let s = if sigma == 0.0 {
                x0 + need / v
            } else {
                x0 + (need * sigma * (-sigma * (x0 - tau)).exp() / rate).ln_1p() / sigma
            };
            return Ok(s.min(x1));
        }
        need -= gain;
    }
    Err(Error::NoConvergence(format!(
        "threshold not reached within {MAX_SEGMENTS} segments after t = {tau}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Harmonic;

    fn example1() -> IFSystem {
        IFSystem::perfect(PeriodicSignal::piecewise(vec![0.0, 0.5], vec![2.0, 0.0]).unwrap()).unwrap()
    }

    fn example5(beta: f64) -> IFSystem {
        IFSystem::new(
            1.0,
            PeriodicSignal::trig(2.0, vec![Harmonic::new(1, 2.0 * beta, 0.0)]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn validate_examples() {
        assert_eq!(example5(0.0).regime(), Regime::StrictLif);
        assert_eq!(example1().regime(), Regime::NonnegPi);
        let err = IFSystem::new(1.0, PeriodicSignal::constant(1.0)).unwrap_err();
        assert!(
            matches!(err, Error::IllPosed(ref m) if m.contains("f - sigma")),
            "{err}"
        );
        assert!(IFSystem::new(-1.0, PeriodicSignal::constant(3.0)).is_err());
        assert!(IFSystem::perfect(PeriodicSignal::constant(0.0)).is_err());
        let sign_changing = PeriodicSignal::trig(0.5, vec![Harmonic::new(1, 1.0, 0.0)]).unwrap();
        assert!(IFSystem::perfect(sign_changing).is_err());
        // beta = 0.5 touches zero: rejected for the leaky model
        assert!(IFSystem::new(
            1.0,
            PeriodicSignal::trig(2.0, vec![Harmonic::new(1, 1.0, 0.0)]).unwrap()
        )
        .is_err());
    }

    #[test]
    fn example2_translation() {
        let q = 3.0f64;
        let sys = IFSystem::new(1.0, PeriodicSignal::constant(1.0 / (1.0 - (-q).exp()))).unwrap();
        assert!((sys.firing_time(0.2).unwrap() - 3.2).abs() < 1e-12);
    }

    #[test]
    fn example1_exact_values() {
        let sys = example1();
        assert_eq!(sys.firing_time(0.0).unwrap(), 0.5);
        assert_eq!(sys.firing_time(0.25).unwrap(), 1.25);
        assert_eq!(sys.firing_time(0.75).unwrap(), 1.5);
        assert_eq!(sys.firing_time(0.5).unwrap(), 1.5);
        assert_eq!(sys.firing_time(3.0).unwrap(), 3.5);
        let orbit = sys.iterate(0.0, 2).unwrap();
        assert_eq!(orbit.times, vec![0.5, 1.5]);
        assert_eq!(orbit.isi, vec![0.5, 1.0]);
    }

    #[test]
    fn constant_input_ln2() {
        let sys = example5(0.0);
        let ln2 = std::f64::consts::LN_2;
        assert!((sys.firing_time(0.0).unwrap() - ln2).abs() < 1e-13);
        let orbit = sys.iterate(0.0, 3).unwrap();
        for (i, t) in orbit.times.iter().enumerate() {
            assert!((t - (i + 1) as f64 * ln2).abs() < 1e-12);
        }
        assert!((sys.derivative(0.37).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn left_continuity_of_example1() {
        let sys = example1();
        for k in 0..3 {
            let k = k as f64;
            let at = sys.firing_time(k).unwrap();
            let left = sys.firing_time(k - 1e-9).unwrap();
            let right = sys.firing_time(k + 1e-9).unwrap();
            assert!((left - at).abs() < 1e-8);
            assert!((right - at - 0.5).abs() < 1e-8);
        }
    }

    #[test]
    fn derivative_refuses_jumps() {
        let sys = example1();
        assert!(matches!(sys.derivative(0.0), Err(Error::NotDifferentiable(_))));
        // Phi(0.75) = 1.5 sits on a jump
        assert!(matches!(sys.derivative(0.75), Err(Error::NotDifferentiable(_))));
        // t = 0.25: f(t) = 2, Phi(t) = 1.25, f = 2
        assert_eq!(sys.derivative(0.25).unwrap(), 1.0);
    }

    #[test]
    fn pi_smooth_nonneg_input() {
        // f = 1 + cos(2 pi t) touches zero at t = 1/2
        let sys = IFSystem::perfect(PeriodicSignal::trig(1.0, vec![Harmonic::new(1, 1.0, 0.0)]).unwrap()).unwrap();
        assert_eq!(sys.regime(), Regime::NonnegPi);
        let phi = sys.firing_time(0.1).unwrap();
        assert!((sys.signal().integral(0.1, phi) - 1.0).abs() < 1e-12);
        let n5 = sys.cumulative_firing_time(0.1, 5).unwrap();
        assert!((sys.advance(0.1, 5).unwrap() - n5).abs() < 1e-9);
    }

    #[test]
    fn step_input_with_leak() {
        let f = PeriodicSignal::piecewise(vec![0.0, 0.3], vec![3.0, 1.5]).unwrap();
        let sys = IFSystem::new(1.0, f).unwrap();
        for &t in &[0.0, 0.1, 0.29, 0.5, 0.95] {
            let phi = sys.firing_time(t).unwrap();
            let resid = sys.signal().weighted_integral_rel(1.0, t, phi) - 1.0;
            assert!(resid.abs() < 1e-12, "t={t} resid={resid}");
        }
    }

    #[test]
    fn iterate_rejects_empty() {
        assert!(matches!(example5(0.1).iterate(0.0, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn cumulative_requires_pi() {
        assert!(example5(0.1).cumulative_firing_time(0.0, 2).is_err());
    }
}
