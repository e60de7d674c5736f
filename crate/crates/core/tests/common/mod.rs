//! Fixtures and independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

use ifmap::signal::Harmonic;
use ifmap::{IFSystem, PeriodicSignal};

/// Adaptive Simpson quadrature.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rule(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = rule(fa, flm, fm, a, m);
        let right = rule(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, rule(fa, fm, fb, a, b), tol, 50)
}

/// Firing time by quadrature of `∫_t^s (f - sigma) e^{sigma (u - t)} du = 1`:
/// march in steps of `h` until the threshold is passed, then bisect. Valid
/// when `f - sigma > 0`.
pub fn oracle_firing_time(sigma: f64, f: &dyn Fn(f64) -> f64, t: f64) -> f64 {
    let g = |u: f64| (f(u) - sigma) * (sigma * (u - t)).exp();
    let h = 0.01;
    let mut acc = 0.0;
    let mut s = t;
    loop {
        let step = simpson(&g, s, s + h, 1e-15);
        if acc + step >= 1.0 {
            break;
        }
        acc += step;
        s += h;
    }
    let (mut lo, mut hi) = (s, s + h);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if acc + simpson(&g, s, mid, 1e-15) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `x' = -x + 2(1 + beta cos 2 pi t)`.
pub fn cosine_drive(beta: f64) -> IFSystem {
    IFSystem::new(1.0, drive_signal(beta)).unwrap()
}

pub fn drive_signal(beta: f64) -> PeriodicSignal {
    PeriodicSignal::trig(2.0, vec![Harmonic::new(1, 2.0 * beta, 0.0)]).unwrap()
}

pub fn drive_fn(beta: f64) -> impl Fn(f64) -> f64 {
    move |t| 2.0 * (1.0 + beta * (TAU * t).cos())
}

/// `x' = -x + 1/(1 - e^{-q})`: every interval equals `q`.
pub fn constant_drive(q: f64) -> IFSystem {
    IFSystem::new(1.0, PeriodicSignal::constant(1.0 / (1.0 - (-q).exp()))).unwrap()
}

/// Perfect integrator with `f = 2` on `[0, 1/2)` and `0` on `[1/2, 1)`.
pub fn half_wave_pi() -> IFSystem {
    IFSystem::perfect(PeriodicSignal::piecewise(vec![0.0, 0.5], vec![2.0, 0.0]).unwrap()).unwrap()
}

/// `a0 + c cos 2 pi t`.
pub fn cosine(a0: f64, c: f64) -> PeriodicSignal {
    PeriodicSignal::trig(a0, vec![Harmonic::new(1, c, 0.0)]).unwrap()
}

pub const GOLDEN: f64 = 1.618_033_988_749_895;

/// A spread of validated systems across regimes and signal kinds.
pub fn validated_systems() -> Vec<(String, IFSystem)> {
    let mut out = vec![
        ("half_wave_pi".to_string(), half_wave_pi()),
        ("pi 1+cos".to_string(), IFSystem::perfect(cosine(1.0, 1.0)).unwrap()),
        (
            "pi 2+0.4cos4pi".to_string(),
            IFSystem::perfect(PeriodicSignal::trig(2.0, vec![Harmonic::new(2, 0.4, 0.0)]).unwrap()).unwrap(),
        ),
        (
            "lif steps".to_string(),
            IFSystem::new(
                0.5,
                PeriodicSignal::piecewise(vec![0.0, 0.3, 0.7], vec![3.0, 1.0, 2.0]).unwrap(),
            )
            .unwrap(),
        ),
        (
            "lif sampled".to_string(),
            IFSystem::new(
                0.8,
                PeriodicSignal::sampled(vec![2.0, 2.5, 3.0, 2.2, 1.5, 1.9]).unwrap(),
            )
            .unwrap(),
        ),
        (
            "lif two harmonics".to_string(),
            IFSystem::new(
                2.0,
                PeriodicSignal::trig(4.0, vec![Harmonic::new(1, 0.7, -0.3), Harmonic::new(3, 0.2, 0.4)]).unwrap(),
            )
            .unwrap(),
        ),
    ];
    for q in [1.0, 2.0, 3.0] {
        out.push((format!("constant_drive q={q}"), constant_drive(q)));
    }
    for beta in [0.0, 0.1, 0.25, 0.4, 0.45] {
        out.push((format!("cosine_drive beta={beta}"), cosine_drive(beta)));
    }
    out
}
