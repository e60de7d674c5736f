mod common;

use common::simpson;
use ifmap::signal::{Harmonic, SignalSpec};
use ifmap::PeriodicSignal;
use proptest::prelude::*;

fn trig_strategy() -> impl Strategy<Value = PeriodicSignal> {
    (
        -3.0..3.0f64,
        prop::collection::vec((1u32..5, -1.0..1.0f64, -1.0..1.0f64), 0..4),
    )
        .prop_map(|(a0, mut hs)| {
            hs.sort_by_key(|h| h.0);
            hs.dedup_by_key(|h| h.0);
            PeriodicSignal::trig(a0, hs.into_iter().map(|(k, c, s)| Harmonic::new(k, c, s)).collect()).unwrap()
        })
}

fn pwc_strategy() -> impl Strategy<Value = PeriodicSignal> {
    prop::collection::vec((0.0..1.0f64, -2.0..3.0f64), 1..6).prop_map(|mut segs| {
        segs[0].0 = 0.0;
        segs.sort_by(|a, b| a.0.total_cmp(&b.0));
        segs.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-6);
        PeriodicSignal::piecewise(segs.iter().map(|s| s.0).collect(), segs.iter().map(|s| s.1).collect()).unwrap()
    })
}

fn sampled_strategy() -> impl Strategy<Value = PeriodicSignal> {
    prop::collection::vec(-2.0..3.0f64, 2..12).prop_map(|v| PeriodicSignal::sampled(v).unwrap())
}

fn any_signal() -> impl Strategy<Value = PeriodicSignal> {
    prop_oneof![trig_strategy(), pwc_strategy(), sampled_strategy()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integral_matches_quadrature(f in trig_strategy(), a in -3.0..3.0f64, len in 0.0..4.0f64) {
        let b = a + len;
        let expect = simpson(&|t| f.eval(t), a, b, 1e-13);
        prop_assert!((f.integral(a, b) - expect).abs() < 1e-9);
    }

    #[test]
    fn integral_is_additive_and_periodic(f in any_signal(), a in -3.0..3.0f64, x in 0.0..2.0f64, y in 0.0..2.0f64, k in -3i32..4) {
        let (b, c) = (a + x, a + x + y);
        let scale = 1.0 + f.essential_bounds(0.0).upper.abs() * (x + y);
        prop_assert!((f.integral(a, b) + f.integral(b, c) - f.integral(a, c)).abs() < 1e-10 * scale);
        let k = k as f64;
        prop_assert!((f.integral(a + k, c + k) - f.integral(a, c)).abs() < 1e-10 * scale);
        prop_assert!((f.integral(a, a + 1.0) - f.mean()).abs() < 1e-10 * scale);
    }

    #[test]
    fn weighted_integral_matches_quadrature(f in trig_strategy(), sigma in 0.0..3.0f64, a in -2.0..2.0f64, len in 0.0..2.0f64) {
        let b = a + len;
        let g = |u: f64| (f.eval(u) - sigma) * (sigma * (u - a)).exp();
        let expect = simpson(&g, a, b, 1e-13);
        let got = f.weighted_integral_rel(sigma, a, b);
        prop_assert!((got - expect).abs() < 1e-8 * (1.0 + expect.abs()), "{got} vs {expect}");
    }

    #[test]
    fn weighted_integral_pwc_matches_quadrature(f in pwc_strategy(), sigma in 0.0..3.0f64, a in -2.0..2.0f64, len in 0.0..2.0f64) {
        let b = a + len;
        // integrate piecewise between the jumps so the oracle sees smooth pieces
        let mut cuts = vec![a, b];
        if let PeriodicSignal::Piecewise(p) = &f {
            for k in (a.floor() as i64)..=(b.ceil() as i64) {
                for &bp in p.breakpoints() {
                    let x = k as f64 + bp;
                    if x > a && x < b {
                        cuts.push(x);
                    }
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        let g = |u: f64| (f.eval(u) - sigma) * (sigma * (u - a)).exp();
        let expect: f64 = cuts.windows(2).map(|w| {
            let eps = 1e-12 * (w[1] - w[0]);
            simpson(&g, w[0] + eps, w[1] - eps, 1e-14)
        }).sum();
        let got = f.weighted_integral_rel(sigma, a, b);
        prop_assert!((got - expect).abs() < 1e-8 * (1.0 + expect.abs()), "{got} vs {expect}");
    }

    #[test]
    fn bounds_enclose_dense_samples(f in any_signal(), sigma in 0.0..2.0f64) {
        let b = f.essential_bounds(sigma);
        for i in 0..2000 {
            let v = f.eval(i as f64 / 2000.0);
            prop_assert!(v - sigma >= b.lower - 1e-9);
            prop_assert!(v <= b.upper + 1e-9);
        }
    }

    #[test]
    fn eval_is_periodic(f in any_signal(), t in -5.0..5.0f64, k in -4i32..5) {
        prop_assert!((f.eval(t + k as f64) - f.eval(t)).abs() < 1e-9);
    }

    #[test]
    fn trig_grammar_round_trips(a0 in -5.0..5.0f64, hs in prop::collection::btree_map(1u32..9, (-2.0..2.0f64, -2.0..2.0f64), 0..4)) {
        let hs: Vec<(u32, f64, f64)> = hs.into_iter().map(|(k, (c, s))| (k, c, s)).collect();
        let spec = SignalSpec::Trig { a0, harmonics: hs.iter().map(|&(k, c, s)| Harmonic::new(k, c, s)).collect() };
        let text = spec.to_string();
        let back: SignalSpec = text.parse().unwrap();
        prop_assert_eq!(&back, &spec);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn pwc_grammar_round_trips(segs in prop::collection::vec((0.0..1.0f64, -2.0..2.0f64), 1..6)) {
        let spec = SignalSpec::Pwc(segs);
        let back: SignalSpec = spec.to_string().parse().unwrap();
        prop_assert_eq!(back, spec);
    }
}

#[test]
fn derivative_matches_finite_difference() {
    let f = PeriodicSignal::trig(1.0, vec![Harmonic::new(1, 0.3, -0.2), Harmonic::new(4, 0.1, 0.05)]).unwrap();
    for i in 0..50 {
        let t = i as f64 / 50.0 + 0.003;
        let h = 1e-6;
        let fd = (f.eval(t + h) - f.eval(t - h)) / (2.0 * h);
        assert!((f.derivative(t).unwrap() - fd).abs() < 1e-6);
    }
}

#[test]
fn sampled_signal_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    std::fs::write(&path, "current\n1.0\n3.0\n").unwrap();
    let spec: SignalSpec = format!("sampled:{}", path.display()).parse().unwrap();
    let f = spec.build().unwrap();
    assert_eq!(f.eval(0.0), 1.0);
    assert_eq!(f.eval(0.5), 3.0);
    assert_eq!(f.eval(0.25), 2.0);
    assert_eq!(f.mean(), 2.0);
}

#[test]
fn grammar_rejects_malformed_specs() {
    for bad in [
        "",
        "const",
        "const:x",
        "trig:",
        "trig:1;1,2",
        "trig:1;a,1,1",
        "pwc:",
        "pwc:0",
        "sin:1",
        "sampled:",
    ] {
        assert!(bad.parse::<SignalSpec>().is_err(), "{bad:?} accepted");
    }
    // parses but fails validation
    assert!("pwc:0.5,1;0,2".parse::<SignalSpec>().unwrap().build().is_err());
    assert!("sampled:/nonexistent/file.csv"
        .parse::<SignalSpec>()
        .unwrap()
        .build()
        .is_err());
}
