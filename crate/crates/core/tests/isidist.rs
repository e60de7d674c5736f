mod common;

use common::{cosine, cosine_drive, simpson, GOLDEN};
use ifmap::isidist::*;
use ifmap::rotation::rotation_number;
use ifmap::{Error, IFSystem};
use proptest::prelude::*;

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 1..40)
}

/// Oracle for the area between two CDFs: integrate `|F1 - F2|` on a fine
/// partition refined at every atom.
fn cdf_area_oracle(a: &[f64], b: &[f64]) -> f64 {
    let d1 = EmpiricalDist::new(a.to_vec()).unwrap();
    let d2 = EmpiricalDist::new(b.to_vec()).unwrap();
    let mut pts: Vec<f64> = a.iter().chain(b).copied().collect();
    pts.sort_by(f64::total_cmp);
    pts.windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            (d1.cdf(mid) - d2.cdf(mid)).abs() * (w[1] - w[0])
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fortet_mourier_is_a_metric(a in samples(), b in samples(), c in samples()) {
        let (da, db, dc) = (
            EmpiricalDist::new(a).unwrap(),
            EmpiricalDist::new(b).unwrap(),
            EmpiricalDist::new(c).unwrap(),
        );
        prop_assert_eq!(fortet_mourier(&da, &da), 0.0);
        prop_assert!((fortet_mourier(&da, &db) - fortet_mourier(&db, &da)).abs() < 1e-12);
        prop_assert!(fortet_mourier(&da, &dc) <= fortet_mourier(&da, &db) + fortet_mourier(&db, &dc) + 1e-12);
        prop_assert!(fortet_mourier(&da, &db) >= 0.0);
    }

    #[test]
    fn fortet_mourier_matches_cdf_area(a in samples(), b in samples()) {
        let d = fortet_mourier(&EmpiricalDist::new(a.clone()).unwrap(), &EmpiricalDist::new(b.clone()).unwrap());
        prop_assert!((d - cdf_area_oracle(&a, &b)).abs() < 1e-9);
    }

    #[test]
    fn equal_size_distance_is_mean_sorted_gap(mut a in prop::collection::vec(-5.0..5.0f64, 1..30), seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut b: Vec<f64> = a.iter().map(|_| rng.gen_range(-5.0..5.0)).collect();
        let d = fortet_mourier(&EmpiricalDist::new(a.clone()).unwrap(), &EmpiricalDist::new(b.clone()).unwrap());
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let expect = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64;
        prop_assert!((d - expect).abs() < 1e-9);
    }

    #[test]
    fn dirac_distance(a in -100.0..100.0f64, b in -100.0..100.0f64) {
        let d = fortet_mourier(&EmpiricalDist::new(vec![a]).unwrap(), &EmpiricalDist::new(vec![b]).unwrap());
        prop_assert_eq!(d, (a - b).abs());
    }

    #[test]
    fn measure_invariance_for_random_pi(a0 in 0.8..3.0f64, frac in 0.0..1.0f64, lo in -2.0..2.0f64, len in 0.0..1.5f64) {
        let f = cosine(a0, frac * a0);
        let err = check_measure_invariance(&f, &[(lo, lo + len)]).unwrap();
        prop_assert!(err < 1e-8);
    }

    #[test]
    fn histogram_counts_add_up(v in prop::collection::vec(0.0..1.0f64, 1..200), bins in 1usize..50) {
        let d = EmpiricalDist::new(v.clone()).unwrap();
        let h = d.histogram(0.0, 1.0, bins);
        prop_assert_eq!(h.bins.iter().map(|b| b.count).sum::<usize>() + h.outside, v.len());
        let total: f64 = h.bins.iter().map(|b| b.frequency).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn isi_values_lie_in_displacement_range() {
    for beta in [0.1, 0.25, 0.45] {
        let sys = cosine_drive(beta);
        let (lo, hi) = displacement_range(&sys, 512).unwrap();
        let isi = isi_sequence(&sys.iterate(0.0, 20_000).unwrap()).unwrap();
        assert!(isi.values.iter().all(|&v| v >= lo - 1e-9 && v <= hi + 1e-9));
        // grid oracle with 10^5 points
        let (mut glo, mut ghi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..100_000 {
            let t = i as f64 / 100_000.0;
            let psi = sys.firing_time(t).unwrap() - t;
            glo = glo.min(psi);
            ghi = ghi.max(psi);
        }
        assert!(lo <= glo + 1e-12 && glo - lo < 1e-8, "{lo} {glo}");
        assert!(hi >= ghi - 1e-12 && hi - ghi < 1e-8, "{hi} {ghi}");
    }
    let (lo, hi) = displacement_range(&cosine_drive(0.25), 256).unwrap();
    assert!(lo < std::f64::consts::LN_2 && std::f64::consts::LN_2 < hi);
}

#[test]
fn displacement_range_refuses_discontinuous_maps() {
    assert!(displacement_range(&common::half_wave_pi(), 64).is_err());
}

#[test]
fn mean_isi_is_rotation_number() {
    let sys = cosine_drive(0.25);
    let isi = isi_sequence(&sys.iterate(0.0, 100_000).unwrap()).unwrap();
    let mean = empirical_isi_dist(&isi).unwrap().mean();
    let est = rotation_number(&sys, 0.41, 100_000).unwrap();
    assert!((mean - est.value).abs() < 2e-4);
}

#[test]
fn constant_input_is_a_single_atom() {
    let sys = cosine_drive(0.0);
    let isi = isi_sequence(&sys.iterate(0.0, 5000).unwrap()).unwrap();
    assert!(isi.values.iter().all(|v| (v - std::f64::consts::LN_2).abs() < 1e-9));
    let d = empirical_isi_dist(&isi).unwrap();
    assert_eq!(d.clusters(1e-9).len(), 1);
    let (lo, hi) = padded_range(displacement_range(&sys, 64).unwrap());
    assert_eq!(d.histogram(lo, hi, 200).occupied(), 1);
}

#[test]
fn locked_system_has_ten_interval_values() {
    let sys = cosine_drive(0.42);
    let isi = isi_sequence(&sys.iterate(0.0, 30_000).unwrap()).unwrap();
    let late = isi.after(20_000);
    let d = empirical_isi_dist(&late).unwrap();
    assert_eq!(d.clusters(1e-4).len(), 10);
    let r = classify_regularity(&isi, 10, 1e-6, 20_000).unwrap();
    assert!(
        matches!(
            r,
            Regularity::Periodic { q: 10 } | Regularity::AsymptoticallyPeriodic { q: 10 }
        ),
        "{r:?}"
    );
}

#[test]
fn irrational_rotation_is_recurrent() {
    let sys = cosine_drive(0.25);
    let isi = isi_sequence(&sys.iterate(0.3, 6000).unwrap()).unwrap();
    let r = classify_regularity(&isi, 1, 0.01, 1000).unwrap();
    assert!(matches!(r, Regularity::AlmostStronglyRecurrent { .. }), "{r:?}");
}

#[test]
fn pi_density_matches_monte_carlo_for_irrational_rotation() {
    let f = cosine(GOLDEN, 0.5);
    let sys = IFSystem::perfect(f.clone()).unwrap();
    let support = isi_density_pi(&f, &[], 1024).unwrap().support;
    let grid = chebyshev_grid(support.0, support.1, 1500);
    let curve = isi_density_pi(&f, &grid, 1024).unwrap();
    assert!((curve.integral() - 1.0).abs() < 0.02, "{}", curve.integral());
    assert!(curve.roots.iter().all(|r| r % 2 == 0));
    assert!(curve.density.iter().all(|d| *d >= 0.0));

    let isi = isi_sequence(&sys.iterate(0.0, 200_000).unwrap()).unwrap();
    let d = empirical_isi_dist(&isi).unwrap();
    let cdf = curve.cdf();
    let model = |x: f64| {
        let i = cdf.partition_point(|p| p.0 <= x);
        if i == 0 {
            0.0
        } else if i == cdf.len() {
            cdf[i - 1].1
        } else {
            let ((a, fa), (b, fb)) = (cdf[i - 1], cdf[i]);
            fa + (fb - fa) * (x - a) / (b - a)
        }
    };
    assert!(d.ks_distance(model) < 0.01);
    assert!(d.min() >= support.0 - 1e-9 && d.max() <= support.1 + 1e-9);
}

#[test]
fn pi_density_matches_pushforward_quadrature() {
    // P(Psi in [y1, y2]) under the invariant density, by quadrature over t
    let f = cosine(GOLDEN, 0.5);
    let sys = IFSystem::perfect(f.clone()).unwrap();
    let (lo, hi) = isi_density_pi(&f, &[], 1024).unwrap().support;
    let (y1, y2) = (lo + 0.3 * (hi - lo), lo + 0.6 * (hi - lo));
    let mean = f.mean();
    let n = 20_000;
    let mass: f64 = (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            let psi = sys.firing_time(t).unwrap() - t;
            if psi >= y1 && psi <= y2 {
                f.eval(t) / mean / n as f64
            } else {
                0.0
            }
        })
        .sum();
    let grid = chebyshev_grid(y1, y2, 200);
    let curve = isi_density_pi(&f, &grid, 1024).unwrap();
    let interp = |y: f64| {
        let i = grid.partition_point(|g| *g <= y).clamp(1, grid.len() - 1);
        let (a, b) = (grid[i - 1], grid[i]);
        curve.density[i - 1] + (curve.density[i] - curve.density[i - 1]) * (y - a) / (b - a)
    };
    let integral = simpson(&interp, grid[0], grid[grid.len() - 1], 1e-8);
    assert!((integral - mass).abs() < 2e-3, "{integral} vs {mass}");
}

#[test]
fn density_refusals() {
    assert!(matches!(isi_density_pi(&cosine(2.0, 0.5), &[0.5], 256), Err(Error::RationalRotation(r)) if r == 0.5));
    assert!(matches!(
        isi_density_pi(&cosine(GOLDEN, 0.0), &[0.6], 256),
        Err(Error::NoDensity(_))
    ));
    let steps = ifmap::PeriodicSignal::piecewise(vec![0.0, 0.5], vec![2.0, 1.0]).unwrap();
    assert!(isi_density_pi(&steps, &[0.6], 256).is_err());
    assert!(isi_density_pi(&cosine(1.0, 1.0), &[0.6], 256).is_err());
}

#[test]
fn perturbation_metrics_shrink_with_delta() {
    let base = cosine_drive(0.25);
    let reports: Vec<_> = [0.02, 0.01, 0.005]
        .iter()
        .map(|d| perturbation_harness(&base, &cosine_drive(0.25 + d), 500, 20_000).unwrap())
        .collect();
    for w in reports.windows(2) {
        assert!(w[1].sup_phi_dev < w[0].sup_phi_dev);
        assert!(w[1].sup_dphi_dev < w[0].sup_dphi_dev);
        assert!(w[1].d_f_isi < w[0].d_f_isi);
    }
    let json = serde_json::to_string(&reports[0]).unwrap();
    assert!(json.contains("\"d_F_isi\""));
}

#[test]
fn perturbation_from_dirac_base() {
    let r = perturbation_harness(&cosine_drive(0.0), &cosine_drive(0.1), 200, 20_000).unwrap();
    assert!(r.d_f_isi.is_finite() && r.d_f_isi < 0.05);
}
