mod common;

use outer_radii::gaussian::{
    chi_cdf, chi_sf, expected_max_chi, gaussian_cloud, gaussian_mean_outer_radius, tail_bound_check,
    tail_bound_grid, simulate_max_chi, tail_integral, ChiMaxQuery,
};
use outer_radii::grassmann::haar_subspace;
use outer_radii::ks;
use outer_radii::linalg::norm;
use outer_radii::{mean_and_stderr, Error, StreamKey};
use std::f64::consts::PI;

const KS: [usize; 5] = [1, 2, 5, 10, 50];
const COUNTS: [usize; 5] = [1, 10, 100, 1000, 10_000];
/// Range of `E max |G_j| / max{√k, √log N}` over the grid above.
const PINNED_BAND: (f64, f64) = (0.797_884_56, 1.921_517_58);

fn oracle(k: usize, count: usize) -> f64 {
    expected_max_chi(&ChiMaxQuery::<f64>::new(k, count)).unwrap()
}

#[test]
fn chi_cdf_matches_density_quadrature() {
    for k in [1usize, 2, 3, 7, 20, 50] {
        for t in [0.1, 0.5, 1.0, 2.0, 3.5, 5.0, 8.0, 11.0] {
            let expected = common::chi_cdf_by_quadrature(k, t);
            let got = chi_cdf(k, t).unwrap();
            assert!((got - expected).abs() < 1e-10, "k={k} t={t}: {got} vs {expected}");
            assert!((got + chi_sf(k, t).unwrap() - 1.0).abs() < 1e-14);
        }
    }
    assert!(chi_cdf(4, -1.0).is_err());
}

#[test]
fn chi_cdf_closed_forms() {
    // k = 2: 1 - exp(-t^2/2); k = 3: erf(t/√2) - √(2/π) t exp(-t^2/2)
    for t in [0.3f64, 1.0, 2.7] {
        assert!((chi_cdf(2, t).unwrap() - (1.0 - (-t * t / 2.0).exp())).abs() < 1e-14);
        let k1 = chi_cdf(1, t).unwrap();
        let k3 = chi_cdf(3, t).unwrap();
        let expected = k1 - (2.0 / PI).sqrt() * t * (-t * t / 2.0).exp();
        assert!((k3 - expected).abs() < 1e-13);
    }
}

#[test]
fn closed_form_maxima() {
    assert!((oracle(1, 1) - (2.0 / PI).sqrt()).abs() < 1e-8);
    assert!((oracle(3, 1) - 2.0 * (2.0 / PI).sqrt()).abs() < 1e-8);
    assert!((oracle(1, 2) - 2.0 / PI.sqrt()).abs() < 1e-8);
    // k = 2, N = 1: Rayleigh mean √(π/2).
    assert!((oracle(2, 1) - (PI / 2.0).sqrt()).abs() < 1e-8);
}

#[test]
fn max_of_two_folded_normals_by_brute_force() {
    let mut stream = StreamKey::new(1).stream();
    let values: Vec<f64> = (0..10_000_000)
        .map(|_| stream.normal().abs().max(stream.normal().abs()))
        .collect();
    let e = mean_and_stderr(&values, StreamKey::new(1)).unwrap();
    assert!(e.within(2.0 / PI.sqrt(), 3.0, 0.0), "{} ± {}", e.value, e.stderr);
}

#[test]
fn oracle_is_monotone_and_banded() {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (i, &k) in KS.iter().enumerate() {
        for (j, &count) in COUNTS.iter().enumerate() {
            let v = oracle(k, count);
            if i > 0 {
                assert!(v >= oracle(KS[i - 1], count));
            }
            if j > 0 {
                assert!(v >= oracle(k, COUNTS[j - 1]));
            }
            let ratio = v / (k as f64).sqrt().max((count as f64).ln().sqrt());
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    assert!(lo >= 0.7 && hi <= 2.1, "[{lo}, {hi}]");
    assert!((lo / PINNED_BAND.0 - 1.0).abs() < 0.01, "{lo}");
    assert!((hi / PINNED_BAND.1 - 1.0).abs() < 0.01, "{hi}");
}

#[test]
fn oracle_matches_simulation_on_full_grid() {
    for &k in &KS {
        for &count in &COUNTS {
            let key = StreamKey::new(2).derive(k as u64).derive(count as u64);
            let e = simulate_max_chi(k, count, 100_000, &key).unwrap();
            let exact = oracle(k, count);
            assert!(e.within(exact, 3.0, 0.0), "k={k} N={count}: {} ± {} vs {exact}", e.value, e.stderr);
            assert!((e.value / exact - 1.0).abs() < 0.02);
        }
    }
}

#[test]
fn tolerance_is_honoured() {
    let loose = expected_max_chi(&ChiMaxQuery::<f64>::new(5, 300).with_tolerance(1e-4)).unwrap();
    let tight = expected_max_chi(&ChiMaxQuery::<f64>::new(5, 300).with_tolerance(1e-12)).unwrap();
    assert!((loose - tight).abs() < 1e-4);
    let huge = oracle(3, 1_000_000_000);
    assert!(huge.is_finite() && huge > oracle(3, 1_000_000));
}

#[test]
fn tail_integral_values() {
    assert!((tail_integral(1, 1.0f64).unwrap() - (-0.5f64).exp()).abs() < 1e-12);
    assert!((tail_integral(0, 0.0f64).unwrap() - (PI / 2.0).sqrt()).abs() < 1e-12);
    assert!((tail_integral(1, 0.0f64).unwrap() - 1.0).abs() < 1e-12);
    // ∫_t^∞ r^3 e^{-r²/2} dr = (t² + 2) e^{-t²/2}
    for t in [0.0f64, 0.5, 2.0, 6.0] {
        let exact = (t * t + 2.0) * (-t * t / 2.0).exp();
        assert!((tail_integral(3, t).unwrap() - exact).abs() < 1e-12);
    }
    for (k, t) in [(4usize, 1.5f64), (9, 3.0)] {
        let numeric = common::simpson(|r| r.powi(k as i32) * (-r * r / 2.0).exp(), t, 40.0, 20_000);
        assert!((tail_integral(k, t).unwrap() - numeric).abs() < 1e-10);
    }
}

#[test]
fn tail_bounds() {
    let rows = tail_bound_check(50, &tail_bound_grid(50, 100)).unwrap();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r.holds));
    for r in rows.iter().filter(|r| r.k == 1) {
        assert!(r.lower_gap.abs() <= 1e-12);
    }
    let edge = tail_bound_check(3, &[(3, 2.0), (1, 1.0)]).unwrap();
    assert!(edge.iter().all(|r| r.holds));
    assert!((edge[1].value - 0.606_530_66).abs() < 1e-8);
    let err = tail_bound_check(5, &[(5, 1.0)]).unwrap_err();
    assert!(matches!(err, Error::LemmaHypothesis { k: 5, .. }));
    assert!(err.to_string().contains("k = 5, t = 1"));
}

#[test]
fn gaussian_cloud_statistics() {
    let cloud = gaussian_cloud::<f64>(2, 1_000_000, &StreamKey::new(3)).unwrap();
    for j in 0..2 {
        let e = mean_and_stderr(&cloud.points().column(j), StreamKey::new(3)).unwrap();
        assert!(e.within(0.0, 3.0, 0.0));
    }
    let cloud = gaussian_cloud::<f64>(12, 5000, &StreamKey::new(4)).unwrap();
    let f = haar_subspace::<f64>(12, 5, &StreamKey::new(5)).unwrap();
    let norms: Vec<f64> = cloud.points().row_iter().map(|x| norm(&f.project(x).unwrap())).collect();
    let test = ks::one_sample(&norms, |t| chi_cdf(5, t.max(0.0)).unwrap());
    assert!(test.p_value > 0.01, "{test:?}");
}

#[test]
fn gaussian_polytope_matches_oracle() {
    for (n, k, count) in [(8usize, 8usize, 1usize), (10, 1, 50), (10, 4, 200)] {
        let e = gaussian_mean_outer_radius::<f64>(n, count, k, 2000, &StreamKey::new(6)).unwrap();
        let exact = oracle(k, count);
        assert!(e.within(exact, 3.0, 0.0), "n={n} k={k} N={count}: {} ± {} vs {exact}", e.value, e.stderr);
    }
}
