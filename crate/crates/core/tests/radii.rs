use outer_radii::bodies::make_body;
use outer_radii::grassmann::haar_subspace;
use outer_radii::ks;
use outer_radii::linalg::Matrix;
use outer_radii::radii::{
    mean_outer_radius, mean_width, outer_radius_points, projected_radius, radius_profile,
    PointCloud, Source,
};
use outer_radii::{BodyKind, StreamKey};
use std::f64::consts::PI;

fn cloud(rows: &[Vec<f64>]) -> PointCloud<f64> {
    PointCloud::from_rows(rows).unwrap()
}

#[test]
fn square_cross_mean_radius() {
    // k = 1: average of max(|cos φ|, |sin φ|) over the circle = 2√2/π.
    let c = cloud(&[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]);
    let e = mean_outer_radius(&c, 1, 20_000, &StreamKey::new(1)).unwrap();
    let exact = 2.0 * 2f64.sqrt() / PI;
    assert!(e.within(exact, 3.0, 0.0), "{} ± {}", e.value, e.stderr);
    assert!((exact - 0.900_316).abs() < 1e-6);
}

#[test]
fn segment_mean_width() {
    // ∫ |θ_1| dσ on S^2 = 1/2.
    let c = cloud(&[vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0]]);
    let w = mean_width(&c, 20_000, &StreamKey::new(2)).unwrap();
    assert!(w.within(0.5, 3.0, 0.0), "{} ± {}", w.value, w.stderr);
    let r = mean_outer_radius(&c, 1, 20_000, &StreamKey::new(3)).unwrap();
    assert!((w.value - r.value).abs() <= 3.0 * w.combined_stderr(&r));
}

#[test]
fn dense_ball_radii_are_flat() {
    let body = make_body::<f64>(BodyKind::Ball, 3).unwrap();
    let r = body.scale();
    let c = body.sample(50_000, &StreamKey::new(4)).unwrap();
    for k in 1..=3 {
        let e = mean_outer_radius(&c, k, 256, &StreamKey::new(5).derive(k as u64)).unwrap();
        assert!(e.within(r, 3.0, 0.01 * r), "k={k}: {} ± {} vs {r}", e.value, e.stderr);
    }
    let profile = radius_profile(&c, 256, &StreamKey::new(6)).unwrap();
    for e in &profile.estimates {
        assert!(e.within(r, 3.0, 0.01 * r));
    }
    let w = mean_width(&c, 256, &StreamKey::new(7)).unwrap();
    assert!(w.within(r, 3.0, 0.01 * r));
}

#[test]
fn full_dimension_is_exact() {
    let body = make_body::<f64>(BodyKind::Simplex, 6).unwrap();
    let c = body.sample(300, &StreamKey::new(8)).unwrap();
    let exact = outer_radius_points(&c).unwrap();
    let e = mean_outer_radius(&c, 6, 16, &StreamKey::new(9)).unwrap();
    assert_eq!((e.value, e.stderr), (exact, 0.0));
    let profile = radius_profile(&c, 16, &StreamKey::new(10)).unwrap();
    let last = profile.at(6).unwrap().value;
    assert!((last - exact).abs() <= 1e-12 * exact);
}

#[test]
fn simple_clouds() {
    let c = cloud(&[vec![0.0, 0.0], vec![3.0, 4.0]]);
    assert_eq!(outer_radius_points(&c).unwrap(), 5.0);
    let c = cloud(&[vec![3.0, 4.0], vec![1.0, -7.0]]);
    let e1 = outer_radii::grassmann::Subspace::coordinate(2, 1).unwrap();
    assert_eq!(projected_radius(&c, &e1).unwrap(), 3.0);
    let wrong = outer_radii::grassmann::Subspace::coordinate(3, 1).unwrap();
    assert!(projected_radius(&c, &wrong).is_err());
    assert!(mean_outer_radius(&c, 3, 8, &StreamKey::new(0)).is_err());
    assert!(mean_outer_radius(&c, 0, 8, &StreamKey::new(0)).is_err());
}

#[test]
fn rotation_equivariance_in_law() {
    let n = 6;
    let body = make_body::<f64>(BodyKind::Cube, n).unwrap();
    let c = body.sample(200, &StreamKey::new(11)).unwrap();
    let u = haar_subspace::<f64>(n, n, &StreamKey::new(12)).unwrap().frame().clone();
    let rotated = c.transformed(&u).unwrap();
    let radii = |cloud: &PointCloud<f64>, root: u64| -> Vec<f64> {
        (0..2000u64)
            .map(|i| {
                let f = haar_subspace(n, 2, &StreamKey::new(root).derive(i)).unwrap();
                projected_radius(cloud, &f).unwrap()
            })
            .collect()
    };
    let test = ks::two_sample(&radii(&c, 13), &radii(&rotated, 14));
    assert!(test.p_value > 0.01, "{test:?}");
}

#[test]
fn adversarial_profiles_are_monotone() {
    let n = 7;
    let dir: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0).recip()).collect();
    let collinear = Matrix::from_fn(64, n, |j, i| (j as f64 - 31.5) * 1e3 * dir[i]);
    let clouds = [PointCloud::new(collinear, Source::Explicit, StreamKey::new(0)),
        cloud(std::slice::from_ref(&dir)),
        cloud(&[vec![0.0; n]]),
        cloud(&[dir.clone(), dir.clone(), dir.iter().map(|x| -x).collect()]),
        cloud(&[vec![1e-300; n], vec![1e300; n]])];
    for (i, c) in clouds.iter().enumerate() {
        let p = radius_profile(c, 32, &StreamKey::new(15).derive(i as u64)).unwrap();
        let values = p.values();
        assert!(values.windows(2).all(|w| w[0] <= w[1]), "cloud {i}: {values:?}");
        assert!(p.is_monotone());
    }
}

#[test]
fn single_precision_profile() {
    let body = make_body::<f32>(BodyKind::CrossPolytope, 12).unwrap();
    let c = body.sample(500, &StreamKey::new(16)).unwrap();
    let p = radius_profile(&c, 16, &StreamKey::new(17)).unwrap();
    assert!(p.is_monotone());
    let exact = outer_radius_points(&c).unwrap();
    assert!((p.at(12).unwrap().value - exact).abs() <= 1e-5 * exact);
}
