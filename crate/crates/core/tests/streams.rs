use outer_radii::{derive_stream, mean_and_stderr, standard_normal, Error, StreamKey};

fn uniforms(key: &StreamKey, count: usize) -> Vec<f64> {
    let mut s = key.stream();
    (0..count).map(|_| s.uniform()).collect()
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn derive_appends_index() {
    let parent = StreamKey::new(7);
    let child = derive_stream(&parent, 0);
    assert_eq!(child, StreamKey::with_path(7, vec![0]));
    assert_eq!(derive_stream(&parent, 0), child);
    assert_eq!(child.to_string(), "7/0");
}

#[test]
fn sibling_streams_are_uncorrelated() {
    let root = StreamKey::new(7);
    let a = uniforms(&root.derive(0), 100_000);
    let b = uniforms(&root.derive(1), 100_000);
    assert!(correlation(&a, &b).abs() < 0.01);
    // lag-1 within one stream
    assert!(correlation(&a[..99_999], &a[1..]).abs() < 0.01);
    // same index under a different root
    let c = uniforms(&StreamKey::new(8).derive(0), 100_000);
    assert!(correlation(&a, &c).abs() < 0.01);
}

#[test]
fn streams_replay_bit_for_bit() {
    let key = StreamKey::with_path(3, vec![1, 4, 1, 5]);
    let a: Vec<f64> = standard_normal(&key, 1000);
    let b: Vec<f64> = standard_normal(&key, 1000);
    assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    assert!(standard_normal::<f64>(&key, 0).is_empty());
}

#[test]
fn normal_moments() {
    let xs: Vec<f64> = standard_normal(&StreamKey::new(11), 1_000_000);
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 0.005, "mean {mean}");
    assert!((var - 1.0).abs() < 0.01, "variance {var}");
    let fourth = xs.iter().map(|x| x.powi(4)).sum::<f64>() / n;
    assert!((fourth - 3.0).abs() < 0.05, "fourth moment {fourth}");
}

#[test]
fn normal_f32_matches_f64_stream() {
    let key = StreamKey::new(5);
    let a: Vec<f64> = standard_normal(&key, 64);
    let b: Vec<f32> = standard_normal(&key, 64);
    for (x, y) in a.iter().zip(&b) {
        assert!((*x as f32 - y).abs() <= 1e-6 * x.abs().max(1.0) as f32);
    }
}

#[test]
fn mean_and_stderr_contract() {
    let key = StreamKey::new(0);
    assert!(matches!(mean_and_stderr::<f64>(&[], key.clone()), Err(Error::EmptySample)));
    assert_eq!(mean_and_stderr::<f64>(&[], key.clone()).unwrap_err().to_string(), "empty sample");
    let e = mean_and_stderr(&[1.0f64, 2.0, 3.0, 4.0], key.clone()).unwrap();
    assert_eq!(e.value, 2.5);
    // s = sqrt(5/3), stderr = s / 2
    assert!((e.stderr - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    assert_eq!(e.samples, 4);
    assert_eq!(e.key, key);
}

#[test]
fn mean_is_independent_of_thread_count() {
    let xs: Vec<f64> = standard_normal(&StreamKey::new(2), 100_003);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| mean_and_stderr(&xs, StreamKey::new(2)).unwrap());
    let b = four.install(|| mean_and_stderr(&xs, StreamKey::new(2)).unwrap());
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
}
