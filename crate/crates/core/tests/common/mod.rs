#![allow(dead_code)]

use outer_radii::bodies::Body;
use outer_radii::estimate::Estimate;
use outer_radii::linalg::dot;
use outer_radii::{mean_and_stderr, StreamKey};

/// Composite Simpson rule on `[a, b]` with `2 * pairs` panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, pairs: usize) -> f64 {
    let n = 2 * pairs;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

/// `Γ(k/2)` for integer `k >= 1` by the half-integer recurrence.
pub fn gamma_half(k: usize) -> f64 {
    let mut g = if k.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut a = if k.is_multiple_of(2) { 1.0 } else { 0.5 };
    while a < k as f64 / 2.0 {
        g *= a;
        a += 1.0;
    }
    g
}

/// Density of the chi distribution with `k` degrees of freedom.
pub fn chi_density(k: usize, r: f64) -> f64 {
    if r <= 0.0 {
        return if k == 1 { (2.0 / std::f64::consts::PI).sqrt() } else { 0.0 };
    }
    r.powi(k as i32 - 1) * (-r * r / 2.0).exp() / (2f64.powf(k as f64 / 2.0 - 1.0) * gamma_half(k))
}

/// `P(|G| <= t)` for `G ~ N(0, I_k)` by Simpson quadrature of the density.
pub fn chi_cdf_by_quadrature(k: usize, t: f64) -> f64 {
    simpson(|r| chi_density(k, r), 0.0, t, 4000)
}

/// Isotropy statistics of a body from `chunks` blocks of `chunk` points.
pub struct Isotropy {
    /// `E <X, θ>` for the test directions.
    pub centroid: Vec<Estimate<f64>>,
    /// `E <X, θ>^2` for the test directions.
    pub second: Vec<Estimate<f64>>,
    /// `E <X, u><X, v>` for orthogonal `u, v`.
    pub cross: Estimate<f64>,
    /// `E |X|^2 / n`.
    pub mean_square: Estimate<f64>,
    /// `E |X|^2`.
    pub norm_square: Estimate<f64>,
}

/// Unit test directions: `e_1`, the diagonal, and an alternating vector.
pub fn test_directions(n: usize) -> Vec<Vec<f64>> {
    let s = (n as f64).sqrt();
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let diag = vec![1.0 / s; n];
    let alt: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let alt_norm = dot(&alt, &alt).sqrt();
    let alt = alt.into_iter().map(|v| v / alt_norm).collect();
    vec![e1, diag, alt]
}

pub fn isotropy(body: &Body<f64>, chunk: usize, chunks: usize, key: &StreamKey) -> Isotropy {
    let n = body.dim();
    let dirs = test_directions(n);
    let mut centroid = vec![Vec::with_capacity(chunk * chunks); dirs.len()];
    let mut second = vec![Vec::with_capacity(chunk * chunks); dirs.len()];
    let mut cross = Vec::with_capacity(chunk * chunks);
    let mut sq = Vec::with_capacity(chunk * chunks);
    // u = e_1, v = e_2 (or the diagonal for n = 1)
    for c in 0..chunks {
        let cloud = body.sample(chunk, &key.derive(c as u64)).unwrap();
        for x in cloud.points().row_iter() {
            for (d, theta) in dirs.iter().enumerate() {
                let p = dot(x, theta);
                centroid[d].push(p);
                second[d].push(p * p);
            }
            cross.push(if n > 1 { x[0] * x[1] } else { 0.0 });
            sq.push(dot(x, x));
        }
    }
    let est = |xs: &[f64]| mean_and_stderr(xs, key.clone()).unwrap();
    let norm_square = est(&sq);
    Isotropy {
        centroid: centroid.iter().map(|v| est(v)).collect(),
        second: second.iter().map(|v| est(v)).collect(),
        cross: est(&cross),
        mean_square: norm_square.scaled(1.0 / n as f64),
        norm_square,
    }
}

impl Isotropy {
    /// Failures of the `z`-stderr checks against `L^2` isotropy, as text.
    pub fn failures(&self, l_k: f64, z: f64) -> Vec<String> {
        let l2 = l_k * l_k;
        let mut out = Vec::new();
        for (d, e) in self.centroid.iter().enumerate() {
            if !e.within(0.0, z, 0.0) {
                out.push(format!("centroid dir {d}: {} ± {}", e.value, e.stderr));
            }
        }
        for (d, e) in self.second.iter().enumerate() {
            if !e.within(l2, z, 0.0) {
                out.push(format!("variance dir {d}: {} ± {} vs {l2}", e.value, e.stderr));
            }
        }
        if !self.cross.within(0.0, z, 0.0) {
            out.push(format!("covariance e1,e2: {} ± {}", self.cross.value, self.cross.stderr));
        }
        if !self.mean_square.within(l2, z, 0.0) {
            out.push(format!(
                "L_K^2: {} ± {} vs {l2}",
                self.mean_square.value, self.mean_square.stderr
            ));
        }
        out
    }
}
