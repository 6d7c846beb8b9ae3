//! Exact volume-one isotropic models of the cube, Euclidean ball,
//! cross-polytope and regular simplex.
//!
//! Each model has centroid zero and covariance `L_K^2 I`, so the isotropic
//! constant, support function and outer radius are all available in closed
//! form and serve as oracles for the Monte Carlo estimators.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, norm_sq, Matrix};
use crate::radii::{PointCloud, Source};
use crate::scalar::Scalar;
use crate::special::{ln_factorial, ln_gamma};
use crate::stream::StreamKey;

/// Rows generated per independently keyed sampling task.
pub(crate) const SAMPLE_CHUNK: usize = 1024;

/// Relative slack accepted by [`Body::contains`] for points produced by
/// rounding on the boundary.
const BOUNDARY_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BodyKind {
    Cube,
    Ball,
    #[serde(rename = "cross")]
    CrossPolytope,
    Simplex,
}

impl BodyKind {
    pub const ALL: [BodyKind; 4] = [
        BodyKind::Cube,
        BodyKind::Ball,
        BodyKind::CrossPolytope,
        BodyKind::Simplex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BodyKind::Cube => "cube",
            BodyKind::Ball => "ball",
            BodyKind::CrossPolytope => "cross",
            BodyKind::Simplex => "simplex",
        }
    }

    pub fn is_symmetric(self) -> bool {
        !matches!(self, BodyKind::Simplex)
    }
}

impl fmt::Display for BodyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BodyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cube" => Ok(BodyKind::Cube),
            "ball" => Ok(BodyKind::Ball),
            "cross" => Ok(BodyKind::CrossPolytope),
            "simplex" => Ok(BodyKind::Simplex),
            other => Err(Error::UnknownBody(other.to_string())),
        }
    }
}

/// Radius `|B_2^n|^{-1/n}` of the volume-one Euclidean ball.
pub fn unit_volume_ball_radius<T: Scalar>(n: usize) -> T {
    let nf = T::of_usize(n);
    let half_n = nf / T::of(2.0);
    let ln_volume = half_n * T::PI().ln() - ln_gamma(half_n + T::one());
    (-ln_volume / nf).exp()
}

/// Vertex distance `(n!)^{1/n} / 2` of the volume-one cross-polytope.
pub fn unit_volume_cross_radius<T: Scalar>(n: usize) -> T {
    (ln_factorial::<T>(n) / T::of_usize(n)).exp() / T::of(2.0)
}

/// Dilation factor turning the edge-`sqrt(2)` regular simplex (whose
/// volume is `sqrt(n+1)/n!`) into a volume-one simplex.
pub fn unit_volume_simplex_scale<T: Scalar>(n: usize) -> T {
    let nf = T::of_usize(n);
    ((ln_factorial::<T>(n) - T::of(0.5) * (nf + T::one()).ln()) / nf).exp()
}

/// Vertices of the regular simplex with edge `sqrt(2)` and centroid zero:
/// the standard basis of `R^{n+1}` written in Helmert coordinates of the
/// hyperplane `sum x = 0`. Row `i` is vertex `i`.
fn helmert_vertices<T: Scalar>(n: usize) -> Matrix<T> {
    Matrix::from_fn(n + 1, n, |i, j| {
        // Helmert vector j: ones on entries 0..=j, -(j+1) on entry j+1.
        let m = T::of_usize(j + 1);
        let denom = (m * (m + T::one())).sqrt();
        if i <= j {
            T::one() / denom
        } else if i == j + 1 {
            -m / denom
        } else {
            T::zero()
        }
    })
}

/// A volume-one isotropic convex body.
#[derive(Clone, Debug)]
pub struct Body<T> {
    kind: BodyKind,
    dim: usize,
    scale: T,
    isotropic_constant: T,
    vertices: Option<Matrix<T>>,
}

/// Builds the volume-one isotropic model of `kind` in dimension `n`.
pub fn make_body<T: Scalar>(kind: BodyKind, n: usize) -> Result<Body<T>> {
    Body::new(kind, n)
}

impl<T: Scalar> Body<T> {
    pub fn new(kind: BodyKind, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidDimension(format!(
                "body dimension must be at least 1, got {n}"
            )));
        }
        let nf = T::of_usize(n);
        let (scale, isotropic_constant, vertices) = match kind {
            BodyKind::Cube => (T::one(), T::of(12.0).sqrt().recip(), None),
            BodyKind::Ball => {
                let r = unit_volume_ball_radius::<T>(n);
                (r, r / (nf + T::of(2.0)).sqrt(), None)
            }
            BodyKind::CrossPolytope => {
                // Coordinate second moment of B_1^n is 2 / ((n+1)(n+2)).
                let s = unit_volume_cross_radius::<T>(n);
                let second = T::of(2.0) / ((nf + T::one()) * (nf + T::of(2.0)));
                (s, s * second.sqrt(), None)
            }
            BodyKind::Simplex => {
                let s = unit_volume_simplex_scale::<T>(n);
                let vertices = helmert_vertices::<T>(n).map(|v| v * s);
                // E[x x^T] = (1 / ((n+1)(n+2))) sum_i v_i v_i^T; its diagonal
                // is constant by symmetry, average it to absorb rounding.
                let gram = vertices.t_matmul(&vertices)?;
                let trace = (0..n).fold(T::zero(), |acc, i| acc + gram[(i, i)]);
                let lambda = trace / nf / ((nf + T::one()) * (nf + T::of(2.0)));
                (s, lambda.sqrt(), Some(vertices))
            }
        };
        Ok(Self {
            kind,
            dim: n,
            scale,
            isotropic_constant,
            vertices,
        })
    }

    pub fn kind(&self) -> BodyKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Normalisation factor: side length (cube), radius (ball), vertex
    /// distance (cross-polytope) or dilation of the edge-`sqrt(2)` simplex.
    pub fn scale(&self) -> T {
        self.scale
    }

    /// Simplex vertices (rows), if this is a simplex.
    pub fn vertices(&self) -> Option<&Matrix<T>> {
        self.vertices.as_ref()
    }

    /// Replaces the geometric scale while keeping the reported isotropic
    /// constant of the volume-one model. The result is no longer volume
    /// one; used to check that validation catches a mis-normalised body.
    pub fn with_scale(mut self, scale: T) -> Self {
        let ratio = scale / self.scale;
        if let Some(v) = self.vertices.as_mut() {
            *v = v.map(|x| x * ratio);
        }
        self.scale = scale;
        self
    }

    /// The isotropic constant `L_K`.
    pub fn isotropic_constant(&self) -> T {
        self.isotropic_constant
    }

    /// `h_K(theta)` for a unit vector `theta`.
    pub fn support(&self, theta: &[T]) -> Result<T> {
        self.check_dim(theta.len())?;
        let len = norm(theta);
        if (len - T::one()).abs() > T::of(1e-10) {
            return Err(Error::NotUnit { norm: len.as_f64() });
        }
        Ok(self.support_unchecked(theta))
    }

    pub(crate) fn support_unchecked(&self, theta: &[T]) -> T {
        match self.kind {
            BodyKind::Cube => {
                T::of(0.5) * self.scale * theta.iter().fold(T::zero(), |a, &t| a + t.abs())
            }
            BodyKind::Ball => self.scale,
            BodyKind::CrossPolytope => {
                self.scale * theta.iter().fold(T::zero(), |a, &t| a.max(t.abs()))
            }
            BodyKind::Simplex => self
                .vertices
                .as_ref()
                .expect("simplex vertices")
                .row_iter()
                .map(|v| dot(v, theta))
                .fold(T::neg_infinity(), T::max),
        }
    }

    /// The outer radius `R(K) = max_{x in K} |x|`.
    pub fn outer_radius(&self) -> T {
        match self.kind {
            BodyKind::Cube => T::of_usize(self.dim).sqrt() * self.scale / T::of(2.0),
            BodyKind::Ball | BodyKind::CrossPolytope => self.scale,
            BodyKind::Simplex => self
                .vertices
                .as_ref()
                .expect("simplex vertices")
                .row_iter()
                .map(norm)
                .fold(T::zero(), T::max),
        }
    }

    /// Exact membership test.
    pub fn contains(&self, x: &[T]) -> Result<bool> {
        self.check_dim(x.len())?;
        Ok(self.contains_unchecked(x))
    }

    pub(crate) fn contains_unchecked(&self, x: &[T]) -> bool {
        let slack = T::one() + T::of(BOUNDARY_SLACK);
        match self.kind {
            BodyKind::Cube => {
                let half = T::of(0.5) * self.scale * slack;
                x.iter().all(|&xi| xi.abs() <= half)
            }
            BodyKind::Ball => norm_sq(x) <= self.scale * self.scale * slack,
            BodyKind::CrossPolytope => {
                x.iter().fold(T::zero(), |a, &t| a + t.abs()) <= self.scale * slack
            }
            BodyKind::Simplex => {
                // With sum_i v_i = 0 and sum_i v_i v_i^T = s^2 I the barycentric
                // coordinates are 1/(n+1) + <v_i, x> / s^2.
                let n1 = T::of_usize(self.dim + 1);
                let s2 = self.scale * self.scale;
                let tol = T::of(BOUNDARY_SLACK) / n1;
                self.vertices
                    .as_ref()
                    .expect("simplex vertices")
                    .row_iter()
                    .all(|v| n1.recip() + dot(v, x) / s2 >= -tol)
            }
        }
    }

    /// Axis-aligned box `[lo_i, hi_i]` containing the body.
    pub fn bounding_box(&self) -> Vec<(T, T)> {
        match self.kind {
            BodyKind::Cube => {
                let h = self.scale / T::of(2.0);
                vec![(-h, h); self.dim]
            }
            BodyKind::Ball | BodyKind::CrossPolytope => vec![(-self.scale, self.scale); self.dim],
            BodyKind::Simplex => {
                let v = self.vertices.as_ref().expect("simplex vertices");
                (0..self.dim)
                    .map(|j| {
                        let col = v.column(j);
                        let lo = col.iter().cloned().fold(T::infinity(), T::min);
                        let hi = col.iter().cloned().fold(T::neg_infinity(), T::max);
                        (lo, hi)
                    })
                    .collect()
            }
        }
    }

    /// `m` i.i.d. uniform points of the body.
    ///
    /// Rows are generated in blocks of 1024, block `b` drawing from
    /// `key.derive(b)`, so the output is independent of the thread count.
    pub fn sample(&self, m: usize, key: &StreamKey) -> Result<PointCloud<T>> {
        if m < 1 {
            return Err(Error::InvalidParameter("sample count must be positive".into()));
        }
        let n = self.dim;
        let mut data = vec![T::zero(); m * n];
        data.par_chunks_mut(SAMPLE_CHUNK * n)
            .enumerate()
            .for_each(|(block, chunk)| self.fill_block(chunk, &key.derive(block as u64)));
        let points = Matrix::from_row_major(m, n, data)?;
        Ok(PointCloud::new(points, Source::Body(self.kind), key.clone()))
    }

    fn fill_block(&self, out: &mut [T], key: &StreamKey) {
        let n = self.dim;
        let rows = out.len() / n;
        let mut stream = key.stream();
        match self.kind {
            BodyKind::Cube => {
                for x in out.iter_mut() {
                    *x = T::of(stream.uniform() - 0.5) * self.scale;
                }
            }
            BodyKind::Ball => {
                let inv_n = 1.0 / n as f64;
                for row in out.chunks_exact_mut(n) {
                    stream.fill_normal(row);
                    let radius = self.scale * T::of(stream.uniform().powf(inv_n)) / norm(row);
                    for x in row.iter_mut() {
                        *x = *x * radius;
                    }
                }
            }
            BodyKind::CrossPolytope => {
                let mut exps = vec![0.0f64; n + 1];
                for row in out.chunks_exact_mut(n) {
                    for e in exps.iter_mut() {
                        *e = stream.exponential();
                    }
                    let total: f64 = exps.iter().sum();
                    for (x, &e) in row.iter_mut().zip(&exps) {
                        *x = T::of(stream.sign() * e / total) * self.scale;
                    }
                }
            }
            BodyKind::Simplex => {
                // Dirichlet(1, ..., 1) barycentric weights times the vertices.
                let mut weights = vec![T::zero(); rows * (n + 1)];
                for w in weights.chunks_exact_mut(n + 1) {
                    let mut total = 0.0f64;
                    for wi in w.iter_mut() {
                        let e = stream.exponential();
                        total += e;
                        *wi = T::of(e);
                    }
                    let inv = T::of(total).recip();
                    for wi in w.iter_mut() {
                        *wi = *wi * inv;
                    }
                }
                let v = self.vertices.as_ref().expect("simplex vertices");
                T::gemm(
                    rows,
                    n + 1,
                    n,
                    T::one(),
                    &weights,
                    ((n + 1) as isize, 1),
                    v.as_slice(),
                    (n as isize, 1),
                    T::zero(),
                    out,
                    (n as isize, 1),
                );
            }
        }
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn body(kind: BodyKind, n: usize) -> Body<f64> {
        make_body(kind, n).unwrap()
    }

    #[test]
    fn one_dimensional_cube_and_cross_coincide() {
        let cube = body(BodyKind::Cube, 1);
        let cross = body(BodyKind::CrossPolytope, 1);
        assert_eq!(cube.outer_radius(), 0.5);
        assert!((cross.outer_radius() - 0.5).abs() < 1e-15);
        assert!((cross.isotropic_constant() - 12f64.sqrt().recip()).abs() < 1e-15);
    }

    #[test]
    fn planar_constants() {
        let ball = body(BodyKind::Ball, 2);
        assert!((ball.scale() - 0.564_189_583_547_756_3).abs() < 1e-12);
        assert!((ball.isotropic_constant() - 0.282_094_791_773_878_1).abs() < 1e-12);
        let cross = body(BodyKind::CrossPolytope, 2);
        assert!((cross.scale() - 2f64.sqrt() / 2.0).abs() < 1e-14);
        assert!((body(BodyKind::Cube, 9).isotropic_constant() - 0.288_675_134_594_812_9).abs() < 1e-15);
    }

    #[test]
    fn simplex_volume_from_determinant() {
        // Oracle: |det(v_1 - v_0, ..., v_n - v_0)| / n! by Gaussian elimination.
        for n in 1..=7 {
            let s = body(BodyKind::Simplex, n);
            let v = s.vertices().unwrap();
            let mut m: Vec<Vec<f64>> = (1..=n)
                .map(|i| (0..n).map(|j| v[(i, j)] - v[(0, j)]).collect())
                .collect();
            let mut det = 1.0;
            for c in 0..n {
                let p = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
                m.swap(c, p);
                det *= m[c][c];
                for r in c + 1..n {
                    let f = m[r][c] / m[c][c];
                    let pivot = m[c].clone();
                    for (x, p) in m[r][c..].iter_mut().zip(&pivot[c..]) {
                        *x -= f * p;
                    }
                }
            }
            let fact: f64 = (1..=n).map(|i| i as f64).product();
            assert!((det.abs() / fact - 1.0).abs() < 1e-12, "n = {n}");
            let centroid: f64 = (0..n).map(|j| v.column(j).iter().sum::<f64>().abs()).sum();
            assert!(centroid < 1e-12);
        }
    }

    #[test]
    fn simplex_isotropic_constant_closed_form() {
        for n in [1usize, 2, 5, 30] {
            let s = body(BodyKind::Simplex, n);
            let nf = n as f64;
            let expected = s.scale() / ((nf + 1.0) * (nf + 2.0)).sqrt();
            assert!((s.isotropic_constant() - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn support_values() {
        assert_eq!(body(BodyKind::Ball, 7).support(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap(),
                   body(BodyKind::Ball, 7).scale());
        let cube = body(BodyKind::Cube, 2);
        assert_eq!(cube.support(&[1.0, 0.0]).unwrap(), 0.5);
        let d = 0.5f64.sqrt();
        assert!((cube.support(&[d, d]).unwrap() - 0.707_106_781_186_547_5).abs() < 1e-15);
        assert!(matches!(cube.support(&[1.0, 1.0]), Err(Error::NotUnit { .. })));
        assert!(cube.support(&[1.0]).is_err());
    }

    #[test]
    fn outer_radius_values_and_bound() {
        assert_eq!(body(BodyKind::Cube, 4).outer_radius(), 1.0);
        assert!((body(BodyKind::Ball, 2).outer_radius() - std::f64::consts::PI.powf(-0.5)).abs() < 1e-14);
        for kind in BodyKind::ALL {
            for n in 1..=64 {
                let b = body(kind, n);
                assert!(b.outer_radius() <= (n as f64 + 1.0) * b.isotropic_constant(), "{kind} {n}");
            }
        }
    }

    #[test]
    fn membership() {
        let cube = body(BodyKind::Cube, 3);
        assert!(cube.contains(&[0.49, 0.0, 0.0]).unwrap());
        assert!(!cube.contains(&[0.51, 0.0, 0.0]).unwrap());
        let ball = body(BodyKind::Ball, 2);
        assert!(!ball.contains(&[ball.scale() + 1e-9, 0.0]).unwrap());
        assert!(ball.contains(&[ball.scale() - 1e-9, 0.0]).unwrap());
        assert!(matches!(cube.contains(&[0.0]), Err(Error::DimensionMismatch { .. })));
        let simplex = body(BodyKind::Simplex, 3);
        let v0 = simplex.vertices().unwrap().row(0).to_vec();
        assert!(simplex.contains(&v0).unwrap());
        let outside: Vec<f64> = v0.iter().map(|x| x * 1.001).collect();
        assert!(!simplex.contains(&outside).unwrap());
        // -v0 lies outside: the opposite facet is at distance |v0| / n.
        let opposite: Vec<f64> = v0.iter().map(|x| -x).collect();
        assert!(!simplex.contains(&opposite).unwrap());
    }

    #[test]
    fn samples_are_members() {
        for kind in BodyKind::ALL {
            for n in [1usize, 2, 5, 17] {
                let b = body(kind, n);
                let cloud = b.sample(3000, &StreamKey::new(n as u64)).unwrap();
                assert_eq!(cloud.len(), 3000);
                for x in cloud.points().row_iter() {
                    assert!(b.contains(x).unwrap(), "{kind} n={n}: {x:?}");
                }
            }
        }
    }

    #[test]
    fn large_dimension_constants_are_finite() {
        for kind in BodyKind::ALL {
            let b = body(kind, 1024);
            assert!(b.isotropic_constant().is_finite() && b.isotropic_constant() > 0.0);
            assert!(b.isotropic_constant() < 0.4 && b.isotropic_constant() > 0.2, "{kind}");
        }
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(make_body::<f64>(BodyKind::Cube, 0).is_err());
        assert!("torus".parse::<BodyKind>().is_err());
        assert_eq!("cross".parse::<BodyKind>().unwrap(), BodyKind::CrossPolytope);
    }
}
