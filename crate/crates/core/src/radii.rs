//! Random polytopes as point clouds and Monte Carlo estimators of their
//! projected outer radii.
//!
//! The outer radius of the projection of `conv{X_1, ..., X_N}` onto `F` is
//! `max_j |P_F X_j|`, so no hull is ever built: every estimator works from
//! inner products between the points and a subspace frame.

use rayon::prelude::*;
use serde::Serialize;

use crate::bodies::BodyKind;
use crate::error::{Error, Result};
use crate::estimate::{mean_and_stderr, Estimate};
use crate::grassmann::{haar_flag_truncated, haar_subspace, sphere_point, Flag, Subspace};
use crate::linalg::{dot, norm_sq, Matrix};
use crate::scalar::Scalar;
use crate::stream::StreamKey;

/// Rows per block when projecting a cloud onto a frame.
const PROJECTION_BLOCK: usize = 2048;

/// Where the points of a cloud came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Source {
    Body(BodyKind),
    Gaussian,
    Explicit,
}

/// `N` points in `R^n`, standing for the polytope `K_N = conv{X_1..X_N}`.
#[derive(Clone, Debug)]
pub struct PointCloud<T> {
    points: Matrix<T>,
    source: Source,
    key: StreamKey,
}

impl<T: Scalar> PointCloud<T> {
    pub fn new(points: Matrix<T>, source: Source, key: StreamKey) -> Self {
        Self { points, source, key }
    }

    /// A cloud from explicit coordinates (one row per point).
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(Self::new(
            Matrix::from_rows(rows)?,
            Source::Explicit,
            StreamKey::new(0),
        ))
    }

    pub fn points(&self) -> &Matrix<T> {
        &self.points
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn key(&self) -> &StreamKey {
        &self.key
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    /// The cloud `{±X_j}` generating `S_N`.
    pub fn symmetrized(&self) -> Self {
        let negated = self.points.map(|x| -x);
        Self {
            points: self.points.vstack(&negated).expect("same width"),
            source: self.source,
            key: self.key.clone(),
        }
    }

    /// Applies a linear map `u` (`n x n`) to every point.
    pub fn transformed(&self, u: &Matrix<T>) -> Result<Self> {
        if u.rows() != self.dim() || u.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.rows(),
            });
        }
        // rows x u^T
        let ut = u.transpose();
        Ok(Self {
            points: self.points.matmul(&ut)?,
            source: self.source,
            key: self.key.clone(),
        })
    }

    /// Appends one point.
    pub fn with_point(&self, x: &[T]) -> Result<Self> {
        let extra = Matrix::from_rows(&[x.to_vec()])?;
        Ok(Self {
            points: self.points.vstack(&extra)?,
            source: self.source,
            key: self.key.clone(),
        })
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }
}

/// `R(K_N) = max_j |X_j|`.
pub fn outer_radius_points<T: Scalar>(cloud: &PointCloud<T>) -> Result<T> {
    if cloud.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(cloud
        .points
        .row_iter()
        .map(norm_sq)
        .fold(T::zero(), T::max)
        .sqrt())
}

/// Running maxima over points of `sum_{i<=k} <X_j, b_i>^2` for every prefix
/// `k` of the orthonormal columns `basis` (`n x depth`). Returns squared
/// radii, nondecreasing in `k`.
fn prefix_radii_sq<T: Scalar>(points: &Matrix<T>, basis: &Matrix<T>) -> Vec<T> {
    let n = points.cols();
    let depth = basis.cols();
    let mut best = vec![T::zero(); depth];
    let mut block = vec![T::zero(); PROJECTION_BLOCK * depth];
    for rows in points.as_slice().chunks(PROJECTION_BLOCK * n) {
        let m = rows.len() / n;
        let out = &mut block[..m * depth];
        T::gemm(
            m,
            n,
            depth,
            T::one(),
            rows,
            (n as isize, 1),
            basis.as_slice(),
            (depth as isize, 1),
            T::zero(),
            out,
            (depth as isize, 1),
        );
        for coords in out.chunks_exact(depth) {
            let mut acc = T::zero();
            for (slot, &c) in best.iter_mut().zip(coords) {
                acc = acc + c * c;
                if acc > *slot {
                    *slot = acc;
                }
            }
        }
    }
    best
}

/// `R(P_F K_N) = max_j |P_F X_j|`.
pub fn projected_radius<T: Scalar>(cloud: &PointCloud<T>, subspace: &Subspace<T>) -> Result<T> {
    if cloud.is_empty() {
        return Err(Error::EmptySample);
    }
    cloud.check_dim(subspace.ambient_dim())?;
    let radii = prefix_radii_sq(&cloud.points, subspace.frame());
    Ok(radii[radii.len() - 1].sqrt())
}

/// Projected radii onto every prefix of a flag, `k = 1..=depth`.
pub fn flag_radii<T: Scalar>(cloud: &PointCloud<T>, flag: &Flag<T>) -> Result<Vec<T>> {
    if cloud.is_empty() {
        return Err(Error::EmptySample);
    }
    cloud.check_dim(flag.ambient_dim())?;
    Ok(prefix_radii_sq(&cloud.points, flag.basis())
        .into_iter()
        .map(T::sqrt)
        .collect())
}

/// Monte Carlo estimate of `R̃_k(K_N) = ∫ R(P_F K_N) dν_{n,k}(F)` from
/// `subspaces` independent Haar subspaces (subspace `i` uses
/// `key.derive(i)`). For `k = n` the exact outer radius is returned.
pub fn mean_outer_radius<T: Scalar>(
    cloud: &PointCloud<T>,
    k: usize,
    subspaces: usize,
    key: &StreamKey,
) -> Result<Estimate<T>> {
    let n = cloud.dim();
    if k < 1 || k > n {
        return Err(Error::InvalidDimension(format!(
            "projection dimension {k} outside 1..={n}"
        )));
    }
    if subspaces < 2 {
        return Err(Error::InvalidParameter("need at least two subspaces".into()));
    }
    if k == n {
        return Ok(Estimate::exact(outer_radius_points(cloud)?, key.clone()));
    }
    let values = (0..subspaces)
        .into_par_iter()
        .map(|i| {
            let f = haar_subspace(n, k, &key.derive(i as u64))?;
            projected_radius(cloud, &f)
        })
        .collect::<Result<Vec<T>>>()?;
    mean_and_stderr(&values, key.clone())
}

/// Estimates of `R̃_k` for `k = 1..=depth`, one entry per `k`.
#[derive(Clone, Debug, Serialize)]
pub struct RadiusProfile<T> {
    pub estimates: Vec<Estimate<T>>,
    pub flags_used: usize,
}

impl<T: Scalar> RadiusProfile<T> {
    /// Estimate for projection dimension `k` (1-based).
    pub fn at(&self, k: usize) -> Option<&Estimate<T>> {
        k.checked_sub(1).and_then(|i| self.estimates.get(i))
    }

    pub fn values(&self) -> Vec<T> {
        self.estimates.iter().map(|e| e.value).collect()
    }

    /// True when the values never decrease with `k`.
    pub fn is_monotone(&self) -> bool {
        self.estimates.windows(2).all(|w| w[0].value <= w[1].value)
    }
}

/// Radius profile over `k = 1..=n` from `flags` Haar flags.
///
/// Each flag yields all `k` at once; because its projected norms are
/// running sums of squares, the per-flag radii never decrease in `k`, and
/// neither does their index-ordered average.
pub fn radius_profile<T: Scalar>(
    cloud: &PointCloud<T>,
    flags: usize,
    key: &StreamKey,
) -> Result<RadiusProfile<T>> {
    radius_profile_to_depth(cloud, cloud.dim(), flags, key)
}

/// As [`radius_profile`] but only for `k = 1..=depth`, drawing truncated
/// flags. Flag `i` uses `key.derive(i)`.
pub fn radius_profile_to_depth<T: Scalar>(
    cloud: &PointCloud<T>,
    depth: usize,
    flags: usize,
    key: &StreamKey,
) -> Result<RadiusProfile<T>> {
    if flags < 2 {
        return Err(Error::InvalidParameter("need at least two flags".into()));
    }
    if cloud.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = cloud.dim();
    let per_flag = (0..flags)
        .into_par_iter()
        .map(|i| {
            let flag = haar_flag_truncated(n, depth, &key.derive(i as u64))?;
            flag_radii(cloud, &flag)
        })
        .collect::<Result<Vec<Vec<T>>>>()?;
    let estimates = (0..depth)
        .map(|k| {
            let column: Vec<T> = per_flag.iter().map(|r| r[k]).collect();
            mean_and_stderr(&column, key.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RadiusProfile {
        estimates,
        flags_used: flags,
    })
}

/// Mean width `R̃_1(K_N)`: average over `directions` uniform unit vectors
/// `θ` of `max_j |<X_j, θ>|`. Direction `i` uses `key.derive(i)`.
pub fn mean_width<T: Scalar>(
    cloud: &PointCloud<T>,
    directions: usize,
    key: &StreamKey,
) -> Result<Estimate<T>> {
    if directions < 2 {
        return Err(Error::InvalidParameter("need at least two directions".into()));
    }
    if cloud.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = cloud.dim();
    let values: Vec<T> = (0..directions)
        .into_par_iter()
        .map(|i| {
            let theta: Vec<T> = sphere_point(n, &mut key.derive(i as u64).stream());
            cloud
                .points
                .row_iter()
                .map(|x| dot(x, &theta).abs())
                .fold(T::zero(), T::max)
        })
        .collect();
    mean_and_stderr(&values, key.clone())
}
