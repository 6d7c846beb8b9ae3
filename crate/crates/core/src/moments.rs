//! Moment functionals of the Euclidean norm on a body and its projections.
//!
//! * `I_q(K, F) = (∫_K |P_F x|^q dx)^{1/q}` and `I_q(K) = I_q(K, R^n)`;
//! * `w_p(K) = (∫_{S^{n-1}} h_K^p dσ)^{1/p}`;
//! * `h_{Z_q(K)}(θ) = (∫_K |<x, θ>|^q dx)^{1/q}`.
//!
//! All are plain Monte Carlo averages pushed through `x -> x^{1/q}` with
//! delta-method errors. Negative exponents are only accepted while
//! `|q| <= (d - 1)/2` for the dimension `d` of the projected norm: the
//! density of `|P_F X|` near zero scales like `t^{d-1}`, so
//! `E |P_F X|^{-2|q|}` (the variance) is finite exactly when `2|q| < d`.

use rayon::prelude::*;
use serde::Serialize;

use crate::bodies::{Body, BodyKind};
use crate::error::{Error, Result};
use crate::estimate::{mean_and_stderr, pairwise_sum, Estimate};
use crate::grassmann::{haar_subspace, projected_moment_factor, sphere_point, Subspace};
use crate::linalg::{dot, norm, norm_sq, Matrix};
use crate::radii::PointCloud;
use crate::scalar::Scalar;
use crate::stream::StreamKey;

/// Smallest sample count accepted by the moment estimators.
pub const MIN_SAMPLES: usize = 100;

fn check_exponent<T: Scalar>(q: T, dim: usize) -> Result<()> {
    let limit = (T::of_usize(dim) - T::one()) / T::of(2.0);
    if q == T::zero() || !q.is_finite() || (q < T::zero() && -q > limit) {
        return Err(Error::VarianceUnsafeExponent { q: q.as_f64(), dim });
    }
    Ok(())
}

fn check_samples(m: usize) -> Result<()> {
    if m < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "moment estimates need at least {MIN_SAMPLES} samples, got {m}"
        )));
    }
    Ok(())
}

/// `(mean_j r_j^q)^{1/q}` from nonnegative radii.
pub fn power_mean<T: Scalar>(radii: &[T], q: T, key: &StreamKey) -> Result<Estimate<T>> {
    let powers: Vec<T> = radii.iter().map(|&r| r.powf(q)).collect();
    Ok(mean_and_stderr(&powers, key.clone())?.root(q))
}

/// Exact `I_q` of the ball of radius `r` in `R^n`: `r (n/(n+q))^{1/q}`, `q > -n`.
pub fn ball_moment_exact<T: Scalar>(radius: T, n: usize, q: T) -> T {
    let nf = T::of_usize(n);
    radius * (nf / (nf + q)).powf(q.recip())
}

/// Monte Carlo `I_q(K)` from `m` uniform points (`key.derive(0)`).
pub fn moment<T: Scalar>(body: &Body<T>, q: T, m: usize, key: &StreamKey) -> Result<Estimate<T>> {
    check_exponent(q, body.dim())?;
    check_samples(m)?;
    let cloud = body.sample(m, &key.derive(0))?;
    let radii: Vec<T> = cloud.points().row_iter().map(norm).collect();
    power_mean(&radii, q, key)
}

/// Monte Carlo `I_q(K, F)` from `m` uniform points (`key.derive(0)`).
pub fn moment_subspace<T: Scalar>(
    body: &Body<T>,
    subspace: &Subspace<T>,
    q: T,
    m: usize,
    key: &StreamKey,
) -> Result<Estimate<T>> {
    if subspace.ambient_dim() != body.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            found: subspace.ambient_dim(),
        });
    }
    check_exponent(q, subspace.dim())?;
    check_samples(m)?;
    let cloud = body.sample(m, &key.derive(0))?;
    let radii = projected_norms(cloud.points(), subspace.frame());
    power_mean(&radii, q, key)
}

/// `|P_F X_j|` for every row.
fn projected_norms<T: Scalar>(points: &Matrix<T>, frame: &Matrix<T>) -> Vec<T> {
    let coords = points.matmul(frame).expect("matching dimensions");
    coords.row_iter().map(norm).collect()
}

/// Result of a Grassmannian moment average.
#[derive(Clone, Debug, Serialize)]
pub struct GrassmannMomentReport<T> {
    /// `(∫ I_q(K,F)^q dν_{n,k})^{1/q}`.
    pub estimate: Estimate<T>,
    /// `I_q(K)` from the same points.
    pub full_moment: Estimate<T>,
    /// Exact-identity reference `(m_{n,q}/m_{k,q})^{1/q} I_q(K)`.
    pub reference: T,
    /// `estimate / reference`; its error is that of the paired difference.
    pub identity_ratio: Estimate<T>,
    /// `sqrt((k+q)/(n+q)) I_q(K)`.
    pub order_normalizer: T,
    /// `estimate / order_normalizer`.
    pub order_ratio: T,
}

/// Double Monte Carlo average of `I_q(K,F)^q` over `subspaces` Haar
/// subspaces, all evaluated on one shared sample of `m` points.
///
/// Points use `key.derive(0)`, subspace `i` uses `key.derive(1).derive(i)`.
/// The standard error combines the between-point and between-subspace
/// variance components.
pub fn grassmann_moment_avg<T: Scalar>(
    body: &Body<T>,
    k: usize,
    q: T,
    subspaces: usize,
    m: usize,
    key: &StreamKey,
) -> Result<GrassmannMomentReport<T>> {
    let n = body.dim();
    if q < T::one() {
        return Err(Error::InvalidParameter(format!("need q >= 1, got {q}")));
    }
    if subspaces < 2 {
        return Err(Error::InvalidParameter("need at least two subspaces".into()));
    }
    check_samples(m)?;
    let factor = projected_moment_factor(n, k, q)?;
    let cloud = body.sample(m, &key.derive(0))?;
    let full_powers: Vec<T> = cloud
        .points()
        .row_iter()
        .map(|x| norm(x).powf(q))
        .collect();

    let subspace_key = key.derive(1);
    let per_subspace: Vec<Vec<T>> = (0..subspaces)
        .into_par_iter()
        .map(|i| {
            let f = haar_subspace::<T>(n, k, &subspace_key.derive(i as u64))?;
            Ok(projected_norms(cloud.points(), f.frame())
                .into_iter()
                .map(|r| r.powf(q))
                .collect())
        })
        .collect::<Result<_>>()?;

    let m_t = T::of_usize(m);
    let s_t = T::of_usize(subspaces);
    // b_i: mean over points for subspace i; a_j: mean over subspaces for point j.
    let b: Vec<T> = per_subspace.iter().map(|row| pairwise_sum(row) / m_t).collect();
    let a: Vec<T> = (0..m)
        .map(|j| {
            let column: Vec<T> = per_subspace.iter().map(|row| row[j]).collect();
            pairwise_sum(&column) / s_t
        })
        .collect();
    let by_point = mean_and_stderr(&a, key.clone())?;
    let by_subspace = mean_and_stderr(&b, key.clone())?;
    let average = Estimate {
        value: by_point.value,
        stderr: by_point.stderr.hypot(by_subspace.stderr),
        samples: m * subspaces,
        key: key.clone(),
    };

    let full = mean_and_stderr(&full_powers, key.clone())?;
    let reference_q = factor * full.value;
    let paired: Vec<T> = a
        .iter()
        .zip(&full_powers)
        .map(|(&aj, &xj)| aj - factor * xj)
        .collect();
    let paired_err = mean_and_stderr(&paired, key.clone())?
        .stderr
        .hypot(by_subspace.stderr);

    let estimate = average.root(q);
    let full_moment = full.root(q);
    let reference = reference_q.powf(q.recip());
    let ratio = estimate.value / reference;
    let identity_ratio = Estimate {
        value: ratio,
        stderr: ratio * paired_err / (q * reference_q),
        samples: average.samples,
        key: key.clone(),
    };
    let nf = T::of_usize(n);
    let kf = T::of_usize(k);
    let order_normalizer = ((kf + q) / (nf + q)).sqrt() * full_moment.value;
    Ok(GrassmannMomentReport {
        order_ratio: estimate.value / order_normalizer,
        estimate,
        full_moment,
        reference,
        identity_ratio,
        order_normalizer,
    })
}

/// `w_p = (∫ h(θ)^p dσ(θ))^{1/p}` over `directions` uniform directions of
/// `S^{n-1}` (direction `i` uses `key.derive(i)`).
pub fn p_mean_width<T: Scalar>(
    support: impl Fn(&[T]) -> T + Sync,
    n: usize,
    p: T,
    directions: usize,
    key: &StreamKey,
) -> Result<Estimate<T>> {
    if p == T::zero() || !p.is_finite() {
        return Err(Error::InvalidParameter("p must be finite and nonzero".into()));
    }
    if directions < 2 {
        return Err(Error::InvalidParameter("need at least two directions".into()));
    }
    let values: Vec<T> = (0..directions)
        .into_par_iter()
        .map(|i| {
            let theta: Vec<T> = sphere_point(n, &mut key.derive(i as u64).stream());
            let h = support(&theta);
            if p < T::zero() && !(h > T::zero()) {
                return Err(Error::DegenerateBody);
            }
            Ok(h.powf(p))
        })
        .collect::<Result<_>>()?;
    Ok(mean_and_stderr(&values, key.clone())?.root(p))
}

/// `h_{Z_q(K)}(θ) = (∫_K |<x, θ>|^q dx)^{1/q}` from `m` points (`key.derive(0)`).
pub fn zq_support<T: Scalar>(
    body: &Body<T>,
    q: T,
    theta: &[T],
    m: usize,
    key: &StreamKey,
) -> Result<Estimate<T>> {
    if q < T::one() {
        return Err(Error::InvalidParameter(format!("need q >= 1, got {q}")));
    }
    if theta.len() != body.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            found: theta.len(),
        });
    }
    let len = norm(theta);
    if (len - T::one()).abs() > T::of(1e-10) {
        return Err(Error::NotUnit { norm: len.as_f64() });
    }
    check_samples(m)?;
    let cloud = body.sample(m, &key.derive(0))?;
    let radii: Vec<T> = cloud.points().row_iter().map(|x| dot(x, theta).abs()).collect();
    power_mean(&radii, q, key)
}

/// One entry of a moment-ratio table: `I_q(K) / (sqrt(n) L_K)`.
#[derive(Clone, Debug, Serialize)]
pub struct MomentRatio<T> {
    pub q: T,
    pub moment: Estimate<T>,
    pub ratio: Estimate<T>,
    /// Closed form for the ball, when available.
    pub exact_ratio: Option<T>,
}

/// Exponents `{1, 2, 4, ...} ∪ {⌊√n⌋}` up to `√n`.
pub fn positive_exponents(n: usize) -> Vec<usize> {
    let cap = (n as f64).sqrt().floor() as usize;
    let mut qs: Vec<usize> = std::iter::successors(Some(1usize), |q| Some(q * 2))
        .take_while(|&q| q <= cap)
        .collect();
    if cap >= 1 && qs.last() != Some(&cap) {
        qs.push(cap);
    }
    qs
}

/// Exponents `1..=⌊min(√n, (n-1)/2 - 1)⌋` for negative moments.
pub fn negative_exponents(n: usize) -> Vec<usize> {
    let nf = n as f64;
    let cap = nf.sqrt().min((nf - 1.0) / 2.0 - 1.0).floor();
    if cap < 1.0 {
        return Vec::new();
    }
    (1..=cap as usize).collect()
}

fn moment_table<T: Scalar>(
    body: &Body<T>,
    exponents: &[T],
    m: usize,
    key: &StreamKey,
) -> Result<Vec<MomentRatio<T>>> {
    let n = body.dim();
    if n < 4 {
        return Err(Error::InvalidDimension(format!("moment tables need n >= 4, got {n}")));
    }
    check_samples(m)?;
    let cloud = body.sample(m, &key.derive(0))?;
    let radii: Vec<T> = cloud.points().row_iter().map(norm).collect();
    let normalizer = T::of_usize(n).sqrt() * body.isotropic_constant();
    exponents
        .iter()
        .map(|&q| {
            check_exponent(q, n)?;
            let moment = power_mean(&radii, q, key)?;
            let exact_ratio = (body.kind() == BodyKind::Ball)
                .then(|| ball_moment_exact(body.scale(), n, q) / normalizer);
            Ok(MomentRatio {
                q,
                ratio: moment.scaled(normalizer.recip()),
                moment,
                exact_ratio,
            })
        })
        .collect()
}

/// `I_q(K) / (sqrt(n) L_K)` for `q` in [`positive_exponents`], sharing one
/// sample of `m` points.
pub fn positive_moment_check<T: Scalar>(
    body: &Body<T>,
    m: usize,
    key: &StreamKey,
) -> Result<Vec<MomentRatio<T>>> {
    let qs: Vec<T> = positive_exponents(body.dim()).into_iter().map(T::of_usize).collect();
    moment_table(body, &qs, m, key)
}

/// `I_{-q}(K) / (sqrt(n) L_K)` for `q` in [`negative_exponents`].
pub fn negative_moment_check<T: Scalar>(
    body: &Body<T>,
    m: usize,
    key: &StreamKey,
) -> Result<Vec<MomentRatio<T>>> {
    let qs: Vec<T> = negative_exponents(body.dim())
        .into_iter()
        .map(|q| -T::of_usize(q))
        .collect();
    moment_table(body, &qs, m, key)
}

/// Both sides of `I_{-q}(K,F) ≃ sqrt(k/q) w_{-q}(P_F Z_q(K))` over Haar `F`.
#[derive(Clone, Debug, Serialize)]
pub struct CentroidWidthReport<T> {
    pub k: usize,
    pub q: usize,
    /// Left side over right side, one entry per subspace.
    pub ratios: Vec<T>,
    pub min: T,
    pub max: T,
    pub mean: T,
    /// `(∫ I_{-q}(K,F)^{-q} dν)^{-1/q} / (sqrt(k/n) I_{-q}(K))`.
    pub subspace_average_ratio: T,
}

/// Compares both sides of the negative-moment / centroid-body equivalence
/// on `subspaces` Haar subspaces for a sample of `m` points of `body`.
/// `q` must be an integer with `q < k` (and `q <= (k-1)/2` for finite
/// variance).
pub fn centroid_width_check<T: Scalar>(
    body: &Body<T>,
    k: usize,
    q: usize,
    subspaces: usize,
    m: usize,
    key: &StreamKey,
) -> Result<CentroidWidthReport<T>> {
    if q >= k {
        return Err(Error::PropositionHypothesis { q, k });
    }
    check_samples(m)?;
    let cloud = body.sample(m, &key.derive(0))?;
    centroid_width_ratios(&cloud, k, q, subspaces, key)
}

/// [`centroid_width_check`] on a given cloud. Subspace `i` uses
/// `key.derive(1).derive(i)`; its `subspaces` directions on `S_F^{k-1}`
/// come from `key.derive(2).derive(i)`.
pub fn centroid_width_ratios<T: Scalar>(
    cloud: &PointCloud<T>,
    k: usize,
    q: usize,
    subspaces: usize,
    key: &StreamKey,
) -> Result<CentroidWidthReport<T>> {
    let n = cloud.dim();
    if q < 1 || q >= k {
        return Err(Error::PropositionHypothesis { q, k });
    }
    if k > n {
        return Err(Error::InvalidDimension(format!("k = {k} exceeds n = {n}")));
    }
    let qf = T::of_usize(q);
    check_exponent(-qf, k)?;
    if subspaces < 2 {
        return Err(Error::InvalidParameter("need at least two subspaces".into()));
    }
    let points = cloud.points();
    let m_t = T::of_usize(points.rows());
    let scale = (T::of_usize(k) / qf).sqrt();

    // (LHS ratio, mean_j |P_F X_j|^{-q}) per subspace.
    let per_subspace: Vec<(T, T)> = (0..subspaces)
        .into_par_iter()
        .map(|i| {
            let f = haar_subspace::<T>(n, k, &key.derive(1).derive(i as u64))?;
            let coords = points.matmul(f.frame())?;
            let neg_powers: Vec<T> = coords.row_iter().map(|y| norm_sq(y).powf(-qf / T::of(2.0))).collect();
            let inv_moment = pairwise_sum(&neg_powers) / m_t;
            let lhs = inv_moment.powf(-qf.recip());

            let mut stream = key.derive(2).derive(i as u64).stream();
            let support_powers: Vec<T> = (0..subspaces)
                .map(|_| {
                    let phi: Vec<T> = sphere_point(k, &mut stream);
                    let abs_powers: Vec<T> = coords.row_iter().map(|y| dot(y, &phi).abs().powf(qf)).collect();
                    let h = (pairwise_sum(&abs_powers) / m_t).powf(qf.recip());
                    h.powf(-qf)
                })
                .collect();
            let width = (pairwise_sum(&support_powers) / T::of_usize(subspaces)).powf(-qf.recip());
            Ok((lhs / (scale * width), inv_moment))
        })
        .collect::<Result<_>>()?;

    let ratios: Vec<T> = per_subspace.iter().map(|&(r, _)| r).collect();
    let inv_moments: Vec<T> = per_subspace.iter().map(|&(_, v)| v).collect();
    let averaged = (pairwise_sum(&inv_moments) / T::of_usize(subspaces)).powf(-qf.recip());
    let full_neg: Vec<T> = points.row_iter().map(|x| norm_sq(x).powf(-qf / T::of(2.0))).collect();
    let full_moment = (pairwise_sum(&full_neg) / m_t).powf(-qf.recip());
    let subspace_average_ratio =
        averaged / ((T::of_usize(k) / T::of_usize(n)).sqrt() * full_moment);

    let min = ratios.iter().cloned().fold(T::infinity(), T::min);
    let max = ratios.iter().cloned().fold(T::neg_infinity(), T::max);
    let mean = pairwise_sum(&ratios) / T::of_usize(ratios.len());
    Ok(CentroidWidthReport {
        k,
        q,
        ratios,
        min,
        max,
        mean,
        subspace_average_ratio,
    })
}
