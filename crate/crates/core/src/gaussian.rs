//! Gaussian random polytopes and the exact oracle for `E max_j |G_j|`.
//!
//! For i.i.d. standard Gaussian vectors `G_1..G_N` in `R^k`,
//! `P(max_j |G_j| <= t) = P(|G_1| <= t)^N` with `P(|G_1| <= t)` the chi CDF
//! `P(k/2, t^2/2)`, so `E max_j |G_j| = ∫_0^∞ (1 - F(t)^N) dt` is computed
//! by adaptive quadrature. Because a Gaussian vector projected onto any
//! `k`-dimensional subspace is a standard Gaussian of `R^k`, this value is
//! also `E R̃_k(K_N)` for the Gaussian polytope in any `n >= k`.

use rayon::prelude::*;
use serde::Serialize;

use crate::bodies::SAMPLE_CHUNK;
use crate::error::{Error, Result};
use crate::estimate::{mean_and_stderr, Estimate};
use crate::grassmann::haar_subspace;
use crate::linalg::Matrix;
use crate::quadrature::integrate;
use crate::radii::{outer_radius_points, projected_radius, PointCloud, Source};
use crate::scalar::Scalar;
use crate::special::{ln_gamma, ln_upper_regularized_gamma, regularized_gamma};
use crate::stream::StreamKey;

pub const DEFAULT_ABS_TOL: f64 = 1e-9;

/// Expected maximum norm of `count` standard Gaussian vectors in `R^k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiMaxQuery<T> {
    pub k: usize,
    pub count: usize,
    pub abs_tol: T,
}

impl<T: Scalar> ChiMaxQuery<T> {
    pub fn new(k: usize, count: usize) -> Self {
        Self {
            k,
            count,
            abs_tol: T::of(DEFAULT_ABS_TOL),
        }
    }

    pub fn with_tolerance(mut self, abs_tol: T) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.k < 1 || self.count < 1 {
            return Err(Error::InvalidParameter(format!(
                "chi maximum needs k >= 1 and N >= 1, got k = {}, N = {}",
                self.k, self.count
            )));
        }
        if !(self.abs_tol > T::zero()) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        Ok(())
    }
}

fn chi_parts<T: Scalar>(k: usize, t: T) -> Result<(T, T)> {
    if t < T::zero() {
        return Err(Error::NegativeArgument(t.as_f64()));
    }
    let half = T::of(0.5);
    regularized_gamma(T::of_usize(k) * half, t * t * half)
}

/// CDF of the chi distribution with `k` degrees of freedom,
/// `P(|G| <= t) = P(k/2, t^2/2)`.
pub fn chi_cdf<T: Scalar>(k: usize, t: T) -> Result<T> {
    if k < 1 {
        return Err(Error::InvalidParameter("chi degrees of freedom must be positive".into()));
    }
    Ok(chi_parts(k, t)?.0)
}

/// Survival function `P(|G| > t) = Q(k/2, t^2/2)`, accurate in the tail.
pub fn chi_sf<T: Scalar>(k: usize, t: T) -> Result<T> {
    if k < 1 {
        return Err(Error::InvalidParameter("chi degrees of freedom must be positive".into()));
    }
    Ok(chi_parts(k, t)?.1)
}

/// `P(max of count chi_k variables > t) = 1 - F(t)^N`, evaluated through
/// whichever of `F` and `1 - F` is smaller.
fn max_exceedance<T: Scalar>(k: usize, count: T, t: T) -> T {
    let (p, q) = chi_parts(k, t).expect("t >= 0 on the integration range");
    if p <= T::of(0.5) {
        if p == T::zero() {
            T::one()
        } else {
            -(count * p.ln()).exp_m1()
        }
    } else {
        -(count * (-q).ln_1p()).exp_m1()
    }
}

/// `E max_{1<=j<=N} |G_j|` by adaptive Gauss-Kronrod quadrature of
/// `1 - F(t)^N` on `[0, t_max]`, where `t_max` is the first point of a
/// half-unit grid with `N (1 - F(t_max)) t_max < abs_tol / 2`.
pub fn expected_max_chi<T: Scalar>(query: &ChiMaxQuery<T>) -> Result<T> {
    query.validate()?;
    let k = query.k;
    let count = T::of_usize(query.count);
    let half_tol = query.abs_tol * T::of(0.5);

    let mut t_max = T::of_usize(k).sqrt().max((T::of(2.0) * count.ln()).sqrt()) + T::one();
    while count * chi_sf(k, t_max)? * t_max >= half_tol {
        t_max = t_max + T::of(0.5);
    }
    let pieces = t_max.ceil().to_usize().unwrap_or(1).max(1);
    let integral = integrate(|t| max_exceedance(k, count, t), T::zero(), t_max, half_tol, pieces)?;
    Ok(integral.value)
}

/// `∫_t^∞ r^k e^{-r^2/2} dr = 2^{(k-1)/2} Γ((k+1)/2, t^2/2)` for `k >= 0`.
pub fn tail_integral<T: Scalar>(k: usize, t: T) -> Result<T> {
    Ok(ln_tail_integral(k, t)?.exp())
}

fn ln_tail_integral<T: Scalar>(k: usize, t: T) -> Result<T> {
    if t < T::zero() {
        return Err(Error::NegativeArgument(t.as_f64()));
    }
    let half = T::of(0.5);
    let a = (T::of_usize(k) + T::one()) * half;
    let ln_q = ln_upper_regularized_gamma(a, t * t * half)?;
    Ok((T::of_usize(k) - T::one()) * half * T::LN_2() + ln_gamma(a) + ln_q)
}

/// One evaluated point of the two-sided tail bound
/// `t^{k-1} e^{-t^2/2} <= ∫_t^∞ r^k e^{-r^2/2} dr <= 2 t^{k-1} e^{-t^2/2}`.
#[derive(Clone, Debug, Serialize)]
pub struct TailBoundRow {
    pub k: usize,
    pub t: f64,
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
    pub holds: bool,
    /// `|value - lower|` (the bound is an identity at `k = 1`).
    pub lower_gap: f64,
}

/// Relative slack for rounding when comparing the bounds in log space.
const BOUND_SLACK: f64 = 1e-12;

/// Smallest `t` admitted by the tail bound for dimension `k`.
pub fn tail_bound_threshold(k: usize) -> f64 {
    (2.0 * (k as f64 - 1.0)).sqrt().max(1.0)
}

/// Evaluates the tail bound at each `(k, t)`; every point must satisfy
/// `1 <= k <= k_max` and `t >= max(sqrt(2(k-1)), 1)`.
pub fn tail_bound_check(k_max: usize, grid: &[(usize, f64)]) -> Result<Vec<TailBoundRow>> {
    for &(k, t) in grid {
        if k < 1 || k > k_max || !(t >= tail_bound_threshold(k)) {
            return Err(Error::LemmaHypothesis { k, t });
        }
    }
    grid.iter()
        .map(|&(k, t)| {
            let ln_value = ln_tail_integral(k, t)?;
            let ln_lower = (k as f64 - 1.0) * t.ln() - 0.5 * t * t;
            let holds = ln_value >= ln_lower - BOUND_SLACK
                && ln_value <= std::f64::consts::LN_2 + ln_lower + BOUND_SLACK;
            let (value, lower) = (ln_value.exp(), ln_lower.exp());
            Ok(TailBoundRow {
                k,
                t,
                lower,
                value,
                upper: 2.0 * lower,
                holds,
                lower_gap: (value - lower).abs(),
            })
        })
        .collect()
}

/// A deterministic `count`-point grid of admissible `(k, t)` pairs with
/// `k` cycling through `1..=k_max` and `t` from the threshold upwards
/// (the threshold itself included).
pub fn tail_bound_grid(k_max: usize, count: usize) -> Vec<(usize, f64)> {
    (0..count)
        .map(|i| {
            let k = 1 + i % k_max.max(1);
            let t = tail_bound_threshold(k) + 0.37 * (i % 7) as f64 + 0.5 * (i / k_max.max(1)) as f64;
            (k, t)
        })
        .collect()
}

/// `count` i.i.d. `N(0, I_n)` points.
pub fn gaussian_cloud<T: Scalar>(n: usize, count: usize, key: &StreamKey) -> Result<PointCloud<T>> {
    if n < 1 || count < 1 {
        return Err(Error::InvalidParameter(format!(
            "Gaussian cloud needs n >= 1 and N >= 1, got n = {n}, N = {count}"
        )));
    }
    let mut data = vec![T::zero(); n * count];
    data.par_chunks_mut(SAMPLE_CHUNK * n)
        .enumerate()
        .for_each(|(block, chunk)| key.derive(block as u64).stream().fill_normal(chunk));
    Ok(PointCloud::new(
        Matrix::from_row_major(count, n, data)?,
        Source::Gaussian,
        key.clone(),
    ))
}

/// Direct simulation of `E max_j |G_j|` over `replicas` independent
/// replicas, drawing `|G_j|^2` as chi-square variates. Replica blocks of
/// 1024 use `key.derive(block)`.
pub fn simulate_max_chi(k: usize, count: usize, replicas: usize, key: &StreamKey) -> Result<Estimate<f64>> {
    if k < 1 || count < 1 || replicas < 1 {
        return Err(Error::InvalidParameter("k, N and replicas must be positive".into()));
    }
    let dof = k as f64;
    let mut values = vec![0.0f64; replicas];
    values
        .par_chunks_mut(SAMPLE_CHUNK)
        .enumerate()
        .for_each(|(block, out)| {
            let mut stream = key.derive(block as u64).stream();
            for v in out.iter_mut() {
                let mut best = 0.0f64;
                for _ in 0..count {
                    best = best.max(stream.chi_square(dof));
                }
                *v = best.sqrt();
            }
        });
    mean_and_stderr(&values, key.clone())
}

/// Estimate of `E R̃_k(K_N)` for the Gaussian polytope: replica `i` draws a
/// fresh cloud (`key.derive(i).derive(0)`) and a fresh Haar subspace
/// (`key.derive(i).derive(1)`), and records `R(P_F K_N)`. The replicas are
/// i.i.d., so the standard error covers both sources of randomness.
pub fn gaussian_mean_outer_radius<T: Scalar>(
    n: usize,
    count: usize,
    k: usize,
    replicas: usize,
    key: &StreamKey,
) -> Result<Estimate<T>> {
    if k < 1 || k > n {
        return Err(Error::InvalidDimension(format!(
            "projection dimension {k} outside 1..={n}"
        )));
    }
    let values = (0..replicas)
        .into_par_iter()
        .map(|i| {
            let task = key.derive(i as u64);
            let cloud = gaussian_cloud::<T>(n, count, &task.derive(0))?;
            if k == n {
                outer_radius_points(&cloud)
            } else {
                projected_radius(&cloud, &haar_subspace(n, k, &task.derive(1))?)
            }
        })
        .collect::<Result<Vec<T>>>()?;
    mean_and_stderr(&values, key.clone())
}
