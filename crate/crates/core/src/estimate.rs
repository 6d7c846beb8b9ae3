//! Monte Carlo estimates and order-fixed reductions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stream::StreamKey;

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise sum in index order. The grouping depends only on the length,
/// so the result is reproducible whatever produced the inputs.
pub fn pairwise_sum<T: Scalar>(xs: &[T]) -> T {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().fold(T::zero(), |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise sum of `f(x)` without allocating the mapped sequence.
pub fn pairwise_sum_by<T: Scalar, U>(xs: &[U], f: &impl Fn(&U) -> T) -> T {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().fold(T::zero(), |acc, x| acc + f(x));
    }
    let mid = xs.len() / 2;
    pairwise_sum_by(&xs[..mid], f) + pairwise_sum_by(&xs[mid..], f)
}

/// A Monte Carlo value with its standard error and provenance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate<T> {
    pub value: T,
    pub stderr: T,
    pub samples: usize,
    pub key: StreamKey,
}

impl<T: Scalar> Estimate<T> {
    /// An exact value carried as an estimate (zero standard error).
    pub fn exact(value: T, key: StreamKey) -> Self {
        Self {
            value,
            stderr: T::zero(),
            samples: 1,
            key,
        }
    }

    /// `|self - target| <= z * stderr + slack`.
    pub fn within(&self, target: T, z: T, slack: T) -> bool {
        (self.value - target).abs() <= z * self.stderr + slack
    }

    /// Applies `x -> x^(1/q)` with first-order (delta-method) error
    /// propagation: `se(y) = |y / (q x)| se(x)`.
    pub fn root(&self, q: T) -> Self {
        let value = self.value.powf(q.recip());
        let stderr = if self.value == T::zero() {
            T::zero()
        } else {
            (value / (q * self.value)).abs() * self.stderr
        };
        Self {
            value,
            stderr,
            samples: self.samples,
            key: self.key.clone(),
        }
    }

    /// Multiplies value and error by a constant.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            value: self.value * factor,
            stderr: self.stderr * factor.abs(),
            samples: self.samples,
            key: self.key.clone(),
        }
    }

    /// Combined standard error of a difference of independent estimates.
    pub fn combined_stderr(&self, other: &Self) -> T {
        self.stderr.hypot(other.stderr)
    }
}

/// Sample mean and standard error (`s / sqrt(count)`) with index-ordered
/// pairwise reductions. A single observation gets zero standard error.
pub fn mean_and_stderr<T: Scalar>(xs: &[T], key: StreamKey) -> Result<Estimate<T>> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    let count = T::of_usize(xs.len());
    let mean = pairwise_sum(xs) / count;
    let stderr = if xs.len() > 1 {
        let ss = pairwise_sum_by(xs, &|&x: &T| (x - mean) * (x - mean));
        (ss / (count - T::one())).sqrt() / count.sqrt()
    } else {
        T::zero()
    };
    Ok(Estimate {
        value: mean,
        stderr,
        samples: xs.len(),
        key,
    })
}
