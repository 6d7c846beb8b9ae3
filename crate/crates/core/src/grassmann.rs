//! Haar-random subspaces and flags, projections, and sphere marginals.

use crate::error::{Error, Result};
use crate::linalg::{norm, orthonormal_factor, Matrix};
use crate::scalar::Scalar;
use crate::special::ln_gamma;
use crate::stream::StreamKey;

/// A k-dimensional linear subspace of `R^n`, stored as an orthonormal
/// `n x k` frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace<T> {
    frame: Matrix<T>,
}

impl<T: Scalar> Subspace<T> {
    /// Wraps an orthonormal frame (checked to 1e-10 entrywise).
    pub fn from_frame(frame: Matrix<T>) -> Result<Self> {
        if frame.cols() < 1 || frame.cols() > frame.rows() {
            return Err(Error::InvalidDimension(format!(
                "frame must have 1 <= k <= n columns, got {} x {}",
                frame.rows(),
                frame.cols()
            )));
        }
        if frame.orthonormality_defect() > T::of(1e-10) {
            return Err(Error::InvalidParameter("frame columns are not orthonormal".into()));
        }
        Ok(Self { frame })
    }

    /// Span of the first `k` standard basis vectors.
    pub fn coordinate(n: usize, k: usize) -> Result<Self> {
        check_rank(n, k)?;
        Ok(Self {
            frame: Matrix::from_fn(n, k, |i, j| if i == j { T::one() } else { T::zero() }),
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.rows()
    }

    pub fn dim(&self) -> usize {
        self.frame.cols()
    }

    pub fn frame(&self) -> &Matrix<T> {
        &self.frame
    }

    /// Coordinates of `P_F x` in the frame basis (`frame^T x`).
    pub fn project(&self, x: &[T]) -> Result<Vec<T>> {
        self.frame.t_matvec(x)
    }

    /// `|P_F x|`.
    pub fn projected_norm(&self, x: &[T]) -> Result<T> {
        Ok(norm(&self.project(x)?))
    }

    /// Embeds frame coordinates back into `R^n`.
    pub fn embed(&self, coords: &[T]) -> Result<Vec<T>> {
        self.frame.matvec(coords)
    }

    /// Image under an orthogonal map `u` (`n x n`).
    pub fn rotated(&self, u: &Matrix<T>) -> Result<Self> {
        Ok(Self {
            frame: u.matmul(&self.frame)?,
        })
    }
}

/// A nested chain `F_1 ⊂ F_2 ⊂ ...` spanned by prefixes of an orthonormal
/// basis. A flag may be truncated to its first `depth` columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Flag<T> {
    basis: Matrix<T>,
}

impl<T: Scalar> Flag<T> {
    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    /// Number of basis vectors held (`n` for a full flag).
    pub fn depth(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &Matrix<T> {
        &self.basis
    }

    /// The subspace `F_k` spanned by the first `k` basis vectors.
    pub fn prefix(&self, k: usize) -> Result<Subspace<T>> {
        if k < 1 || k > self.depth() {
            return Err(Error::InvalidDimension(format!(
                "prefix {k} outside 1..={}",
                self.depth()
            )));
        }
        Ok(Subspace {
            frame: self.basis.leading_columns(k),
        })
    }

    /// `|P_{F_k} x|` for every `k = 1..=depth`, as running sums of squared
    /// coordinates (so the sequence is nondecreasing in floating point).
    pub fn projected_norm_profile(&self, x: &[T]) -> Result<Vec<T>> {
        let coords = self.basis.t_matvec(x)?;
        let mut acc = T::zero();
        Ok(coords
            .iter()
            .map(|&c| {
                acc = acc + c * c;
                acc.sqrt()
            })
            .collect())
    }
}

fn check_rank(n: usize, k: usize) -> Result<()> {
    if k < 1 || k > n {
        return Err(Error::InvalidDimension(format!(
            "subspace dimension must satisfy 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    Ok(())
}

/// Orthonormalised `n x k` Gaussian matrix. Column `j` consumes normals
/// `j*n .. (j+1)*n` of the stream, so smaller `k` yields a prefix.
fn haar_frame<T: Scalar>(n: usize, k: usize, key: &StreamKey) -> Result<Matrix<T>> {
    check_rank(n, k)?;
    let mut stream = key.stream();
    let mut gaussian = Matrix::zeros(n, k);
    for j in 0..k {
        for i in 0..n {
            gaussian[(i, j)] = T::of(stream.normal());
        }
    }
    orthonormal_factor(&gaussian)
}

/// A Haar-distributed element of `G_{n,k}`.
pub fn haar_subspace<T: Scalar>(n: usize, k: usize, key: &StreamKey) -> Result<Subspace<T>> {
    Ok(Subspace {
        frame: haar_frame(n, k, key)?,
    })
}

/// A Haar-distributed full flag in `R^n`. Every prefix `F_k` is Haar on
/// `G_{n,k}`; `haar_flag(n, key).prefix(k)` equals `haar_subspace(n, k, key)`.
pub fn haar_flag<T: Scalar>(n: usize, key: &StreamKey) -> Result<Flag<T>> {
    haar_flag_truncated(n, n, key)
}

/// The first `depth` vectors of `haar_flag(n, key)`, computed without the rest.
pub fn haar_flag_truncated<T: Scalar>(n: usize, depth: usize, key: &StreamKey) -> Result<Flag<T>> {
    Ok(Flag {
        basis: haar_frame(n, depth, key)?,
    })
}

/// Uniform point of `S^{n-1}`: a normalised Gaussian vector.
pub fn sphere_sample<T: Scalar>(n: usize, key: &StreamKey) -> Result<Vec<T>> {
    if n < 1 {
        return Err(Error::InvalidDimension("sphere dimension must be positive".into()));
    }
    let mut stream = key.stream();
    Ok(sphere_point(n, &mut stream))
}

pub(crate) fn sphere_point<T: Scalar>(n: usize, stream: &mut crate::stream::Stream) -> Vec<T> {
    loop {
        let mut v = vec![T::zero(); n];
        stream.fill_normal(&mut v);
        let len = norm(&v);
        if len > T::zero() {
            v.iter_mut().for_each(|x| *x = *x / len);
            return v;
        }
    }
}

/// `m_{k,q} = ∫_{S^{k-1}} |θ_1|^q dσ = Γ((q+1)/2) Γ(k/2) / (√π Γ((k+q)/2))`,
/// for real `q > -1`.
pub fn sphere_marginal_moment<T: Scalar>(k: usize, q: T) -> Result<T> {
    if k < 1 {
        return Err(Error::InvalidDimension("sphere dimension must be positive".into()));
    }
    if q <= -T::one() {
        return Err(Error::DivergentMoment { q: q.as_f64() });
    }
    if k == 1 {
        return Ok(T::one());
    }
    let half = T::of(0.5);
    let kf = T::of_usize(k);
    let ln = ln_gamma((q + T::one()) * half) + ln_gamma(kf * half)
        - half * T::PI().ln()
        - ln_gamma((kf + q) * half);
    Ok(ln.exp())
}

/// Exact `E_F |P_F x|^q / |x|^q = m_{n,q} / m_{k,q}` over Haar `F ∈ G_{n,k}`.
pub fn projected_moment_factor<T: Scalar>(n: usize, k: usize, q: T) -> Result<T> {
    check_rank(n, k)?;
    Ok(sphere_marginal_moment(n, q)? / sphere_marginal_moment(k, q)?)
}
