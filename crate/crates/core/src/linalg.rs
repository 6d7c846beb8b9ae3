//! Small dense linear algebra: a row-major matrix, vector helpers and a
//! Householder QR with a fixed sign convention.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm_sq<T: Scalar>(x: &[T]) -> T {
    dot(x, x)
}

#[inline]
pub fn norm<T: Scalar>(x: &[T]) -> T {
    norm_sq(x).sqrt()
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Leading `k` columns.
    pub fn leading_columns(&self, k: usize) -> Self {
        assert!(k <= self.cols);
        Self::from_fn(self.rows, k, |i, j| self[(i, j)])
    }

    /// Appends the rows of `other`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.cols,
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        T::gemm(
            self.rows,
            self.cols,
            rhs.cols,
            T::one(),
            &self.data,
            (self.cols as isize, 1),
            &rhs.data,
            (rhs.cols as isize, 1),
            T::zero(),
            &mut out.data,
            (rhs.cols as isize, 1),
        );
        Ok(out)
    }

    /// `self^T * rhs` without materialising the transpose.
    pub fn t_matmul(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.cols, rhs.cols);
        T::gemm(
            self.cols,
            self.rows,
            rhs.cols,
            T::one(),
            &self.data,
            (1, self.cols as isize),
            &rhs.data,
            (rhs.cols as isize, 1),
            T::zero(),
            &mut out.data,
            (rhs.cols as isize, 1),
        );
        Ok(out)
    }

    /// `self^T * x` for a vector `x` of length `rows`.
    pub fn t_matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: x.len(),
            });
        }
        let mut out = vec![T::zero(); self.cols];
        for (row, &xi) in self.row_iter().zip(x) {
            for (o, &r) in out.iter_mut().zip(row) {
                *o = *o + r * xi;
            }
        }
        Ok(out)
    }

    /// `self * x` for a vector `x` of length `cols`.
    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok(self.row_iter().map(|row| dot(row, x)).collect())
    }

    /// Largest entrywise deviation of `self^T self` from the identity.
    pub fn orthonormality_defect(&self) -> T {
        let gram = self.t_matmul(self).expect("square gram");
        let mut worst = T::zero();
        for i in 0..gram.rows {
            for j in 0..gram.cols {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Orthonormal factor `Q` (n x k) of the thin QR decomposition `A = QR`,
/// normalised so that `R` has a positive diagonal.
///
/// Householder reflections are used. Column `j` of `Q` depends only on the
/// first `j + 1` columns of `A`, so factoring a prefix of columns gives
/// the same leading columns bit for bit.
pub fn orthonormal_factor<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let (n, k) = (a.rows(), a.cols());
    if k > n {
        return Err(Error::InvalidDimension(format!(
            "cannot orthonormalise {k} columns in dimension {n}"
        )));
    }
    // Column-major working copy: columns are contiguous.
    let mut work: Vec<Vec<T>> = (0..k).map(|j| a.column(j)).collect();
    let mut reflectors: Vec<Vec<T>> = Vec::with_capacity(k);
    let mut diag_sign = vec![T::one(); k];

    for j in 0..k {
        let x = &work[j][j..];
        let x_norm = norm(x);
        let mut v = x.to_vec();
        if x_norm == T::zero() {
            return Err(Error::InvalidDimension("rank-deficient column".into()));
        }
        // alpha = -sign(x0) |x| avoids cancellation in v0 = x0 - alpha.
        let alpha = if x[0] >= T::zero() { -x_norm } else { x_norm };
        v[0] = v[0] - alpha;
        let v_norm = norm(&v);
        for vi in &mut v {
            *vi = *vi / v_norm;
        }
        let two = T::of(2.0);
        for col in work.iter_mut().skip(j) {
            let tail = &mut col[j..];
            let proj = two * dot(&v, tail);
            for (t, &vi) in tail.iter_mut().zip(&v) {
                *t = *t - proj * vi;
            }
        }
        // R_jj = alpha after reflection.
        diag_sign[j] = if alpha >= T::zero() { T::one() } else { -T::one() };
        reflectors.push(v);
    }

    // Q e_j = H_0 ... H_{k-1} e_j, applied right to left.
    let mut q = Matrix::zeros(n, k);
    let two = T::of(2.0);
    for j in 0..k {
        let mut e = vec![T::zero(); n];
        e[j] = T::one();
        for (r, v) in reflectors.iter().enumerate().rev() {
            let tail = &mut e[r..];
            let proj = two * dot(v, tail);
            for (t, &vi) in tail.iter_mut().zip(v) {
                *t = *t - proj * vi;
            }
        }
        for (i, &ei) in e.iter().enumerate() {
            q[(i, j)] = ei * diag_sign[j];
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_matrix(n: usize, k: usize) -> Matrix<f64> {
        let mut s = crate::stream::StreamKey::new(3).stream();
        Matrix::from_fn(n, k, |_, _| s.normal())
    }

    #[test]
    fn qr_reconstructs_with_positive_diagonal() {
        let a = sample_matrix(7, 4);
        let q = orthonormal_factor(&a).unwrap();
        assert!(q.orthonormality_defect() < 1e-13);
        // R = Q^T A must be upper triangular with positive diagonal.
        let r = q.t_matmul(&a).unwrap();
        for i in 0..4 {
            assert!(r[(i, i)] > 0.0);
            for j in 0..i {
                assert!(r[(i, j)].abs() < 1e-12);
            }
        }
        let back = q.matmul(&r).unwrap();
        for (x, y) in back.as_slice().iter().zip(a.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn prefix_columns_are_bit_identical() {
        let a = sample_matrix(9, 9);
        let full = orthonormal_factor(&a).unwrap();
        let part = orthonormal_factor(&a.leading_columns(4)).unwrap();
        assert_eq!(full.leading_columns(4), part);
    }

    #[test]
    fn matmul_shapes() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
        assert_eq!(a.matmul(&b).unwrap().as_slice(), &[-1.0, -1.0, -1.0]);
        assert_eq!(a.t_matmul(&a).unwrap().as_slice(), &[35.0, 44.0, 44.0, 56.0]);
        assert_eq!(a.t_matvec(&[1.0, 0.0, 1.0]).unwrap(), vec![6.0, 8.0]);
        assert!(a.matmul(&a).is_err());
    }
}
