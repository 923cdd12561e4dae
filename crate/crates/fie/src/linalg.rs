//! Minimal dense linear algebra on row-major `Vec<T>` buffers.
//!
//! The state dimensions here are tiny (the benchmark system is scalar), so a
//! handful of straightforward loops beats pulling in a matrix library.

use crate::{Error, Result, Scalar};

pub(crate) fn sq_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum()
}

pub(crate) fn identity<T: Scalar>(n: usize) -> Vec<T> {
    let mut m = vec![T::zero(); n * n];
    for i in 0..n {
        m[i * n + i] = T::one();
    }
    m
}

/// `a (rows x inner) * b (inner x cols)`, row-major.
pub(crate) fn mat_mul<T: Scalar>(
    a: &[T],
    b: &[T],
    rows: usize,
    inner: usize,
    cols: usize,
) -> Vec<T> {
    debug_assert_eq!(a.len(), rows * inner);
    debug_assert_eq!(b.len(), inner * cols);
    let mut out = vec![T::zero(); rows * cols];
    for i in 0..rows {
        for k in 0..inner {
            let aik = a[i * inner + k];
            for j in 0..cols {
                out[i * cols + j] += aik * b[k * cols + j];
            }
        }
    }
    out
}

pub(crate) fn mat_vec<T: Scalar>(a: &[T], x: &[T], rows: usize, cols: usize) -> Vec<T> {
    debug_assert_eq!(a.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    (0..rows)
        .map(|i| (0..cols).map(|j| a[i * cols + j] * x[j]).sum())
        .collect()
}

pub(crate) fn transpose<T: Scalar>(a: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut out = vec![T::zero(); rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = a[i * cols + j];
        }
    }
    out
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub(crate) fn cholesky<T: Scalar>(a: &[T], n: usize) -> Result<Vec<T>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > T::zero()) || !sum.is_finite() {
                    return Err(Error::Numerical(format!(
                        "matrix not positive definite: pivot {sum} at row {i}"
                    )));
                }
                l[i * n + j] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves `A x = b` given the lower Cholesky factor `l` of `A`.
pub(crate) fn chol_solve<T: Scalar>(l: &[T], b: &[T], n: usize) -> Vec<T> {
    debug_assert_eq!(b.len(), n);
    // forward: L y = b
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    // backward: L^T x = y
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    x
}
