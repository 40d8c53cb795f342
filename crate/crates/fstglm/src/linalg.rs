//! Minimal dense linear algebra: row-major matrices and SPD Cholesky solves.
//!
//! The fitting problems here are small (tens to low hundreds of columns), so
//! a direct factorization with one iterative-refinement pass is both exact
//! enough for the stated residual contracts and fully deterministic.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Validation("ragged rows in matrix".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// y = M x.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        self.iter_rows().map(|row| dot(row, x)).collect()
    }

    /// y = Mᵀ x.
    pub fn tr_matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![T::zero(); self.cols];
        for (i, row) in self.iter_rows().enumerate() {
            let xi = x[i];
            for (yj, &mij) in y.iter_mut().zip(row) {
                *yj += mij * xi;
            }
        }
        y
    }

    /// Gram matrix Mᵀ diag(w) M restricted to the given columns.
    ///
    /// Returns the dense symmetric matrix over `cols_idx` in that order.
    pub fn weighted_gram(&self, w: &[T], cols_idx: &[usize]) -> Matrix<T> {
        assert_eq!(w.len(), self.rows);
        let k = cols_idx.len();
        let mut g = Matrix::zeros(k, k);
        for (i, row) in self.iter_rows().enumerate() {
            let wi = w[i];
            if wi == T::zero() {
                continue;
            }
            for (a, &ca) in cols_idx.iter().enumerate() {
                let va = row[ca] * wi;
                if va == T::zero() {
                    continue;
                }
                for (b, &cb) in cols_idx.iter().enumerate().skip(a) {
                    let cur = g.get(a, b);
                    g.set(a, b, cur + va * row[cb]);
                }
            }
        }
        for a in 1..k {
            for b in 0..a {
                let v = g.get(b, a);
                g.set(a, b, v);
            }
        }
        g
    }

    /// Mᵀ x restricted to the given columns.
    pub fn tr_matvec_cols(&self, x: &[T], cols_idx: &[usize]) -> Vec<T> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![T::zero(); cols_idx.len()];
        for (i, row) in self.iter_rows().enumerate() {
            let xi = x[i];
            for (ya, &ca) in y.iter_mut().zip(cols_idx) {
                *ya += row[ca] * xi;
            }
        }
        y
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm2<T: Real>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factor `m` (assumed symmetric). Fails if a pivot is not strictly
    /// positive, naming the offending diagonal index.
    pub fn new(m: &Matrix<T>) -> Result<Self> {
        assert_eq!(m.rows(), m.cols());
        let n = m.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = m.get(j, j);
            for k in 0..j {
                d = d - l.get(j, k) * l.get(j, k);
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::Numerical(format!(
                    "matrix not positive definite at pivot {j} (value {d})"
                )));
            }
            let dj = d.sqrt();
            l.set(j, j, dj);
            for i in (j + 1)..n {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s = s - l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / dj);
            }
        }
        Ok(Cholesky { l })
    }

    /// The lower-triangular factor L with M = L Lᵀ.
    pub fn factor(&self) -> &Matrix<T> {
        &self.l
    }

    /// Solve M x = b using the stored factor.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        // forward: L y = b
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s = s - self.l.get(i, k) * x[k];
            }
            x[i] = s / self.l.get(i, i);
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s = s - self.l.get(k, i) * x[k];
            }
            x[i] = s / self.l.get(i, i);
        }
        x
    }
}

/// Solve the SPD system M x = b with one iterative-refinement pass.
pub fn solve_spd<T: Real>(m: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let chol = Cholesky::new(m)?;
    let mut x = chol.solve(b);
    // One refinement step recovers the last bits when the system is mildly
    // ill-conditioned (tiny active coefficients inflate W* diagonals).
    let r: Vec<T> = m
        .matvec(&x)
        .iter()
        .zip(b)
        .map(|(&mx, &bi)| bi - mx)
        .collect();
    let dx = chol.solve(&r);
    for (xi, di) in x.iter_mut().zip(&dx) {
        *xi += *di;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite solution from SPD solve".into()));
    }
    Ok(x)
}
