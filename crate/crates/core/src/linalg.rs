//! Dense row-major matrices, Cholesky factorization and least squares with
//! an intercept, all generic over [`Real`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: rows * cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::LengthMismatch {
                    left: r.len(),
                    right: cols,
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    /// New matrix made of the given rows, in the given order (repeats allowed).
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn cast<U: Real>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| U::of(v.to_f64_lossy())).collect(),
        }
    }
}

/// In-place lower Cholesky factor of a symmetric `n x n` matrix. Fails with
/// the index of the first pivot that is not safely positive.
pub fn cholesky<T: Real>(a: &mut [T], n: usize) -> std::result::Result<(), usize> {
    let max_diag = (0..n).map(|i| a[i * n + i].abs()).fold(T::zero(), T::max);
    let tol = T::epsilon() * T::of(1e4) * max_diag.max(T::min_positive_value());
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d = d - a[j * n + k] * a[j * n + k];
        }
        if !(d > tol) {
            return Err(j);
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for k in (j + 1)..n {
            a[j * n + k] = T::zero();
        }
    }
    Ok(())
}

/// Solves `L Lᵀ x = b` given the factor produced by [`cholesky`].
pub fn cholesky_solve<T: Real>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s = s - l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s = s - l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y
}

/// Solves the symmetric positive (semi)definite system `a x = b`. When the
/// factorization fails a ridge of `1e-8 * trace(a)` is added to the diagonal;
/// the returned flag reports whether that happened.
pub fn solve_spd_with_ridge<T: Real>(a: &[T], n: usize, b: &[T]) -> (Vec<T>, bool) {
    if n == 0 {
        return (Vec::new(), false);
    }
    let mut l = a.to_vec();
    if cholesky(&mut l, n).is_ok() {
        return (cholesky_solve(&l, n, b), false);
    }
    let trace: T = (0..n).map(|i| a[i * n + i]).sum();
    let mut lambda = T::of(1e-8) * trace;
    loop {
        if !(lambda > T::zero()) {
            lambda = T::of(1e-8);
        }
        let mut l = a.to_vec();
        for i in 0..n {
            l[i * n + i] = l[i * n + i] + lambda;
        }
        if cholesky(&mut l, n).is_ok() {
            return (cholesky_solve(&l, n, b), true);
        }
        // f32 may need a larger ridge than the nominal one.
        lambda = lambda * T::of(10.0);
    }
}

/// Column means and the centered cross-product matrix `Σ (x - x̄)(x - x̄)ᵀ`
/// of a data matrix. Every least-squares fit over a fixed set of rows can be
/// read off these sufficient statistics.
#[derive(Debug, Clone)]
pub struct Moments<T> {
    n: usize,
    d: usize,
    means: Vec<T>,
    cross: Vec<T>,
}

/// Result of regressing one column on a set of others, with intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit<T> {
    pub intercept: T,
    pub coefficients: Vec<T>,
    pub rss: T,
    /// True when the design was rank deficient and a ridge was added.
    pub ridge: bool,
}

impl<T: Real> Moments<T> {
    pub fn from_matrix(m: &Matrix<T>) -> Self {
        let (n, d) = (m.nrows(), m.ncols());
        let nt = T::of_usize(n.max(1));
        let mut means = vec![T::zero(); d];
        for row in m.rows_iter() {
            for (acc, &v) in means.iter_mut().zip(row) {
                *acc = *acc + v;
            }
        }
        for v in &mut means {
            *v = *v / nt;
        }
        let mut cross = vec![T::zero(); d * d];
        let mut centered = vec![T::zero(); d];
        for row in m.rows_iter() {
            for j in 0..d {
                centered[j] = row[j] - means[j];
            }
            for i in 0..d {
                let ci = centered[i];
                if ci == T::zero() {
                    continue;
                }
                for j in i..d {
                    cross[i * d + j] = cross[i * d + j] + ci * centered[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                cross[i * d + j] = cross[j * d + i];
            }
        }
        Self { n, d, means, cross }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn mean(&self, j: usize) -> T {
        self.means[j]
    }

    pub fn cross(&self, i: usize, j: usize) -> T {
        self.cross[i * self.d + j]
    }

    /// Least squares of column `target` on columns `regressors`, with intercept.
    pub fn ols(&self, target: usize, regressors: &[usize]) -> OlsFit<T> {
        let p = regressors.len();
        let syy = self.cross(target, target);
        if p == 0 {
            return OlsFit {
                intercept: self.means[target],
                coefficients: Vec::new(),
                rss: syy.max(T::zero()),
                ridge: false,
            };
        }
        let mut gram = vec![T::zero(); p * p];
        let mut xy = vec![T::zero(); p];
        for (a, &i) in regressors.iter().enumerate() {
            xy[a] = self.cross(i, target);
            for (b, &j) in regressors.iter().enumerate() {
                gram[a * p + b] = self.cross(i, j);
            }
        }
        let (beta, ridge) = solve_spd_with_ridge(&gram, p, &xy);
        // RSS = Syy - 2 βᵀ Sxy + βᵀ Sxx β, exact for the ridge solution too.
        let mut quad = T::zero();
        for a in 0..p {
            let mut row = T::zero();
            for b in 0..p {
                row = row + gram[a * p + b] * beta[b];
            }
            quad = quad + beta[a] * row;
        }
        let lin: T = beta.iter().zip(&xy).map(|(&b, &s)| b * s).sum();
        let rss = (syy - lin - lin + quad).max(T::zero());
        let intercept = self.means[target]
            - regressors
                .iter()
                .zip(&beta)
                .map(|(&j, &b)| b * self.means[j])
                .sum::<T>();
        OlsFit {
            intercept,
            coefficients: beta,
            rss,
            ridge,
        }
    }
}
