//! L2-penalized logistic regression fitted by Newton's method (IRLS).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_spd_with_ridge, Matrix};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRegParams {
    /// Penalty on the weights, `λ/2 ‖w‖²`; the bias is not penalized.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Gradient-norm tolerance.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_lambda() -> f64 {
    1.0
}
fn default_max_iter() -> usize {
    100
}
fn default_tol() -> f64 {
    1e-6
}

impl Default for LogRegParams {
    fn default() -> Self {
        Self {
            lambda: default_lambda(),
            max_iter: default_max_iter(),
            tol: default_tol(),
        }
    }
}

impl LogRegParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config("logistic regression lambda must be >= 0".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel<T> {
    pub features: Vec<String>,
    pub weights: Vec<T>,
    pub bias: T,
    pub lambda: T,
    pub iterations: usize,
    pub gradient_norm: T,
}

pub fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus<T: Real>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn linear<T: Real>(row: &[T], w: &[T], b: T) -> T {
    row.iter().zip(w).fold(b, |acc, (&x, &wi)| acc + x * wi)
}

/// `Σ [y z - ln(1 + e^z)] - λ/2 ‖w‖²` with `z = w·x + b`.
pub fn penalized_log_likelihood<T: Real>(x: &Matrix<T>, y: &[T], w: &[T], b: T, lambda: T) -> T {
    let ll: T = x
        .rows_iter()
        .zip(y)
        .map(|(row, &yi)| {
            let z = linear(row, w, b);
            yi * z - softplus(z)
        })
        .sum();
    let norm: T = w.iter().map(|&v| v * v).sum();
    ll - lambda * norm / T::of(2.0)
}

/// Gradient of [`penalized_log_likelihood`]: weights first, bias last.
pub fn penalized_gradient<T: Real>(x: &Matrix<T>, y: &[T], w: &[T], b: T, lambda: T) -> Vec<T> {
    let d = w.len();
    let mut g = vec![T::zero(); d + 1];
    for (row, &yi) in x.rows_iter().zip(y) {
        let r = yi - sigmoid(linear(row, w, b));
        for j in 0..d {
            g[j] = g[j] + r * row[j];
        }
        g[d] = g[d] + r;
    }
    for j in 0..d {
        g[j] = g[j] - lambda * w[j];
    }
    g
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&a| a * a).sum::<T>().sqrt()
}

/// Fits weights for the columns of `x` (named by `features`) against the 0/1
/// labels `y`.
pub fn train_logreg<T: Real>(
    x: &Matrix<T>,
    y: &[T],
    features: &[String],
    params: &LogRegParams,
) -> Result<LogRegModel<T>> {
    params.validate()?;
    let (n, d) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    if features.len() != d {
        return Err(Error::LengthMismatch {
            left: features.len(),
            right: d,
        });
    }
    if y.iter().any(|&v| v != T::zero() && v != T::one()) {
        return Err(Error::Data("logistic regression labels must be 0 or 1".into()));
    }
    let positives = y.iter().filter(|&&v| v == T::one()).count();
    if positives == 0 || positives == n {
        return Err(Error::Data("both target classes must be present".into()));
    }
    let lambda = T::of(params.lambda);
    // Below this the gradient is dominated by rounding in the sums.
    let tol = T::of(params.tol).max(T::of_usize(n) * T::epsilon() * T::of(100.0));
    let p = d + 1;
    let mut w = vec![T::zero(); d];
    let mut b = T::zero();
    let mut obj = penalized_log_likelihood(x, y, &w, b, lambda);
    let mut g = penalized_gradient(x, y, &w, b, lambda);
    let mut iterations = 0;
    for iter in 0..params.max_iter {
        iterations = iter + 1;
        let gn = norm(&g);
        if gn <= tol {
            return Ok(LogRegModel {
                features: features.to_vec(),
                weights: w,
                bias: b,
                lambda,
                iterations: iter,
                gradient_norm: gn,
            });
        }
        // Negative Hessian: Xᵀ W X + λ I on the weight block.
        let mut h = vec![T::zero(); p * p];
        let mut xa = vec![T::zero(); p];
        for row in x.rows_iter() {
            let pi = sigmoid(linear(row, &w, b));
            let wt = pi * (T::one() - pi);
            xa[..d].copy_from_slice(row);
            xa[d] = T::one();
            for i in 0..p {
                let s = wt * xa[i];
                for j in i..p {
                    h[i * p + j] = h[i * p + j] + s * xa[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                h[i * p + j] = h[j * p + i];
            }
        }
        for j in 0..d {
            h[j * p + j] = h[j * p + j] + lambda;
        }
        let (step, _) = solve_spd_with_ridge(&h, p, &g);
        // Near the optimum objective differences drown in rounding.
        let slack = T::epsilon() * T::of(64.0) * (T::one() + obj.abs());
        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..40 {
            let nw: Vec<T> = w.iter().zip(&step).map(|(&a, &s)| a + t * s).collect();
            let nb = b + t * step[d];
            let nobj = penalized_log_likelihood(x, y, &nw, nb, lambda);
            if nobj >= obj - slack {
                w = nw;
                b = nb;
                obj = nobj;
                accepted = true;
                break;
            }
            t = t / T::of(2.0);
        }
        g = penalized_gradient(x, y, &w, b, lambda);
        if lambda == T::zero() && separates(x, y, &w, b) {
            return Err(Error::PerfectSeparation);
        }
        if !accepted {
            break;
        }
    }
    let gn = norm(&g);
    if gn <= tol {
        return Ok(LogRegModel {
            features: features.to_vec(),
            weights: w,
            bias: b,
            lambda,
            iterations,
            gradient_norm: gn,
        });
    }
    Err(Error::NoConvergence {
        iterations,
        gradient_norm: gn.to_f64_lossy(),
    })
}

fn separates<T: Real>(x: &Matrix<T>, y: &[T], w: &[T], b: T) -> bool {
    x.rows_iter().zip(y).all(|(row, &yi)| {
        let z = linear(row, w, b);
        if yi == T::one() {
            z > T::zero()
        } else {
            z < T::zero()
        }
    })
}

impl<T: Real> LogRegModel<T> {
    /// Scores rows holding exactly the model's features, in order.
    pub fn predict_proba(&self, x: &Matrix<T>) -> Result<Vec<T>> {
        if x.ncols() != self.weights.len() {
            return Err(Error::LengthMismatch {
                left: x.ncols(),
                right: self.weights.len(),
            });
        }
        Ok(x.rows_iter().map(|row| sigmoid(linear(row, &self.weights, self.bias))).collect())
    }

    pub fn cast<U: Real>(&self) -> LogRegModel<U> {
        let c = |v: T| U::of(v.to_f64_lossy());
        LogRegModel {
            features: self.features.clone(),
            weights: self.weights.iter().map(|&v| c(v)).collect(),
            bias: c(self.bias),
            lambda: c(self.lambda),
            iterations: self.iterations,
            gradient_norm: c(self.gradient_norm),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("x{j}")).collect()
    }

    fn params(lambda: f64) -> LogRegParams {
        LogRegParams {
            lambda,
            ..LogRegParams::default()
        }
    }

    #[test]
    fn separating_direction_has_positive_weight() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 10.0 - 2.0 + 0.05]).collect();
        let y: Vec<f64> = rows.iter().map(|r| f64::from(r[0] > 0.0)).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let m = train_logreg(&x, &y, &names(1), &params(0.1)).unwrap();
        assert!(m.weights[0] > 0.0);
        assert!(matches!(
            train_logreg(&x, &y, &names(1), &params(0.0)),
            Err(Error::PerfectSeparation)
        ));
    }

    #[test]
    fn null_model_has_small_weights() {
        let mut r = rng::stream_rng(5, 50, 0);
        let n = 10_000;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| StandardNormal.sample(&mut r)).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let m = train_logreg(&Matrix::from_rows(&rows).unwrap(), &y, &names(3), &params(0.1)).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() <= 0.05), "{:?}", m.weights);
        assert!(m.bias.abs() < 0.05);
    }

    #[test]
    fn gradient_is_small_at_optimum_and_matches_differences() {
        let mut r = rng::stream_rng(6, 50, 0);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..2).map(|_| StandardNormal.sample(&mut r)).collect())
            .collect();
        let y: Vec<f64> = (0..60).map(|_| f64::from(r.random::<bool>())).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let m = train_logreg(&x, &y, &names(2), &params(1.0)).unwrap();
        let g = penalized_gradient(&x, &y, &m.weights, m.bias, 1.0);
        assert!(norm(&g) <= 1e-6);
        let w = [0.3, -0.7];
        let g = penalized_gradient(&x, &y, &w, 0.1, 0.5);
        let h = 1e-6;
        let f = |w0: f64, w1: f64, b: f64| penalized_log_likelihood(&x, &y, &[w0, w1], b, 0.5);
        let fd = [
            (f(w[0] + h, w[1], 0.1) - f(w[0] - h, w[1], 0.1)) / (2.0 * h),
            (f(w[0], w[1] + h, 0.1) - f(w[0], w[1] - h, 0.1)) / (2.0 * h),
            (f(w[0], w[1], 0.1 + h) - f(w[0], w[1], 0.1 - h)) / (2.0 * h),
        ];
        for (a, n) in g.iter().zip(fd) {
            assert!((a - n).abs() <= 1e-5 * a.abs().max(1.0));
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(train_logreg(&x, &[1.0, 1.0], &names(1), &params(1.0)).is_err());
    }

    #[test]
    fn zero_weights_score_one_half() {
        let m = LogRegModel {
            features: names(2),
            weights: vec![0.0, 0.0],
            bias: 0.0,
            lambda: 1.0,
            iterations: 0,
            gradient_norm: 0.0,
        };
        let p = m.predict_proba(&Matrix::from_rows(&[vec![3.0, -1.0]]).unwrap()).unwrap();
        assert_eq!(p, vec![0.5]);
    }
}
