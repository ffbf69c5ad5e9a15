//! Decomposable Gaussian BIC local score.

use std::cell::{Cell, RefCell};
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Moments};
use crate::scalar::Real;

const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreParams {
    /// Multiplier `c` on the BIC complexity term.
    pub penalty: f64,
}

impl Default for ScoreParams {
    fn default() -> Self {
        Self { penalty: 2.0 }
    }
}

impl ScoreParams {
    pub fn validate(&self) -> Result<()> {
        if self.penalty > 0.0 && self.penalty.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("penalty must be > 0, got {}", self.penalty)))
        }
    }
}

/// `-(n/2) ln σ̂² - (c/2) (|parents| + 1) ln n`, with `σ̂² = RSS / n` of the
/// intercept-augmented OLS fit of `node` on `parents`.
pub fn local_score<T: Real>(
    data: &Matrix<T>,
    node: usize,
    parents: &[usize],
    params: &ScoreParams,
) -> T {
    GaussianBic::new(data, params).score(node, parents)
}

/// BIC scorer over one data set, caching local scores by parent set.
pub struct GaussianBic<T> {
    moments: Moments<T>,
    penalty: T,
    cache: RefCell<HashMap<(usize, Vec<usize>), T>>,
    ridge_fallbacks: Cell<usize>,
}

impl<T: Real> GaussianBic<T> {
    pub fn new(data: &Matrix<T>, params: &ScoreParams) -> Self {
        Self::from_moments(Moments::from_matrix(data), params)
    }

    pub fn from_moments(moments: Moments<T>, params: &ScoreParams) -> Self {
        Self {
            moments,
            penalty: T::of(params.penalty),
            cache: RefCell::new(HashMap::new()),
            ridge_fallbacks: Cell::new(0),
        }
    }

    pub fn n(&self) -> usize {
        self.moments.n()
    }

    pub fn dim(&self) -> usize {
        self.moments.dim()
    }

    /// Number of distinct parent sets whose design was rank deficient.
    pub fn ridge_fallbacks(&self) -> usize {
        self.ridge_fallbacks.get()
    }

    /// Local score; `parents` need not be sorted.
    pub fn score(&self, node: usize, parents: &[usize]) -> T {
        let mut key = parents.to_vec();
        key.sort_unstable();
        if let Some(&s) = self.cache.borrow().get(&(node, key.clone())) {
            return s;
        }
        let fit = self.moments.ols(node, &key);
        if fit.ridge {
            self.ridge_fallbacks.set(self.ridge_fallbacks.get() + 1);
        }
        let n = T::of_usize(self.n());
        let two = T::of(2.0);
        let sigma2 = (fit.rss / n).max(T::of(VARIANCE_FLOOR));
        let k = T::of_usize(key.len() + 1);
        let s = -(n / two) * sigma2.ln() - (self.penalty / two) * k * n.ln();
        self.cache.borrow_mut().insert((node, key), s);
        s
    }

    pub fn total(&self, parents: &[Vec<usize>]) -> T {
        parents
            .iter()
            .enumerate()
            .map(|(v, ps)| self.score(v, ps))
            .sum()
    }
}
