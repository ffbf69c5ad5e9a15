//! Counterfactual confusion matrices, switch rates and summary statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::{project, Scorer};
use crate::scalar::Real;
use crate::scm::LinearScm;

/// Counts of (original, counterfactual) prediction pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ccm {
    pub n00: usize,
    pub n01: usize,
    pub n10: usize,
    pub n11: usize,
}

impl Ccm {
    pub fn total(&self) -> usize {
        self.n00 + self.n01 + self.n10 + self.n11
    }

    pub fn psr(&self) -> Option<f64> {
        psr(self)
    }

    pub fn nsr(&self) -> Option<f64> {
        nsr(self)
    }
}

pub fn ccm(y_hat: &[bool], y_hat_cf: &[bool]) -> Result<Ccm> {
    if y_hat.len() != y_hat_cf.len() {
        return Err(Error::LengthMismatch {
            left: y_hat.len(),
            right: y_hat_cf.len(),
        });
    }
    let mut c = Ccm::default();
    for (&a, &b) in y_hat.iter().zip(y_hat_cf) {
        match (a, b) {
            (false, false) => c.n00 += 1,
            (false, true) => c.n01 += 1,
            (true, false) => c.n10 += 1,
            (true, true) => c.n11 += 1,
        }
    }
    Ok(c)
}

/// Share of originally negative predictions that switched to positive;
/// `None` when there were no negatives.
pub fn psr(c: &Ccm) -> Option<f64> {
    let den = c.n00 + c.n01;
    (den > 0).then(|| c.n01 as f64 / den as f64)
}

/// Share of originally positive predictions that switched to negative.
pub fn nsr(c: &Ccm) -> Option<f64> {
    let den = c.n10 + c.n11;
    (den > 0).then(|| c.n10 as f64 / den as f64)
}

/// Mean, sample variance and percentile interval of a set of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStats<T> {
    pub values: Vec<T>,
    pub mean: T,
    pub variance: T,
    pub ci_lower: T,
    pub ci_upper: T,
    pub alpha: f64,
}

impl<T: Real> MetricStats<T> {
    pub fn ci_width(&self) -> T {
        self.ci_upper - self.ci_lower
    }

    pub fn cast<U: Real>(&self) -> MetricStats<U> {
        let c = |v: T| U::of(v.to_f64_lossy());
        MetricStats {
            values: self.values.iter().map(|&v| c(v)).collect(),
            mean: c(self.mean),
            variance: c(self.variance),
            ci_lower: c(self.ci_lower),
            ci_upper: c(self.ci_upper),
            alpha: self.alpha,
        }
    }
}

/// Quantile of sorted values by linear interpolation between order
/// statistics at position `q (n - 1)`.
pub fn quantile<T: Real>(sorted: &[T], q: f64) -> T {
    let n = sorted.len();
    let h = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = T::of(h - lo as f64);
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

pub fn metric_stats<T: Real>(values: &[T], alpha: f64) -> Result<MetricStats<T>> {
    check_alpha(alpha)?;
    if values.is_empty() {
        return Err(Error::Empty("metric values"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite metric value".into()));
    }
    let n = T::of_usize(values.len());
    let mean = values.iter().copied().sum::<T>() / n;
    let variance = if values.len() > 1 {
        values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / (n - T::one())
    } else {
        T::zero()
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(MetricStats {
        values: values.to_vec(),
        mean,
        variance,
        ci_lower: quantile(&sorted, alpha / 2.0),
        ci_upper: quantile(&sorted, 1.0 - alpha / 2.0),
        alpha,
    })
}

/// Per-individual spread of counterfactual scores and features across
/// causal models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualStats {
    pub row_id: usize,
    pub scores: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub feature_mean: Vec<f64>,
    pub feature_variance: Vec<f64>,
}

impl IndividualStats {
    pub fn from_parts(row_id: usize, scores: Vec<f64>, features: &Welford, alpha: f64) -> Result<Self> {
        let s = metric_stats(&scores, alpha)?;
        Ok(Self {
            row_id,
            mean: s.mean,
            variance: s.variance,
            ci_lower: s.ci_lower,
            ci_upper: s.ci_upper,
            scores,
            feature_mean: features.mean.clone(),
            feature_variance: features.variance(),
        })
    }
}

/// Running mean and sum of squared deviations per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Welford {
    pub count: usize,
    pub mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    pub fn new(d: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; d],
            m2: vec![0.0; d],
        }
    }

    pub fn push<T: Real>(&mut self, x: &[T]) {
        self.count += 1;
        let k = self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let v = v.to_f64_lossy();
            let delta = v - *m;
            *m += delta / k;
            *s += delta * (v - *m);
        }
    }

    /// Sample variance, zero for fewer than two observations.
    pub fn variance(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.m2.len()];
        }
        self.m2
            .iter()
            .map(|&s| (s / (self.count - 1) as f64).max(0.0))
            .collect()
    }
}

/// Counterfactuals of one row under every model, fed to the scorer.
pub fn individual_uncertainty<T: Real>(
    scms: &[LinearScm<T>],
    scorer: &Scorer<T>,
    x: &[T],
    a: &str,
    a_prime: T,
    alpha: f64,
) -> Result<IndividualStats> {
    let first = scms.first().ok_or(Error::Empty("causal models"))?;
    let columns: Vec<String> = first.dag().variables().to_vec();
    let ai = first.dag().index_of(a)?;
    let idx = scorer.feature_indices(&columns)?;
    let d = columns.len();
    let mut data = Vec::with_capacity(scms.len() * d);
    let mut acc = Welford::new(d);
    let mut row = vec![T::zero(); d];
    for m in scms {
        if m.dag().variables() != first.dag().variables() {
            return Err(Error::Data("causal models disagree on variables".into()));
        }
        m.counterfactual_into(x, ai, a_prime, &m.affected_by(ai), &mut row);
        acc.push(&row);
        data.extend_from_slice(&row);
    }
    let cf = Matrix::from_vec(scms.len(), d, data)?;
    let scores = scorer.score_features(&project(&cf, &idx))?;
    IndividualStats::from_parts(0, scores.iter().map(|s| s.to_f64_lossy()).collect(), &acc, alpha)
}
