//! Counterfactual fairness auditing under causal-graph uncertainty.
//!
//! The pipeline bootstraps score-based causal discovery under domain
//! knowledge, expands every discovered CPDAG into its Markov equivalence
//! class, measures how much the resulting bag of DAGs disagrees (edge
//! entropy), fits one linear SCM per DAG and reports counterfactual switch
//! rates of a classifier together with their spread across causal models.
//!
//! Numeric kernels are generic over [`Real`]; the aliases at the crate root
//! fix the scalar type for the common cases.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments,
    clippy::type_complexity
)]

pub mod audit;
pub mod data;
pub mod discovery;
pub mod ensemble;
pub mod error;
pub mod graphs;
pub mod knowledge;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod scalar;
pub mod scm;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type LinearScm64 = scm::LinearScm<f64>;
pub type LinearScm32 = scm::LinearScm<f32>;
pub type LogRegModel64 = models::LogRegModel<f64>;
pub type LogRegModel32 = models::LogRegModel<f32>;
pub type Scorer64 = models::Scorer<f64>;
pub type Scorer32 = models::Scorer<f32>;
pub type MetricStats64 = audit::MetricStats<f64>;
pub type MetricStats32 = audit::MetricStats<f32>;
pub type GaussianBic64 = discovery::GaussianBic<f64>;
pub type GaussianBic32 = discovery::GaussianBic<f32>;
pub type Audit64 = audit::Audit<f64>;
pub type Audit32 = audit::Audit<f32>;
