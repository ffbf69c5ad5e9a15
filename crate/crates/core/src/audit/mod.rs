//! Counterfactual fairness audits under graph uncertainty.

mod metrics;
mod run;

pub use metrics::{
    ccm, check_alpha, individual_uncertainty, metric_stats, nsr, psr, quantile, Ccm, IndividualStats,
    MetricStats, Welford,
};
pub use run::{
    fit_bag, prepare, run_audit, Audit, AuditParams, AuditReport, Diagnostics, DirectionReport,
    ModelMetrics, Prepared, ScorerReport, ScorerSpec, SCHEMA_VERSION,
};
