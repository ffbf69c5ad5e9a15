//! Classifiers audited by the toolkit.

mod logreg;
mod scorer;

pub use logreg::{
    penalized_gradient, penalized_log_likelihood, sigmoid, train_logreg, LogRegModel, LogRegParams,
};
pub use scorer::{
    parse_scores, predict, project, write_feature_csv, ExternalCommand, Scorer, ScorerKind,
    DEFAULT_THRESHOLD,
};
