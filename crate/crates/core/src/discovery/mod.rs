//! Score-based causal discovery under background knowledge.

mod score;
mod search;

pub use score::{local_score, GaussianBic, ScoreParams};
pub use search::{
    boss_search, discover_cpdag, grow_shrink_parents, Discovered, SearchOutcome, SearchParams,
};
