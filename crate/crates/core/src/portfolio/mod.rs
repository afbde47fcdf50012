//! Tuned configurations as an algorithm portfolio: the performance matrix,
//! oracle baselines, and a pairwise cost-sensitive forest selector.

mod evaluate;
mod forest;
mod matrix;
mod selector;

pub use evaluate::{evaluate_selector, write_importance_csv, CorpusChoice, SelectionReport};
pub use forest::{train_forest, Forest, ForestParams, Node, Tree};
pub use matrix::{build_performance_matrix, single_best, virtual_best, PerformanceMatrix, CRASH_SENTINEL};
pub use selector::{
    gini_importance, train_selector, PairClassifier, PairModel, SelectorModel, SELECTOR_FORMAT, SELECTOR_VERSION,
};

#[derive(Debug, thiserror::Error)]
pub enum PortfolioError {
    #[error("{0}")]
    InvalidInput(String),
    #[error("every cell of the performance matrix crashed")]
    NoData,
    #[error("expected {expected} finite feature values, found {found}")]
    IncompleteFeatures { expected: usize, found: usize },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
