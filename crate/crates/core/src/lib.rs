//! Per-corpus topic-model configuration: text cleaning, corpus features,
//! LDA by collapsed Gibbs sampling, racing-based hyperparameter tuning, and
//! feature-based configuration selection with pairwise cost-sensitive forests.

pub mod analysis;
pub mod features;
pub mod lda;
pub mod portfolio;
pub mod preprocess;
pub mod seed;
pub mod stats;
pub mod synthetic;
pub mod tuner;

pub use features::{corpus_features, FeatureRow, FeatureVector, FEATURE_NAMES};
pub use lda::{LdaConfig, TopicParams, TrainedModel};
pub use tuner::{tune, ParamSpace, TuneReport, TuneSettings};
pub use portfolio::{PerformanceMatrix, SelectionReport, SelectorModel};
pub use preprocess::{Corpus, Document, RawDocument, Source, Stoplist};
