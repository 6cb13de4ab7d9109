//! Demonstration selection for few-shot in-context learning on intent
//! classification.
//!
//! The crate has three layers:
//!
//! - a learned pair scorer ([`meta_sel`]) that ranks candidate demonstrations
//!   by the probability that they share the query's label, trained offline on
//!   (query, candidate) pairs sampled from the labeled training split;
//! - eleven baseline selection strategies ([`selectors`]) behind a common
//!   [`selectors::Selector`] trait, from uniform sampling to Thompson-sampling
//!   bandits and tabular Q-learning;
//! - a benchmark harness ([`bench`]) that evaluates any selector against a
//!   live text-generation endpoint or a deterministic oracle backend, with
//!   seeded trials, ablation sweeps, and CSV/JSON reports.
//!
//! Everything is deterministic under a fixed seed: the same data, config, and
//! seed produce byte-identical model bundles and reports.
//!
//! See the `examples/` directory for runnable entry points covering each
//! capability, or the `metasel` binary for the equivalent subcommands.

pub mod bench;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod llm;
pub mod meta_sel;
pub mod optim;
pub mod prompt;
pub mod selectors;
pub mod synth;
pub mod vectorize;

pub use corpus::{challenge_subset, load_dataset, sample_meta_split, Dataset, Example, MetaSplit};
pub use error::{Error, Result};
pub use meta_sel::{
    build_meta_dataset, meta_features, train_metasel, FeatureVector, MetaPair, MetaSelConfig,
    MetaSelModel, SelectionResult,
};
pub use optim::{balanced_weights, fit_logistic, LinearScorer, TrainConfig};
pub use vectorize::{cosine_to_pool, fit_vectorizer, PoolMatrix, SparseVector, Vectorizer};
