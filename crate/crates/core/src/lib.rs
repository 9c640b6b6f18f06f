//! Syntactic-distance probing toolkit.
//!
//! The crate is organised around the pipeline it supports:
//!
//! - [`treebank`]: CoNLL-U ingestion, gold trees, tree distances and
//!   tokenizer alignment reconciliation.
//! - [`lexicon`] and [`substitute`]: pseudoword inflection and the
//!   Jabberwocky corpus generator.
//! - [`embeddings`]: the JEMB interchange format, Fast+Pos composition and
//!   subword-to-token mapping.
//! - [`probes`]: structural and perceptron probes, their losses and
//!   gradients, Adam training and random hyperparameter search.
//! - [`metrics`]: spanning-tree decoding, UUAS, DSpr and tree counting.
//! - [`baselines`]: the lexicon-blind Path and Majority trees.

pub mod baselines;
pub mod embeddings;
pub mod lexicon;
pub mod metrics;
pub mod probes;
pub mod substitute;
pub mod treebank;

pub use metrics::UndirectedTree;
pub use treebank::{DistanceMatrix, Sentence, Token};
