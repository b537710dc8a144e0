//! Full-corpus word sense induction workbench.
//!
//! Clusters per-lemma contextualized embeddings (agglomerative with silhouette or
//! lexicon-driven cluster counts, must-link constraints, X-means, degenerate
//! baselines), evaluates hard and graded clusterings with B-Cubed, NMI,
//! V-measure, paired F-score and Rand index, and runs bootstrap significance tests
//! between clustering pipelines.

pub mod augment;
pub mod clustering;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod lexicon;
pub mod manifest;
pub mod llm;
pub mod metrics;
pub mod significance;

pub use error::{Result, WsiError};
