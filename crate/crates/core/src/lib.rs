//! Sentence-level paraphrase induction from comparable corpora.
//!
//! Sentences from each corpus are clustered, each cluster is aligned into a
//! word lattice, lattices are turned into slotted templates, and slotted
//! lattices from the two corpora are paired when their slots tend to take
//! the same argument values on the same day. New sentences are paraphrased
//! by matching them to a lattice and re-rendering their arguments through
//! its partner.
//!
//! All scoring code is generic over [`Scalar`]; the aliases below fix the
//! scalar to `f64`, which is what the pipeline and the model file use.

pub mod cli;
pub mod cluster;
pub mod config;
pub mod corpus;
pub mod error;
pub mod generate;
pub mod lattice;
pub mod matching;
pub mod model;
pub mod msa;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use num_rational::Rational64;

pub type SimilarityParams = cluster::SimilarityParams<f64>;
pub type ScoringParams = msa::ScoringParams<f64>;
pub type SlottingParams = lattice::SlottingParams<f64>;
pub type MatchParams = matching::MatchParams<f64>;
pub type GenerationParams = generate::GenerationParams<f64>;
pub type LatticePair = matching::LatticePair<f64>;
pub type LatticeMatch = generate::LatticeMatch<f64>;

/// Exact-arithmetic variants used by oracle tests.
pub type ExactScoringParams = msa::ScoringParams<Rational64>;
pub type ExactSimilarityParams = cluster::SimilarityParams<Rational64>;
