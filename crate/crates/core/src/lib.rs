//! Relevance scoring for multi-valued knowledge-base triples.
//!
//! Given triples such as `(Neil Young, profession, Actor)` where one subject
//! carries several values for the same property, this crate ranks the values
//! by how relevant each one is to the subject. The signal comes from text:
//! every sentence mentioning a subject is folded into one per-person document,
//! paragraph vectors are trained over all documents, and each candidate value
//! is scored either by cosine similarity against a per-value centroid or by a
//! multinomial logistic-regression classifier. Raw scores in `[0, 1]` are then
//! mapped onto the 0..7 integer relevance scale and compared against gold
//! judgments with rank-correlation metrics.
//!
//! The pipeline stages map onto the modules:
//!
//! - [`corpus`]: triple/sentence ingestion, per-person documents, grouping of
//!   single-valued subjects by value, group balancing (truncation and
//!   enrichment).
//! - [`embedding`]: vocabulary, negative-sampling SGD training of document
//!   vectors (distributed bag-of-words or distributed-memory modes), vector
//!   inference for unseen documents, model persistence.
//! - [`scoring`]: per-value centroids and the classifier, raw `[0, 1]` scores.
//! - [`mapping`]: linear, logarithmic, and per-subject range mappings onto
//!   the 0..7 scale.
//! - [`evaluation`]: accuracy within a score band, tie-corrected Kendall
//!   tau, and average score difference against gold labels.

pub mod corpus;
pub mod embedding;
pub mod evaluation;
pub mod mapping;
pub mod scoring;

pub use corpus::{PersonDoc, Property, Triple, ValueGroup};
pub use embedding::{EmbeddingModel, TrainConfig, TrainMode, Vocabulary};
pub use mapping::{MapKind, MappingSpec};
pub use scoring::ScoreRecord;
