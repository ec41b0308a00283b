//! Paragraph-vector embeddings: vocabulary, negative-sampling SGD training
//! in three modes (dbow, dm-concat, dm-avg), inference for unseen documents,
//! and versioned binary persistence.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub mod io;
pub mod matrix;
pub mod steps;
pub mod train;
pub mod vocab;

pub use io::{load_model, save_model, ModelIoError};
pub use matrix::{Matrix, Scalar, SharedMatrix};
pub use steps::{Combine, StepParams, UpdateMask};
pub use train::{infer_vector, train, train_observed, EpochStats, InferSession, TrainReport};
pub use vocab::{build_vocab, build_vocab_with_exponent, NoiseTable, Vocabulary};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("empty vocabulary: no word reaches the minimum count")]
    EmptyVocabulary,
    #[error("no trainable documents: every document lacks in-vocabulary tokens")]
    NoTrainableDocs,
    #[error("duplicate document subject {0:?}")]
    DuplicateSubject(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("non-finite parameter detected after epoch {epoch}")]
    NonFinite { epoch: usize },
    #[error("none of the tokens are in the vocabulary")]
    NoInVocabTokens,
}

/// Training architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    /// Distributed bag-of-words: the doc vector alone predicts each word.
    Dbow,
    /// Distributed memory, doc and context vectors concatenated.
    DmConcat,
    /// Distributed memory, doc and context vectors averaged.
    DmAvg,
}

impl TrainMode {
    pub fn combine(self) -> Option<Combine> {
        match self {
            TrainMode::Dbow => None,
            TrainMode::DmConcat => Some(Combine::Concat),
            TrainMode::DmAvg => Some(Combine::Average),
        }
    }
}

impl fmt::Display for TrainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainMode::Dbow => f.write_str("dbow"),
            TrainMode::DmConcat => f.write_str("dm-concat"),
            TrainMode::DmAvg => f.write_str("dm-avg"),
        }
    }
}

impl FromStr for TrainMode {
    type Err = EmbedError;

    fn from_str(s: &str) -> Result<Self, EmbedError> {
        match s {
            "dbow" => Ok(TrainMode::Dbow),
            "dm-concat" => Ok(TrainMode::DmConcat),
            "dm-avg" => Ok(TrainMode::DmAvg),
            other => Err(EmbedError::InvalidConfig(format!(
                "unknown mode {other:?} (expected dbow, dm-concat or dm-avg)"
            ))),
        }
    }
}

/// Hyperparameters for [`train`]. Defaults follow the reference setup except
/// `workers`, which defaults to 1 so results are reproducible out of the box.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub dim: usize,
    pub window: usize,
    pub negative: usize,
    pub epochs: usize,
    pub min_count: u32,
    pub workers: usize,
    pub initial_lr: f32,
    pub final_lr: f32,
    /// In dbow mode, additionally train word input vectors skip-gram style.
    pub dbow_words: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: TrainMode::Dbow,
            dim: 200,
            window: 5,
            negative: 5,
            epochs: 20,
            min_count: 10,
            workers: 1,
            initial_lr: 0.025,
            final_lr: 0.0001,
            dbow_words: false,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        let positive = [
            ("dim", self.dim),
            ("window", self.window),
            ("negative", self.negative),
            ("epochs", self.epochs),
            ("workers", self.workers),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(EmbedError::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        if !(self.initial_lr.is_finite() && self.final_lr.is_finite()) {
            return Err(EmbedError::InvalidConfig(
                "learning rates must be finite".to_string(),
            ));
        }
        if self.final_lr <= 0.0 {
            return Err(EmbedError::InvalidConfig(
                "final_lr must be positive".to_string(),
            ));
        }
        if self.final_lr >= self.initial_lr {
            return Err(EmbedError::InvalidConfig(
                "final_lr must be below initial_lr".to_string(),
            ));
        }
        Ok(())
    }

    /// Columns of the output weight matrix for this config.
    pub fn output_width(&self) -> usize {
        match self.mode {
            TrainMode::DmConcat => self.dim * (1 + 2 * self.window),
            _ => self.dim,
        }
    }

    /// Whether this config trains word input vectors.
    pub fn uses_word_in(&self) -> bool {
        match self.mode {
            TrainMode::Dbow => self.dbow_words,
            _ => true,
        }
    }
}

/// A trained paragraph-vector model: vocabulary, per-document vectors keyed
/// by subject, optional word input vectors, and output weights.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    vocab: Vocabulary,
    config: TrainConfig,
    doc_vectors: Matrix,
    word_in_vectors: Option<Matrix>,
    word_out_vectors: Matrix,
    doc_subjects: Vec<String>,
    doc_index: HashMap<String, usize>,
}

impl EmbeddingModel {
    /// Assembles a model from its stored parts. `doc_vectors` row i belongs
    /// to `doc_subjects[i]`; subjects must be unique.
    pub fn from_parts(
        vocab: Vocabulary,
        config: TrainConfig,
        doc_vectors: Matrix,
        word_in_vectors: Option<Matrix>,
        word_out_vectors: Matrix,
        doc_subjects: Vec<String>,
    ) -> Result<Self, EmbedError> {
        assert_eq!(doc_vectors.rows(), doc_subjects.len());
        let mut doc_index = HashMap::with_capacity(doc_subjects.len());
        for (row, subject) in doc_subjects.iter().enumerate() {
            if doc_index.insert(subject.clone(), row).is_some() {
                return Err(EmbedError::DuplicateSubject(subject.clone()));
            }
        }
        Ok(Self {
            vocab,
            config,
            doc_vectors,
            word_in_vectors,
            word_out_vectors,
            doc_subjects,
            doc_index,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn doc_vectors(&self) -> &Matrix {
        &self.doc_vectors
    }

    pub fn word_in_vectors(&self) -> Option<&Matrix> {
        self.word_in_vectors.as_ref()
    }

    pub fn word_out_vectors(&self) -> &Matrix {
        &self.word_out_vectors
    }

    /// Subjects in doc-vector row order.
    pub fn subjects(&self) -> &[String] {
        &self.doc_subjects
    }

    pub fn doc_row(&self, subject: &str) -> Option<usize> {
        self.doc_index.get(subject).copied()
    }

    pub fn doc_vector(&self, subject: &str) -> Option<&[f32]> {
        self.doc_row(subject).map(|r| self.doc_vectors.row(r))
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }
}
