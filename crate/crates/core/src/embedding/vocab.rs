//! Vocabulary construction and the negative-sampling noise distribution.

use std::collections::HashMap;

use rand::Rng;

use super::EmbedError;
use crate::corpus::PersonDoc;

/// Exponent applied to unigram counts when weighting noise draws.
pub const NOISE_EXPONENT: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabWord {
    pub word: String,
    pub count: u64,
}

/// Retained words with dense ids, ordered by descending count then word, plus
/// the cumulative table negative samples are drawn from.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: Vec<VocabWord>,
    word_to_id: HashMap<String, usize>,
    min_count: u32,
    noise_exponent: f64,
    total_tokens: u64,
    noise: NoiseTable,
}

impl Vocabulary {
    pub(crate) fn from_parts(
        words: Vec<VocabWord>,
        min_count: u32,
        noise_exponent: f64,
    ) -> Result<Self, EmbedError> {
        if words.is_empty() {
            return Err(EmbedError::EmptyVocabulary);
        }
        let mut word_to_id = HashMap::with_capacity(words.len());
        for (id, w) in words.iter().enumerate() {
            if word_to_id.insert(w.word.clone(), id).is_some() {
                return Err(EmbedError::InvalidConfig(format!(
                    "duplicate vocabulary word {:?}",
                    w.word
                )));
            }
        }
        let total_tokens = words.iter().map(|w| w.count).sum();
        let noise = NoiseTable::from_counts(words.iter().map(|w| w.count), noise_exponent);
        Ok(Self {
            words,
            word_to_id,
            min_count,
            noise_exponent,
            total_tokens,
            noise,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.word_to_id.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id].word
    }

    pub fn count(&self, id: usize) -> u64 {
        self.words[id].count
    }

    pub fn words(&self) -> &[VocabWord] {
        &self.words
    }

    pub fn min_count(&self) -> u32 {
        self.min_count
    }

    pub fn noise_exponent(&self) -> f64 {
        self.noise_exponent
    }

    /// Total occurrences of retained words across the corpus; one training
    /// step is scheduled per occurrence per epoch.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn noise(&self) -> &NoiseTable {
        &self.noise
    }

    /// Maps tokens to ids, dropping out-of-vocabulary tokens.
    pub fn token_ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().filter_map(|t| self.id(t)).collect()
    }
}

/// Builds a vocabulary over every token of `docs`, keeping words whose total
/// count reaches `min_count`. Ids are assigned by descending count with ties
/// broken by word order, so construction is deterministic.
pub fn build_vocab(docs: &[PersonDoc], min_count: u32) -> Result<Vocabulary, EmbedError> {
    build_vocab_with_exponent(docs, min_count, NOISE_EXPONENT)
}

pub fn build_vocab_with_exponent(
    docs: &[PersonDoc],
    min_count: u32,
    noise_exponent: f64,
) -> Result<Vocabulary, EmbedError> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for doc in docs {
        for token in &doc.tokens {
            *counts.entry(token.as_str()).or_insert(0) += 1;
        }
    }

    let mut words: Vec<VocabWord> = counts
        .into_iter()
        .filter(|&(_, count)| count >= u64::from(min_count))
        .map(|(word, count)| VocabWord {
            word: word.to_string(),
            count,
        })
        .collect();
    words.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));

    Vocabulary::from_parts(words, min_count, noise_exponent)
}

/// Cumulative distribution over word ids with mass proportional to
/// `count^exponent`. The last entry is exactly 1.
#[derive(Debug, Clone)]
pub struct NoiseTable {
    cumulative: Vec<f64>,
}

impl NoiseTable {
    pub fn from_counts(counts: impl Iterator<Item = u64>, exponent: f64) -> Self {
        let weights: Vec<f64> = counts.map(|c| (c as f64).powf(exponent)).collect();
        let total: f64 = weights.iter().sum();
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w / total;
            cumulative.push(acc);
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Self { cumulative }
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Probability mass of word `id`.
    pub fn mass(&self, id: usize) -> f64 {
        let prev = if id == 0 { 0.0 } else { self.cumulative[id - 1] };
        self.cumulative[id] - prev
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }

    /// Draws `k` noise words, resampling any draw that equals `target`.
    /// With a single-word vocabulary no distinct word exists; returns empty.
    pub fn sample_excluding<R: Rng + ?Sized>(
        &self,
        target: usize,
        k: usize,
        rng: &mut R,
    ) -> Vec<usize> {
        if self.len() <= 1 {
            return Vec::new();
        }
        (0..k)
            .map(|_| loop {
                let s = self.sample(rng);
                if s != target {
                    break s;
                }
            })
            .collect()
    }
}
