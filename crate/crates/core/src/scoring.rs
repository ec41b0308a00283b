//! Raw relevance scores in [0,1] for (subject, value) pairs.
//!
//! Two methods share one interface: cosine similarity against per-value
//! centroids built from single-valued subjects, and class probabilities from
//! a multinomial logistic-regression classifier trained on the same vectors.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::ValueGroup;
use crate::embedding::EmbeddingModel;

pub const DEFAULT_LOGREG_REG: f64 = 1e-4;
pub const DEFAULT_LOGREG_ITERS: usize = 500;
pub const DEFAULT_LOGREG_LR: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("no value groups supplied")]
    EmptyGroups,
    #[error("no group member has a document vector")]
    NoTrainingVectors,
    #[error("training data covers only the single class {0:?}")]
    SingleClass(String),
    #[error("non-finite classifier loss at iteration {iter}")]
    NonFiniteLoss { iter: usize },
    #[error("zero person vector: cosine undefined")]
    ZeroPersonVector,
    #[error("no document vector for subject {0:?}")]
    MissingSubjectVector(String),
    #[error("unknown value {value:?}; known values: {known:?}")]
    UnknownValue { value: String, known: Vec<String> },
    #[error("subject {subject:?}: {source}")]
    Subject {
        subject: String,
        #[source]
        source: Box<ScoreError>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

/// One scored triple. `mapped` stays 0 until a mapping is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub subject: String,
    pub value: String,
    pub raw: f64,
    pub mapped: u8,
}

/// Unit-norm mean of a value's member document vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueCentroid {
    pub value: String,
    pub centroid: Vec<f64>,
    pub support: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Averages and normalizes each group's member vectors.
///
/// Groups whose members all lack a document vector, or whose mean cancels to
/// the zero vector, are omitted with a warning; output order follows group
/// order.
pub fn build_centroids(
    model: &EmbeddingModel,
    groups: &[ValueGroup],
) -> Result<(Vec<ValueCentroid>, Vec<String>), ScoreError> {
    if groups.is_empty() {
        return Err(ScoreError::EmptyGroups);
    }
    let dim = model.dim();
    let mut centroids = Vec::new();
    let mut warnings = Vec::new();
    for group in groups {
        let mut sum = vec![0.0f64; dim];
        let mut support = 0usize;
        for member in &group.members {
            let Some(vec) = model.doc_vector(member) else {
                continue;
            };
            for (s, &x) in sum.iter_mut().zip(vec) {
                *s += f64::from(x);
            }
            support += 1;
        }
        if support == 0 {
            warnings.push(format!(
                "group {:?}: no member has a document vector; omitted",
                group.value
            ));
            continue;
        }
        for s in sum.iter_mut() {
            *s /= support as f64;
        }
        let n = norm(&sum);
        if n == 0.0 {
            warnings.push(format!(
                "group {:?}: member vectors cancel to zero; omitted",
                group.value
            ));
            continue;
        }
        for s in sum.iter_mut() {
            *s /= n;
        }
        centroids.push(ValueCentroid {
            value: group.value.clone(),
            centroid: sum,
            support,
        });
    }
    Ok((centroids, warnings))
}

/// Cosine between a person vector and a centroid, clamped to [0,1].
///
/// Negative similarity carries no relevance signal, so it maps to 0 rather
/// than being shifted.
pub fn cos_sim_score(person_vec: &[f32], centroid: &ValueCentroid) -> Result<f64, ScoreError> {
    assert_eq!(person_vec.len(), centroid.centroid.len());
    let mut dot = 0.0f64;
    let mut person_sq = 0.0f64;
    for (&p, &c) in person_vec.iter().zip(&centroid.centroid) {
        let p = f64::from(p);
        dot += p * c;
        person_sq += p * p;
    }
    if person_sq == 0.0 {
        return Err(ScoreError::ZeroPersonVector);
    }
    let cos = dot / (person_sq.sqrt() * norm(&centroid.centroid));
    Ok(cos.clamp(0.0, 1.0))
}

/// Multinomial logistic-regression classifier over document vectors.
#[derive(Debug, Clone)]
pub struct Classifier {
    class_labels: Vec<String>,
    label_index: HashMap<String, usize>,
    /// K x dim, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
    dim: usize,
}

impl Classifier {
    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Softmax distribution over all classes for one person vector.
    pub fn predict_dist(&self, person_vec: &[f32]) -> Vec<f64> {
        assert_eq!(person_vec.len(), self.dim);
        let x: Vec<f64> = person_vec.iter().map(|&v| f64::from(v)).collect();
        let k = self.class_labels.len();
        let mut z = vec![0.0f64; k];
        for (c, zc) in z.iter_mut().enumerate() {
            let row = &self.weights[c * self.dim..(c + 1) * self.dim];
            *zc = self.bias[c] + row.iter().zip(&x).map(|(w, xi)| w * xi).sum::<f64>();
        }
        softmax_in_place(&mut z);
        z
    }

    /// Probability of `value` given the person vector.
    pub fn predict_proba(&self, person_vec: &[f32], value: &str) -> Result<f64, ScoreError> {
        let Some(&k) = self.label_index.get(value) else {
            return Err(ScoreError::UnknownValue {
                value: value.to_string(),
                known: self.class_labels.clone(),
            });
        };
        Ok(self.predict_dist(person_vec)[k])
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Mean softmax cross-entropy plus `(reg/2)*||w||^2` and its gradient.
///
/// `examples` pairs a feature vector with a class id below `k`; `w` is `k*dim`
/// row-major. The bias is not regularized. Exposed so the gradient can be
/// checked against finite differences.
pub fn logreg_loss_grad(
    examples: &[(Vec<f64>, usize)],
    k: usize,
    dim: usize,
    w: &[f64],
    b: &[f64],
    reg: f64,
) -> (f64, Vec<f64>, Vec<f64>) {
    assert!(!examples.is_empty());
    assert_eq!(w.len(), k * dim);
    assert_eq!(b.len(), k);

    let n = examples.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0f64; k * dim];
    let mut gb = vec![0.0f64; k];
    let mut z = vec![0.0f64; k];
    for (x, y) in examples {
        debug_assert!(*y < k);
        for (c, zc) in z.iter_mut().enumerate() {
            let row = &w[c * dim..(c + 1) * dim];
            *zc = b[c] + row.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>();
        }
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = z.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        loss += log_sum - z[*y];
        for c in 0..k {
            let p = (z[c] - log_sum).exp();
            let coeff = p - if c == *y { 1.0 } else { 0.0 };
            gb[c] += coeff;
            let grow = &mut gw[c * dim..(c + 1) * dim];
            for (g, xi) in grow.iter_mut().zip(x) {
                *g += coeff * xi;
            }
        }
    }
    loss /= n;
    for g in gw.iter_mut() {
        *g /= n;
    }
    for g in gb.iter_mut() {
        *g /= n;
    }
    loss += 0.5 * reg * w.iter().map(|x| x * x).sum::<f64>();
    for (g, wi) in gw.iter_mut().zip(w) {
        *g += reg * wi;
    }
    (loss, gw, gb)
}

/// Trains the classifier by full-batch gradient descent from zero weights.
///
/// Classes follow group order; groups without resolvable members are skipped
/// with a warning. Deterministic: no randomness anywhere in the descent.
pub fn train_logreg(
    model: &EmbeddingModel,
    groups: &[ValueGroup],
    reg: f64,
    iters: usize,
    lr: f64,
) -> Result<(Classifier, Vec<String>), ScoreError> {
    if groups.is_empty() {
        return Err(ScoreError::EmptyGroups);
    }
    let dim = model.dim();
    let mut labels: Vec<String> = Vec::new();
    let mut examples: Vec<(Vec<f64>, usize)> = Vec::new();
    let mut warnings = Vec::new();
    for group in groups {
        let vectors: Vec<Vec<f64>> = group
            .members
            .iter()
            .filter_map(|m| model.doc_vector(m))
            .map(|v| v.iter().map(|&x| f64::from(x)).collect())
            .collect();
        if vectors.is_empty() {
            warnings.push(format!(
                "group {:?}: no member has a document vector; class skipped",
                group.value
            ));
            continue;
        }
        let class = labels.len();
        labels.push(group.value.clone());
        examples.extend(vectors.into_iter().map(|v| (v, class)));
    }
    match labels.len() {
        0 => return Err(ScoreError::NoTrainingVectors),
        1 => return Err(ScoreError::SingleClass(labels.pop().unwrap())),
        _ => {}
    }

    let k = labels.len();
    let mut w = vec![0.0f64; k * dim];
    let mut b = vec![0.0f64; k];
    for iter in 0..iters {
        let (loss, gw, gb) = logreg_loss_grad(&examples, k, dim, &w, &b, reg);
        if !loss.is_finite() {
            return Err(ScoreError::NonFiniteLoss { iter });
        }
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= lr * g;
        }
        for (bi, g) in b.iter_mut().zip(&gb) {
            *bi -= lr * g;
        }
    }

    let label_index = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), i))
        .collect();
    Ok((
        Classifier {
            class_labels: labels,
            label_index,
            weights: w,
            bias: b,
            dim,
        },
        warnings,
    ))
}

/// A ready-to-use scoring method over per-value models.
#[derive(Debug, Clone)]
pub enum ValueScorer {
    CosSim {
        centroids: Vec<ValueCentroid>,
        index: HashMap<String, usize>,
    },
    LogReg(Classifier),
}

impl ValueScorer {
    pub fn cos_sim(centroids: Vec<ValueCentroid>) -> Self {
        let index = centroids
            .iter()
            .enumerate()
            .map(|(i, c)| (c.value.clone(), i))
            .collect();
        ValueScorer::CosSim { centroids, index }
    }

    pub fn log_reg(classifier: Classifier) -> Self {
        ValueScorer::LogReg(classifier)
    }

    pub fn method_name(&self) -> &'static str {
        match self {
            ValueScorer::CosSim { .. } => "CosSim",
            ValueScorer::LogReg(_) => "LogReg",
        }
    }

    /// Scores each candidate value against one person vector.
    ///
    /// Candidates without a per-value model are collected as issues while the
    /// rest are still scored; output preserves candidate order. `mapped` is
    /// left at 0 for a later mapping pass.
    pub fn score(
        &self,
        subject: &str,
        person_vec: &[f32],
        candidates: &[String],
    ) -> Result<(Vec<ScoreRecord>, Vec<String>), ScoreError> {
        let mut records = Vec::with_capacity(candidates.len());
        let mut issues = Vec::new();
        match self {
            ValueScorer::CosSim { centroids, index } => {
                for value in candidates {
                    let Some(&i) = index.get(value) else {
                        issues.push(format!(
                            "subject {subject:?}: no centroid for value {value:?}; skipped"
                        ));
                        continue;
                    };
                    let raw = cos_sim_score(person_vec, &centroids[i]).map_err(|e| {
                        ScoreError::Subject {
                            subject: subject.to_string(),
                            source: Box::new(e),
                        }
                    })?;
                    records.push(ScoreRecord {
                        subject: subject.to_string(),
                        value: value.clone(),
                        raw,
                        mapped: 0,
                    });
                }
            }
            ValueScorer::LogReg(classifier) => {
                let dist = classifier.predict_dist(person_vec);
                for value in candidates {
                    let Some(&k) = classifier.label_index.get(value) else {
                        issues.push(format!(
                            "subject {subject:?}: value {value:?} is not a class label; skipped"
                        ));
                        continue;
                    };
                    records.push(ScoreRecord {
                        subject: subject.to_string(),
                        value: value.clone(),
                        raw: dist[k],
                        mapped: 0,
                    });
                }
            }
        }
        Ok((records, issues))
    }
}

/// Scores a subject's candidates using its trained document vector.
pub fn score_subject(
    model: &EmbeddingModel,
    scorer: &ValueScorer,
    subject: &str,
    candidates: &[String],
) -> Result<(Vec<ScoreRecord>, Vec<String>), ScoreError> {
    let vec = model
        .doc_vector(subject)
        .ok_or_else(|| ScoreError::MissingSubjectVector(subject.to_string()))?;
    scorer.score(subject, vec, candidates)
}

/// Writes `subject<TAB>value<TAB>raw<TAB>mapped` with raw at 6 decimals.
pub fn write_scores(records: &[ScoreRecord], path: impl AsRef<Path>) -> Result<(), ScoreError> {
    let path = path.as_ref();
    let mut out = String::new();
    for r in records {
        out.push_str(&format!(
            "{}\t{}\t{:.6}\t{}\n",
            r.subject, r.value, r.raw, r.mapped
        ));
    }
    let mut f = fs::File::create(path).map_err(|source| ScoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    f.write_all(out.as_bytes()).map_err(|source| ScoreError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<Vec<ScoreRecord>, ScoreError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| ScoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|source| ScoreError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let malformed = |reason: String| ScoreError::Malformed {
            path: path.to_path_buf(),
            line: lineno,
            reason,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(malformed(format!(
                "expected 4 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let raw: f64 = fields[2]
            .parse()
            .map_err(|_| malformed(format!("bad raw score {:?}", fields[2])))?;
        let mapped: u8 = fields[3]
            .parse()
            .map_err(|_| malformed(format!("bad mapped score {:?}", fields[3])))?;
        records.push(ScoreRecord {
            subject: fields[0].to_string(),
            value: fields[1].to_string(),
            raw,
            mapped,
        });
    }
    Ok(records)
}
