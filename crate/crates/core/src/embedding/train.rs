//! Multi-worker training loop and single-document inference.
//!
//! Workers process disjoint shards of the shuffled document order and write
//! the shared matrices without locks. A global position counter drives the
//! linear learning-rate decay. With one worker every rng draw and update
//! happens in a fixed sequence, so training is bitwise reproducible.

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::matrix::SharedMatrix;
use super::steps::{self, StepParams, UpdateMask};
use super::vocab::{build_vocab, NoiseTable};
use super::{EmbedError, EmbeddingModel, TrainConfig, TrainMode};
use crate::corpus::PersonDoc;

/// Progress snapshot reported after each epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Mean sampled loss over the epoch's prediction steps.
    pub mean_loss: f64,
    /// Learning rate at the end of the epoch.
    pub lr: f64,
    /// Prediction steps taken this epoch.
    pub steps: u64,
}

/// Side information from a training run.
#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    /// Subjects skipped because no token was in the vocabulary.
    pub skipped: Vec<String>,
    pub epochs: Vec<EpochStats>,
}

struct Schedule {
    initial: f64,
    terminal: f64,
    total: u64,
}

impl Schedule {
    fn lr(&self, t: u64) -> f64 {
        let frac = (t.min(self.total)) as f64 / self.total as f64;
        // both endpoints exact, unlike a + (b - a) * frac
        self.initial * (1.0 - frac) + self.terminal * frac
    }
}

fn mix_seed(seed: u64, epoch: u64, worker: u64) -> u64 {
    let mut z = seed
        ^ epoch.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ worker.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const SHUFFLE_SALT: u64 = 0x5331_1AC0_7E5E_ED01;

/// In-window token ids around position `i`, in text order, center excluded.
fn context_ids(ids: &[usize], i: usize, window: usize) -> Vec<usize> {
    let lo = i.saturating_sub(window);
    let hi = (i + window).min(ids.len() - 1);
    (lo..=hi).filter(|&j| j != i).map(|j| ids[j]).collect()
}

struct EpochCtx<'a> {
    params: StepParams<'a, f32>,
    config: &'a TrainConfig,
    noise: &'a NoiseTable,
    progress: &'a AtomicU64,
    schedule: &'a Schedule,
}

/// Runs every position of one document; returns (loss sum, step count).
fn run_doc(ctx: &EpochCtx, rng: &mut ChaCha8Rng, doc_row: usize, ids: &[usize]) -> (f64, u64) {
    let mut loss = 0.0;
    let mut steps = 0u64;
    for i in 0..ids.len() {
        let t = ctx.progress.fetch_add(1, Ordering::Relaxed);
        let lr = ctx.schedule.lr(t);
        match ctx.config.mode {
            TrainMode::Dbow => {
                loss += steps::dbow_step(
                    &ctx.params,
                    doc_row,
                    ids[i],
                    ctx.config.negative,
                    ctx.noise,
                    lr,
                    rng,
                    UpdateMask::ALL,
                );
                steps += 1;
                if ctx.config.dbow_words {
                    for &cw in &context_ids(ids, i, ctx.config.window) {
                        let negatives =
                            ctx.noise.sample_excluding(ids[i], ctx.config.negative, rng);
                        loss += steps::sg_step_with(
                            &ctx.params,
                            cw,
                            ids[i],
                            &negatives,
                            lr,
                            UpdateMask::ALL,
                        );
                        steps += 1;
                    }
                }
            }
            TrainMode::DmConcat | TrainMode::DmAvg => {
                let combine = ctx.config.mode.combine().unwrap();
                let context = context_ids(ids, i, ctx.config.window);
                loss += steps::dm_step(
                    &ctx.params,
                    doc_row,
                    &context,
                    ids[i],
                    ctx.config.negative,
                    ctx.noise,
                    combine,
                    lr,
                    rng,
                    UpdateMask::ALL,
                );
                steps += 1;
            }
        }
    }
    (loss, steps)
}

/// Trains a paragraph-vector model over `docs`.
///
/// Documents whose tokens are all out of vocabulary are skipped (reported in
/// [`TrainReport::skipped`]). The document order is reshuffled every epoch
/// from the config seed, and the learning rate decays linearly from
/// `initial_lr` to `final_lr` across all scheduled prediction steps.
pub fn train(docs: &[PersonDoc], config: &TrainConfig) -> Result<EmbeddingModel, EmbedError> {
    train_observed(docs, config, |_| {}).map(|(model, _)| model)
}

/// [`train`] with a per-epoch observer and the full report.
pub fn train_observed(
    docs: &[PersonDoc],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(EmbeddingModel, TrainReport), EmbedError> {
    config.validate()?;
    if docs.is_empty() {
        return Err(EmbedError::NoTrainableDocs);
    }
    let vocab = build_vocab(docs, config.min_count)?;

    let mut seen = HashSet::new();
    let mut trainable: Vec<(&str, Vec<usize>)> = Vec::new();
    let mut skipped = Vec::new();
    for doc in docs {
        if !seen.insert(doc.subject.as_str()) {
            return Err(EmbedError::DuplicateSubject(doc.subject.clone()));
        }
        let ids = vocab.token_ids(&doc.tokens);
        if ids.is_empty() {
            skipped.push(doc.subject.clone());
        } else {
            trainable.push((doc.subject.as_str(), ids));
        }
    }
    if trainable.is_empty() {
        return Err(EmbedError::NoTrainableDocs);
    }

    let n_docs = trainable.len();
    let dim = config.dim;
    let doc_m = SharedMatrix::<f32>::zeros(n_docs, dim);
    let word_in_m = config
        .uses_word_in()
        .then(|| SharedMatrix::<f32>::zeros(vocab.len(), dim));
    let word_out_m = SharedMatrix::<f32>::zeros(vocab.len(), config.output_width());

    let bound = 0.5 / dim as f64;
    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    doc_m.fill_uniform(bound, &mut init_rng);
    if let Some(m) = &word_in_m {
        m.fill_uniform(bound, &mut init_rng);
    }
    word_out_m.fill_uniform(bound, &mut init_rng);

    let positions: u64 = trainable.iter().map(|(_, ids)| ids.len() as u64).sum();
    let schedule = Schedule {
        initial: f64::from(config.initial_lr),
        terminal: f64::from(config.final_lr),
        total: positions * config.epochs as u64,
    };
    let progress = AtomicU64::new(0);
    let params = StepParams {
        doc: &doc_m,
        word_in: word_in_m.as_ref(),
        word_out: &word_out_m,
        dim,
        window: config.window,
    };

    let mut order: Vec<usize> = (0..n_docs).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed ^ SHUFFLE_SALT);
    let mut epochs_out = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let workers = config.workers.min(n_docs);
        let ctx = EpochCtx {
            params,
            config,
            noise: vocab.noise(),
            progress: &progress,
            schedule: &schedule,
        };

        let (loss_sum, step_sum) = std::thread::scope(|scope| {
            let mut handles = Vec::with_capacity(workers);
            for w in 0..workers {
                let shard = &order[w * n_docs / workers..(w + 1) * n_docs / workers];
                let ctx = &ctx;
                let trainable = &trainable;
                handles.push(scope.spawn(move || {
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(mix_seed(ctx.config.seed, epoch as u64, w as u64));
                    let mut loss = 0.0;
                    let mut steps = 0u64;
                    for &di in shard {
                        let (l, s) = run_doc(ctx, &mut rng, di, &trainable[di].1);
                        loss += l;
                        steps += s;
                    }
                    (loss, steps)
                }));
            }
            handles
                .into_iter()
                .fold((0.0, 0u64), |(la, sa), h| {
                    let (l, s) = h.join().expect("training worker panicked");
                    (la + l, sa + s)
                })
        });

        let finite = doc_m.all_finite()
            && word_out_m.all_finite()
            && word_in_m.as_ref().is_none_or(|m| m.all_finite());
        if !finite {
            return Err(EmbedError::NonFinite { epoch: epoch + 1 });
        }

        let stats = EpochStats {
            epoch: epoch + 1,
            mean_loss: loss_sum / step_sum.max(1) as f64,
            lr: schedule.lr(progress.load(Ordering::Relaxed)),
            steps: step_sum,
        };
        on_epoch(&stats);
        epochs_out.push(stats);
    }

    let model = EmbeddingModel::from_parts(
        vocab,
        config.clone(),
        doc_m.snapshot(),
        word_in_m.map(|m| m.snapshot()),
        word_out_m.snapshot(),
        trainable.iter().map(|(s, _)| s.to_string()).collect(),
    )?;
    Ok((model, TrainReport { skipped, epochs: epochs_out }))
}

/// Reusable inference state: the model's shared weights converted once.
///
/// Word and output weights stay frozen; each [`infer`](Self::infer) call
/// trains only its own fresh doc vector, so a session is safe to reuse across
/// many calls.
pub struct InferSession<'m> {
    model: &'m EmbeddingModel,
    word_in: Option<SharedMatrix<f32>>,
    word_out: SharedMatrix<f32>,
}

impl<'m> InferSession<'m> {
    pub fn new(model: &'m EmbeddingModel) -> Self {
        Self {
            model,
            word_in: model.word_in_vectors().map(SharedMatrix::from_dense),
            word_out: SharedMatrix::from_dense(model.word_out_vectors()),
        }
    }

    pub fn infer(&self, tokens: &[String], epochs: usize, seed: u64) -> Result<Vec<f32>, EmbedError> {
        if epochs == 0 {
            return Err(EmbedError::InvalidConfig(
                "inference epochs must be >= 1".to_string(),
            ));
        }
        let config = self.model.config();
        let vocab = self.model.vocab();
        let ids = vocab.token_ids(tokens);
        if ids.is_empty() {
            return Err(EmbedError::NoInVocabTokens);
        }

        let dim = config.dim;
        let doc = SharedMatrix::<f32>::zeros(1, dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        doc.fill_uniform(0.5 / dim as f64, &mut rng);
        let params = StepParams {
            doc: &doc,
            word_in: self.word_in.as_ref(),
            word_out: &self.word_out,
            dim,
            window: config.window,
        };
        let schedule = Schedule {
            initial: f64::from(config.initial_lr),
            terminal: f64::from(config.final_lr),
            total: (epochs * ids.len()) as u64,
        };

        let mut t = 0u64;
        for _ in 0..epochs {
            for i in 0..ids.len() {
                let lr = schedule.lr(t);
                t += 1;
                match config.mode {
                    // joint word training has no effect on a frozen model;
                    // only the doc prediction task moves the fresh vector
                    TrainMode::Dbow => {
                        steps::dbow_step(
                            &params,
                            0,
                            ids[i],
                            config.negative,
                            vocab.noise(),
                            lr,
                            &mut rng,
                            UpdateMask::DOC_ONLY,
                        );
                    }
                    TrainMode::DmConcat | TrainMode::DmAvg => {
                        let combine = config.mode.combine().unwrap();
                        let context = context_ids(&ids, i, config.window);
                        steps::dm_step(
                            &params,
                            0,
                            &context,
                            ids[i],
                            config.negative,
                            vocab.noise(),
                            combine,
                            lr,
                            &mut rng,
                            UpdateMask::DOC_ONLY,
                        );
                    }
                }
            }
        }
        if !doc.all_finite() {
            return Err(EmbedError::NonFinite { epoch: epochs });
        }
        Ok(doc.snapshot().row(0).to_vec())
    }
}

/// Trains a vector for an unseen document against frozen model weights.
pub fn infer_vector(
    model: &EmbeddingModel,
    tokens: &[String],
    epochs: usize,
    seed: u64,
) -> Result<Vec<f32>, EmbedError> {
    InferSession::new(model).infer(tokens, epochs, seed)
}
