//! Negative-sampling SGD steps for the distributed bag-of-words and
//! distributed-memory training modes.
//!
//! Each step minimizes the sampled loss
//! `-log σ(h·o_t) - Σ_k log σ(-h·o_{n_k})` where `h` is the hidden vector
//! (the doc vector alone, or doc combined with context word vectors), `o_t`
//! the target word's output row and `o_{n_k}` the noise rows. Every gradient
//! is computed from the pre-step parameter values, so a single step applies
//! the exact analytic gradient of the joint objective; the `*_with` variants
//! take the noise draws as an argument and are the entry points for
//! finite-difference verification.

use rand::Rng;

use super::matrix::{Scalar, SharedMatrix};
use super::vocab::NoiseTable;

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)`, stable for large |x|; `-ln σ(x) = softplus(-x)`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// How the distributed-memory mode merges doc and context vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    Concat,
    Average,
}

/// Which parameter groups a step is allowed to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateMask {
    pub doc: bool,
    pub word_in: bool,
    pub word_out: bool,
}

impl UpdateMask {
    /// Full training: every touched parameter moves.
    pub const ALL: UpdateMask = UpdateMask {
        doc: true,
        word_in: true,
        word_out: true,
    };

    /// Inference: only the (fresh) doc vector moves.
    pub const DOC_ONLY: UpdateMask = UpdateMask {
        doc: true,
        word_in: false,
        word_out: false,
    };
}

/// Borrowed view of the parameter matrices a step operates on.
///
/// `word_out` has `dim` columns except in concat mode, where its width is
/// `dim * (1 + 2*window)` to match the concatenated hidden vector.
#[derive(Debug, Clone, Copy)]
pub struct StepParams<'a, T: Scalar> {
    pub doc: &'a SharedMatrix<T>,
    pub word_in: Option<&'a SharedMatrix<T>>,
    pub word_out: &'a SharedMatrix<T>,
    pub dim: usize,
    pub window: usize,
}

impl<'a, T: Scalar> StepParams<'a, T> {
    fn word_in(&self) -> &'a SharedMatrix<T> {
        self.word_in
            .expect("this training mode requires word input vectors")
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One negative-sampling update of `out` rows against hidden vector `h`.
///
/// Adds the lr-scaled gradient with respect to `h` into `hidden_delta`
/// (negated, i.e. the descent direction) and returns the sampled loss. With
/// `lr == 0` this is a pure objective evaluation. Gradients for every row use
/// the pre-update values even when a noise draw repeats.
fn ns_update<T: Scalar>(
    out: &SharedMatrix<T>,
    target: usize,
    negatives: &[usize],
    h: &[f64],
    lr: f64,
    update_out: bool,
    hidden_delta: &mut [f64],
) -> f64 {
    let width = h.len();
    debug_assert_eq!(out.cols(), width);
    debug_assert_eq!(hidden_delta.len(), width);

    let mut row_buf = vec![0.0; width];
    let mut coeffs = Vec::with_capacity(1 + negatives.len());
    let mut loss = 0.0;
    for (k, &row) in std::iter::once(&target).chain(negatives).enumerate() {
        let is_target = k == 0;
        out.load_row(row, &mut row_buf);
        let x = dot(h, &row_buf);
        let label = if is_target { 1.0 } else { 0.0 };
        let g = lr * (label - sigmoid(x));
        loss += if is_target { softplus(-x) } else { softplus(x) };
        for (d, r) in hidden_delta.iter_mut().zip(&row_buf) {
            *d += g * r;
        }
        coeffs.push(g);
    }
    if update_out {
        for (k, &row) in std::iter::once(&target).chain(negatives).enumerate() {
            out.add_row_scaled(row, h, coeffs[k]);
        }
    }
    loss
}

/// Distributed bag-of-words step: the doc vector alone predicts `target`.
pub fn dbow_step_with<T: Scalar>(
    p: &StepParams<T>,
    doc_row: usize,
    target: usize,
    negatives: &[usize],
    lr: f64,
    mask: UpdateMask,
) -> f64 {
    let mut h = vec![0.0; p.dim];
    p.doc.load_row(doc_row, &mut h);
    let mut delta = vec![0.0; p.dim];
    let loss = ns_update(p.word_out, target, negatives, &h, lr, mask.word_out, &mut delta);
    if mask.doc {
        p.doc.add_row_scaled(doc_row, &delta, 1.0);
    }
    loss
}

/// [`dbow_step_with`] with noise words drawn from `noise`.
#[allow(clippy::too_many_arguments)]
pub fn dbow_step<T: Scalar, R: Rng + ?Sized>(
    p: &StepParams<T>,
    doc_row: usize,
    target: usize,
    negative: usize,
    noise: &NoiseTable,
    lr: f64,
    rng: &mut R,
    mask: UpdateMask,
) -> f64 {
    let negatives = noise.sample_excluding(target, negative, rng);
    dbow_step_with(p, doc_row, target, &negatives, lr, mask)
}

/// Skip-gram side step used by joint word training in dbow mode: the input
/// vector of `context_word` predicts `target`.
pub fn sg_step_with<T: Scalar>(
    p: &StepParams<T>,
    context_word: usize,
    target: usize,
    negatives: &[usize],
    lr: f64,
    mask: UpdateMask,
) -> f64 {
    let word_in = p.word_in();
    let mut h = vec![0.0; p.dim];
    word_in.load_row(context_word, &mut h);
    let mut delta = vec![0.0; p.dim];
    let loss = ns_update(p.word_out, target, negatives, &h, lr, mask.word_out, &mut delta);
    if mask.word_in {
        word_in.add_row_scaled(context_word, &delta, 1.0);
    }
    loss
}

/// Distributed-memory step: doc and context word vectors jointly predict
/// `target`.
///
/// Average mode uses the mean of the doc vector and all context vectors; an
/// empty context therefore degenerates to [`dbow_step_with`]. Concat mode
/// lays the doc vector and up to `2*window` context vectors out side by side
/// in text order, zero-padding unused trailing slots; gradients for padded
/// slots are discarded.
#[allow(clippy::too_many_arguments)]
pub fn dm_step_with<T: Scalar>(
    p: &StepParams<T>,
    doc_row: usize,
    context: &[usize],
    target: usize,
    negatives: &[usize],
    combine: Combine,
    lr: f64,
    mask: UpdateMask,
) -> f64 {
    let dim = p.dim;
    match combine {
        Combine::Average => {
            let word_in = p.word_in;
            let n = 1 + context.len();
            let scale = 1.0 / n as f64;
            let mut h = vec![0.0; dim];
            let mut buf = vec![0.0; dim];
            p.doc.load_row(doc_row, &mut h);
            for &c in context {
                p.word_in().load_row(c, &mut buf);
                for (hv, bv) in h.iter_mut().zip(&buf) {
                    *hv += bv;
                }
            }
            for hv in h.iter_mut() {
                *hv *= scale;
            }

            let mut delta = vec![0.0; dim];
            let loss =
                ns_update(p.word_out, target, negatives, &h, lr, mask.word_out, &mut delta);
            // h = mean of (1 + |context|) vectors, so each receives delta/n.
            if mask.doc {
                p.doc.add_row_scaled(doc_row, &delta, scale);
            }
            if mask.word_in {
                if let Some(word_in) = word_in {
                    for &c in context {
                        word_in.add_row_scaled(c, &delta, scale);
                    }
                }
            }
            loss
        }
        Combine::Concat => {
            let slots = 1 + 2 * p.window;
            debug_assert!(context.len() <= 2 * p.window, "context exceeds window");
            debug_assert_eq!(p.word_out.cols(), dim * slots);
            let mut h = vec![0.0; dim * slots];
            p.doc.load_row(doc_row, &mut h[..dim]);
            for (slot, &c) in context.iter().enumerate() {
                let at = dim * (slot + 1);
                p.word_in().load_row(c, &mut h[at..at + dim]);
            }

            let mut delta = vec![0.0; dim * slots];
            let loss =
                ns_update(p.word_out, target, negatives, &h, lr, mask.word_out, &mut delta);
            if mask.doc {
                p.doc.add_row_scaled(doc_row, &delta[..dim], 1.0);
            }
            if mask.word_in {
                for (slot, &c) in context.iter().enumerate() {
                    let at = dim * (slot + 1);
                    p.word_in().add_row_scaled(c, &delta[at..at + dim], 1.0);
                }
            }
            loss
        }
    }
}

/// [`dm_step_with`] with noise words drawn from `noise`.
#[allow(clippy::too_many_arguments)]
pub fn dm_step<T: Scalar, R: Rng + ?Sized>(
    p: &StepParams<T>,
    doc_row: usize,
    context: &[usize],
    target: usize,
    negative: usize,
    noise: &NoiseTable,
    combine: Combine,
    lr: f64,
    rng: &mut R,
    mask: UpdateMask,
) -> f64 {
    let negatives = noise.sample_excluding(target, negative, rng);
    dm_step_with(p, doc_row, context, target, &negatives, combine, lr, mask)
}

const NO_UPDATE: UpdateMask = UpdateMask {
    doc: false,
    word_in: false,
    word_out: false,
};

/// Sampled loss of a dbow prediction without touching any parameter.
pub fn dbow_objective<T: Scalar>(
    p: &StepParams<T>,
    doc_row: usize,
    target: usize,
    negatives: &[usize],
) -> f64 {
    dbow_step_with(p, doc_row, target, negatives, 0.0, NO_UPDATE)
}

/// Sampled loss of a dm prediction without touching any parameter.
pub fn dm_objective<T: Scalar>(
    p: &StepParams<T>,
    doc_row: usize,
    context: &[usize],
    target: usize,
    negatives: &[usize],
    combine: Combine,
) -> f64 {
    dm_step_with(p, doc_row, context, target, negatives, combine, 0.0, NO_UPDATE)
}

/// Sampled loss of a skip-gram prediction without touching any parameter.
pub fn sg_objective<T: Scalar>(
    p: &StepParams<T>,
    context_word: usize,
    target: usize,
    negatives: &[usize],
) -> f64 {
    sg_step_with(p, context_word, target, negatives, 0.0, NO_UPDATE)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn zero_params(
        docs: usize,
        vocab: usize,
        dim: usize,
        window: usize,
        concat: bool,
    ) -> (SharedMatrix<f64>, SharedMatrix<f64>, SharedMatrix<f64>) {
        let width = if concat { dim * (1 + 2 * window) } else { dim };
        (
            SharedMatrix::zeros(docs, dim),
            SharedMatrix::zeros(vocab, dim),
            SharedMatrix::zeros(vocab, width),
        )
    }

    #[test]
    fn sigmoid_and_softplus_basics() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(10.0) + sigmoid(-10.0) - 1.0).abs() < 1e-12);
        assert!((softplus(0.0) - LN2).abs() < 1e-12);
        assert!((softplus(-40.0)).abs() < 1e-12);
        assert!((softplus(40.0) - 40.0).abs() < 1e-12);
    }

    #[test]
    fn zero_vectors_give_symmetric_loss() {
        // every dot product is 0, σ(0) = 0.5, so loss = (1+neg)·ln 2
        let (doc, word_in, word_out) = zero_params(1, 4, 6, 2, false);
        let p = StepParams {
            doc: &doc,
            word_in: Some(&word_in),
            word_out: &word_out,
            dim: 6,
            window: 2,
        };
        let negs = [1, 2, 3];
        let loss = dbow_objective(&p, 0, 0, &negs);
        assert!((loss - 4.0 * LN2).abs() < 1e-12);

        let loss = dm_objective(&p, 0, &[1, 2], 0, &negs, Combine::Average);
        assert!((loss - 4.0 * LN2).abs() < 1e-12);

        let (doc, word_in, word_out) = zero_params(1, 4, 6, 2, true);
        let p = StepParams {
            doc: &doc,
            word_in: Some(&word_in),
            word_out: &word_out,
            dim: 6,
            window: 2,
        };
        let loss = dm_objective(&p, 0, &[1, 2, 3], 0, &negs, Combine::Concat);
        assert!((loss - 4.0 * LN2).abs() < 1e-12);
    }

    #[test]
    fn step_decreases_its_own_objective() {
        let (doc, word_in, word_out) = zero_params(1, 5, 8, 2, false);
        // break the zero symmetry with a deterministic ramp
        for c in 0..8 {
            doc.set(0, c, 0.05 * (c as f64 + 1.0));
            for r in 0..5 {
                word_out.set(r, c, 0.03 * ((r * 8 + c) as f64 % 7.0 - 3.0));
            }
        }
        let p = StepParams {
            doc: &doc,
            word_in: Some(&word_in),
            word_out: &word_out,
            dim: 8,
            window: 2,
        };
        let negs = [2, 3, 2]; // duplicate on purpose
        let before = dbow_objective(&p, 0, 1, &negs);
        let during = dbow_step_with(&p, 0, 1, &negs, 0.05, UpdateMask::ALL);
        assert_eq!(before, during, "step returns the pre-update loss");
        let after = dbow_objective(&p, 0, 1, &negs);
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn average_mode_with_empty_context_equals_dbow() {
        let build = || {
            let (doc, word_in, word_out) = zero_params(2, 4, 5, 2, false);
            for c in 0..5 {
                doc.set(0, c, 0.1 * (c as f64 - 2.0));
                for r in 0..4 {
                    word_out.set(r, c, 0.07 * ((r + c) as f64 - 3.0));
                }
            }
            (doc, word_in, word_out)
        };

        let (doc_a, in_a, out_a) = build();
        let pa = StepParams {
            doc: &doc_a,
            word_in: Some(&in_a),
            word_out: &out_a,
            dim: 5,
            window: 2,
        };
        let loss_dm = dm_step_with(&pa, 0, &[], 1, &[0, 3], Combine::Average, 0.1, UpdateMask::ALL);

        let (doc_b, in_b, out_b) = build();
        let pb = StepParams {
            doc: &doc_b,
            word_in: Some(&in_b),
            word_out: &out_b,
            dim: 5,
            window: 2,
        };
        let loss_dbow = dbow_step_with(&pb, 0, 1, &[0, 3], 0.1, UpdateMask::ALL);

        assert_eq!(loss_dm, loss_dbow);
        assert_eq!(doc_a.snapshot(), doc_b.snapshot());
        assert_eq!(out_a.snapshot(), out_b.snapshot());
    }

    #[test]
    fn doc_only_mask_freezes_shared_weights() {
        let (doc, word_in, word_out) = zero_params(1, 3, 4, 1, false);
        doc.set(0, 0, 0.2);
        word_out.set(1, 0, 0.3);
        word_in.set(2, 0, -0.1);
        let p = StepParams {
            doc: &doc,
            word_in: Some(&word_in),
            word_out: &word_out,
            dim: 4,
            window: 1,
        };
        let out_before = word_out.snapshot();
        let in_before = word_in.snapshot();
        let doc_before = doc.snapshot();
        dm_step_with(&p, 0, &[2], 1, &[0], Combine::Average, 0.5, UpdateMask::DOC_ONLY);
        assert_eq!(word_out.snapshot(), out_before);
        assert_eq!(word_in.snapshot(), in_before);
        assert_ne!(doc.snapshot(), doc_before);
    }
}
