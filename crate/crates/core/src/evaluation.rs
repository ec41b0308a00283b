//! Compares mapped predictions against gold relevance labels.
//!
//! Accuracy@delta and average score difference pool all (subject, value)
//! pairs; Kendall's tau-b is computed per subject and averaged unweighted, so
//! a subject with two candidate values counts as much as one with twenty.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use thiserror::Error;

/// How many missing pairs a mismatch error spells out per side.
const MISMATCH_LIST_CAP: usize = 10;

#[derive(Debug, Error)]
pub enum EvalError {
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
    #[error("duplicate (subject, value) pair: {subject:?} / {value:?}")]
    DuplicatePair { subject: String, value: String },
    #[error(
        "predictions and gold cover different pairs; \
         {n_missing_in_preds} missing in predictions (first: {missing_in_preds:?}), \
         {n_missing_in_gold} missing in gold (first: {missing_in_gold:?})"
    )]
    PairMismatch {
        missing_in_preds: Vec<String>,
        missing_in_gold: Vec<String>,
        n_missing_in_preds: usize,
        n_missing_in_gold: usize,
    },
    #[error("no (subject, value) pairs to evaluate")]
    NoPairs,
    #[error("no subject has at least two pairs; tau undefined")]
    NoTauSubjects,
    #[error("delta must be non-negative, got {0}")]
    InvalidDelta(i64),
}

/// One labeled (subject, value) pair; used for both predictions and gold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoredPair {
    pub subject: String,
    pub value: String,
    pub score: i64,
}

impl ScoredPair {
    pub fn new(subject: impl Into<String>, value: impl Into<String>, score: i64) -> Self {
        ScoredPair {
            subject: subject.into(),
            value: value.into(),
            score,
        }
    }
}

/// Gold labels: `subject<TAB>value<TAB>score` with score in 0..=7.
pub fn load_gold(path: impl AsRef<Path>) -> Result<Vec<ScoredPair>, EvalError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut pairs = Vec::new();
    let mut seen: HashMap<(String, String), usize> = HashMap::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let malformed = |reason: String| EvalError::Malformed {
            path: path.to_path_buf(),
            line: lineno,
            reason,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(malformed(format!(
                "expected 3 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let (subject, value) = (fields[0], fields[1]);
        if subject.is_empty() || value.is_empty() {
            return Err(malformed("empty subject or value".into()));
        }
        let score: i64 = fields[2]
            .parse()
            .map_err(|_| malformed(format!("bad score {:?}", fields[2])))?;
        if !(0..=7).contains(&score) {
            return Err(malformed(format!("score {score} outside 0..=7")));
        }
        let key = (subject.to_string(), value.to_string());
        if let Some(first) = seen.insert(key, lineno) {
            return Err(malformed(format!(
                "duplicate pair {subject:?} / {value:?} (first at line {first})"
            )));
        }
        pairs.push(ScoredPair::new(subject, value, score));
    }
    Ok(pairs)
}

/// Predictions joined with gold: pooled (pred, gold) score pairs plus the
/// same pairs grouped per subject in prediction order.
struct Joined {
    pooled: Vec<(i64, i64)>,
    by_subject: Vec<(String, Vec<(i64, i64)>)>,
}

fn join(preds: &[ScoredPair], gold: &[ScoredPair]) -> Result<Joined, EvalError> {
    let mut gold_map: HashMap<(&str, &str), i64> = HashMap::with_capacity(gold.len());
    for g in gold {
        if gold_map
            .insert((g.subject.as_str(), g.value.as_str()), g.score)
            .is_some()
        {
            return Err(EvalError::DuplicatePair {
                subject: g.subject.clone(),
                value: g.value.clone(),
            });
        }
    }

    let mut matched: HashMap<(&str, &str), ()> = HashMap::with_capacity(preds.len());
    let mut missing_in_gold = Vec::new();
    let mut n_missing_in_gold = 0usize;
    let mut pooled = Vec::with_capacity(preds.len());
    let mut subject_order: Vec<String> = Vec::new();
    let mut subject_slot: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<Vec<(i64, i64)>> = Vec::new();
    for p in preds {
        let key = (p.subject.as_str(), p.value.as_str());
        if matched.insert(key, ()).is_some() {
            return Err(EvalError::DuplicatePair {
                subject: p.subject.clone(),
                value: p.value.clone(),
            });
        }
        let Some(&gold_score) = gold_map.get(&key) else {
            n_missing_in_gold += 1;
            if missing_in_gold.len() < MISMATCH_LIST_CAP {
                missing_in_gold.push(format!("{}/{}", p.subject, p.value));
            }
            continue;
        };
        pooled.push((p.score, gold_score));
        let slot = *subject_slot.entry(p.subject.clone()).or_insert_with(|| {
            subject_order.push(p.subject.clone());
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push((p.score, gold_score));
    }

    let mut missing_in_preds = Vec::new();
    let mut n_missing_in_preds = 0usize;
    for g in gold {
        if !matched.contains_key(&(g.subject.as_str(), g.value.as_str())) {
            n_missing_in_preds += 1;
            if missing_in_preds.len() < MISMATCH_LIST_CAP {
                missing_in_preds.push(format!("{}/{}", g.subject, g.value));
            }
        }
    }
    if n_missing_in_gold > 0 || n_missing_in_preds > 0 {
        return Err(EvalError::PairMismatch {
            missing_in_preds,
            missing_in_gold,
            n_missing_in_preds,
            n_missing_in_gold,
        });
    }
    if pooled.is_empty() {
        return Err(EvalError::NoPairs);
    }
    Ok(Joined {
        pooled,
        by_subject: subject_order.into_iter().zip(groups).collect(),
    })
}

/// Strict inversions (i < j with a[i] > a[j]) counted while merge sorting.
fn count_inversions(a: &mut [i64], buf: &mut Vec<i64>) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = count_inversions(&mut a[..mid], buf);
    inv += count_inversions(&mut a[mid..], buf);
    buf.clear();
    {
        let (left, right) = a.split_at(mid);
        let (mut i, mut j) = (0, 0);
        while i < left.len() && j < right.len() {
            if left[i] <= right[j] {
                buf.push(left[i]);
                i += 1;
            } else {
                inv += (left.len() - i) as u64;
                buf.push(right[j]);
                j += 1;
            }
        }
        buf.extend_from_slice(&left[i..]);
        buf.extend_from_slice(&right[j..]);
    }
    a.copy_from_slice(buf);
    inv
}

fn tied_pair_count<T: PartialEq>(sorted: &[T]) -> i64 {
    let mut total = 0i64;
    let mut run = 1i64;
    for i in 1..sorted.len() {
        if sorted[i] == sorted[i - 1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Kendall's tau-b with tie correction, O(n log n).
///
/// Returns `None` when n < 2 or either side is fully tied (the denominator
/// vanishes). Uses the identity C - D = n0 - n1 - n2 + n3 - 2*swaps, where
/// swaps counts y-inversions after sorting by (x, y): within an x-tie run the
/// y values are ascending, so every strict inversion is a discordant pair.
pub fn tau_b(x: &[i64], y: &[i64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_unstable_by_key(|&i| (x[i], y[i]));

    let xs: Vec<i64> = idx.iter().map(|&i| x[i]).collect();
    let joint: Vec<(i64, i64)> = idx.iter().map(|&i| (x[i], y[i])).collect();
    let n1 = tied_pair_count(&xs);
    let n3 = tied_pair_count(&joint);
    let mut ys: Vec<i64> = y.to_vec();
    ys.sort_unstable();
    let n2 = tied_pair_count(&ys);

    let mut seq: Vec<i64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = Vec::with_capacity(n);
    let swaps = count_inversions(&mut seq, &mut buf) as i64;

    let n0 = (n as i64) * (n as i64 - 1) / 2;
    if n0 == n1 || n0 == n2 {
        return None;
    }
    let c_minus_d = n0 - n1 - n2 + n3 - 2 * swaps;
    Some(c_minus_d as f64 / (((n0 - n1) as f64) * ((n0 - n2) as f64)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauSummary {
    pub mean: f64,
    /// Subjects that entered the mean, including all-tied ones contributing 0.
    pub evaluated: usize,
    /// Subjects dropped for having fewer than two pairs.
    pub skipped: usize,
}

fn tau_of(joined: &Joined) -> Result<TauSummary, EvalError> {
    let mut sum = 0.0f64;
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    for (_, pairs) in &joined.by_subject {
        if pairs.len() < 2 {
            skipped += 1;
            continue;
        }
        let preds: Vec<i64> = pairs.iter().map(|&(p, _)| p).collect();
        let gold: Vec<i64> = pairs.iter().map(|&(_, g)| g).collect();
        // all-tied subjects carry no ranking signal but still count as 0
        sum += tau_b(&preds, &gold).unwrap_or(0.0);
        evaluated += 1;
    }
    if evaluated == 0 {
        return Err(EvalError::NoTauSubjects);
    }
    Ok(TauSummary {
        mean: sum / evaluated as f64,
        evaluated,
        skipped,
    })
}

fn accuracy_of(joined: &Joined, delta: i64) -> f64 {
    let hits = joined
        .pooled
        .iter()
        .filter(|&&(p, g)| (p - g).abs() <= delta)
        .count();
    hits as f64 / joined.pooled.len() as f64
}

fn asd_of(joined: &Joined) -> f64 {
    let total: i64 = joined.pooled.iter().map(|&(p, g)| (p - g).abs()).sum();
    total as f64 / joined.pooled.len() as f64
}

/// Fraction of pairs whose prediction lies within `delta` of gold.
pub fn accuracy_at_delta(
    preds: &[ScoredPair],
    gold: &[ScoredPair],
    delta: i64,
) -> Result<f64, EvalError> {
    if delta < 0 {
        return Err(EvalError::InvalidDelta(delta));
    }
    Ok(accuracy_of(&join(preds, gold)?, delta))
}

/// Mean absolute difference between predicted and gold scores.
pub fn avg_score_diff(preds: &[ScoredPair], gold: &[ScoredPair]) -> Result<f64, EvalError> {
    Ok(asd_of(&join(preds, gold)?))
}

/// Unweighted mean per-subject tau-b; see `tau_b` for tie handling.
pub fn kendall_tau(preds: &[ScoredPair], gold: &[ScoredPair]) -> Result<TauSummary, EvalError> {
    tau_of(&join(preds, gold)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub kendall_tau: f64,
    pub asd: f64,
    pub delta: i64,
    pub n_subjects: usize,
    pub n_pairs: usize,
    pub tau_subjects: usize,
    pub tau_skipped: usize,
}

/// All three metrics over one joined prediction/gold set.
pub fn evaluate(
    preds: &[ScoredPair],
    gold: &[ScoredPair],
    delta: i64,
) -> Result<EvalReport, EvalError> {
    if delta < 0 {
        return Err(EvalError::InvalidDelta(delta));
    }
    let joined = join(preds, gold)?;
    let tau = tau_of(&joined)?;
    Ok(EvalReport {
        accuracy: accuracy_of(&joined, delta),
        kendall_tau: tau.mean,
        asd: asd_of(&joined),
        delta,
        n_subjects: joined.by_subject.len(),
        n_pairs: joined.pooled.len(),
        tau_subjects: tau.evaluated,
        tau_skipped: tau.skipped,
    })
}

/// Aligned table row plus machine-readable key=value lines.
pub fn format_report(method: &str, r: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:>8} {:>13} {:>6}\n",
        "Method", "Accuracy", "Kendall's Tau", "ASD"
    ));
    out.push_str(&format!(
        "{:<10} {:>8.2} {:>13.2} {:>6.2}\n",
        method, r.accuracy, r.kendall_tau, r.asd
    ));
    out.push('\n');
    out.push_str(&format!("accuracy={:.6}\n", r.accuracy));
    out.push_str(&format!("tau={:.6}\n", r.kendall_tau));
    out.push_str(&format!("asd={:.6}\n", r.asd));
    out.push_str(&format!("delta={}\n", r.delta));
    out.push_str(&format!("n_subjects={}\n", r.n_subjects));
    out.push_str(&format!("n_pairs={}\n", r.n_pairs));
    out.push_str(&format!("tau_subjects={}\n", r.tau_subjects));
    out.push_str(&format!("tau_skipped={}\n", r.tau_skipped));
    out
}
