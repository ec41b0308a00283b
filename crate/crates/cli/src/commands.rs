//! The four pipeline commands: prepare, train, score, eval.
//!
//! Progress and warnings go to stderr; data goes to files (or stdout for the
//! eval report). Each command that writes files also drops its resolved
//! settings next to them as `<command>.effective.config`.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use triplerank::corpus::{
    balance_groups, build_person_doc, group_single_valued, load_sentences, load_triples,
    DirEnricher, DocSet, EnrichmentClient, NullEnricher, DEFAULT_CAP, DEFAULT_FLOOR,
};
use triplerank::embedding::{load_model, save_model, train_observed, InferSession};
use triplerank::evaluation::{evaluate, format_report, load_gold, ScoredPair};
use triplerank::mapping::{apply_mapping, DEFAULT_LOG_FLOOR, DEFAULT_MAX_VALUE};
use triplerank::scoring::{
    build_centroids, read_scores, train_logreg, write_scores, ScoreRecord, ValueScorer,
    DEFAULT_LOGREG_ITERS, DEFAULT_LOGREG_LR, DEFAULT_LOGREG_REG,
};
use triplerank::{MapKind, MappingSpec, Property, TrainConfig};

use crate::config::{self, pick, pick_opt, pick_required, pick_switch};
use crate::files;
use crate::{CliError, EvalArgs, PrepareArgs, ScoreArgs, TrainArgs};

/// Scoring method selector for `score --method`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    CosSim,
    LogReg,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::CosSim => f.write_str("cossim"),
            Method::LogReg => f.write_str("logreg"),
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cossim" => Ok(Method::CosSim),
            "logreg" => Ok(Method::LogReg),
            other => Err(format!(
                "unknown method {other:?} (expected cossim or logreg)"
            )),
        }
    }
}

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Input(format!(
            "{what} file {} does not exist",
            path.display()
        )))
    }
}

fn require_dir(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::Input(format!(
            "{what} directory {} does not exist",
            path.display()
        )))
    }
}

fn ensure_parent_dir(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CliError::Io {
                path: parent.to_path_buf(),
                source: e,
            })?;
        }
    }
    Ok(())
}

fn output_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

pub fn cmd_prepare(args: &PrepareArgs) -> Result<(), CliError> {
    let cfg = config::load_optional(&args.shared.config)?;
    let triples_path: PathBuf = pick_required(&args.triples, &cfg, "triples")?;
    let sentences_path: PathBuf = pick_required(&args.sentences, &cfg, "sentences")?;
    let property: Property = pick_required(&args.property, &cfg, "property")?;
    let floor: usize = pick(&args.floor, &cfg, "floor", DEFAULT_FLOOR)?;
    let cap: usize = pick(&args.cap, &cfg, "cap", DEFAULT_CAP)?;
    let enrich_dir: Option<PathBuf> = pick_opt(&args.enrich_dir, &cfg, "enrich-dir")?;
    let shuffle = pick_switch(args.shuffle, &cfg, "shuffle")?;
    let seed: u64 = pick(&args.shared.seed, &cfg, "seed", 1)?;
    let out: PathBuf = pick_required(&args.out, &cfg, "out")?;

    require_file(&triples_path, "triples")?;
    require_file(&sentences_path, "sentences")?;
    if let Some(d) = &enrich_dir {
        require_dir(d, "enrichment")?;
    }

    let triples = load_triples(&triples_path, property)?;
    if triples.is_empty() {
        return Err(CliError::Input(format!(
            "no triples in {}",
            triples_path.display()
        )));
    }

    let mut sentences: HashMap<&str, Vec<String>> = HashMap::new();
    let pairs = load_sentences(&sentences_path)?;
    for (subject, sentence) in &pairs {
        sentences
            .entry(subject.as_str())
            .or_default()
            .push(sentence.clone());
    }

    // one document per triple subject, in first-appearance order; subjects
    // without sentences keep a zero-token doc so the gap is visible downstream
    let mut docs = DocSet::new();
    for t in &triples {
        if docs.get(&t.subject).is_some() {
            continue;
        }
        let sents = sentences
            .get(t.subject.as_str())
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        docs.insert(build_person_doc(&t.subject, sents))?;
    }

    let mut groups = group_single_valued(&triples, &docs);
    if shuffle {
        // reshuffle members before balancing so truncation keeps a seed-chosen
        // sample instead of the first `cap` in load order
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for g in &mut groups {
            g.members.shuffle(&mut rng);
        }
    }
    let enricher: Box<dyn EnrichmentClient> = match &enrich_dir {
        Some(d) => Box::new(DirEnricher::new(d)),
        None => Box::new(NullEnricher),
    };
    let (groups, report) = balance_groups(groups, &mut docs, floor, cap, enricher.as_ref())?;

    let mut value_count: HashMap<&str, usize> = HashMap::new();
    for t in &triples {
        *value_count.entry(t.subject.as_str()).or_insert(0) += 1;
    }
    let mut candidates: Vec<(String, Vec<String>)> = Vec::new();
    let mut cand_index: HashMap<&str, usize> = HashMap::new();
    for t in &triples {
        if value_count[t.subject.as_str()] < 2 {
            continue;
        }
        let i = *cand_index.entry(t.subject.as_str()).or_insert_with(|| {
            candidates.push((t.subject.clone(), Vec::new()));
            candidates.len() - 1
        });
        candidates[i].1.push(t.value.clone());
    }

    fs::create_dir_all(&out).map_err(|e| CliError::Io {
        path: out.clone(),
        source: e,
    })?;
    files::write_docs(&out, docs.docs())?;
    files::write_groups(&out, &groups)?;
    files::write_candidates(&out, &candidates)?;

    let pseudo = docs
        .docs()
        .iter()
        .filter(|d| d.subject.starts_with("!enrich/"))
        .count();
    let mut balance = String::new();
    balance.push_str(&format!("property: {property}\n"));
    balance.push_str(&format!("triples: {}\n", triples.len()));
    balance.push_str(&format!(
        "subjects: {} ({} multi-valued)\n",
        value_count.len(),
        candidates.len()
    ));
    balance.push_str(&format!(
        "documents: {} ({pseudo} enrichment pseudo-docs)\n",
        docs.len()
    ));
    balance.push_str(&format!("groups: {}\n", groups.len()));
    for (value, before, after) in &report.truncated {
        balance.push_str(&format!("truncated {value:?}: {before} -> {after}\n"));
    }
    for (value, added) in &report.enriched {
        balance.push_str(&format!("enriched {value:?}: +{added} pseudo-doc(s)\n"));
    }
    for w in &report.warnings {
        balance.push_str(&format!("warning: {w}\n"));
    }
    let balance_path = out.join(files::BALANCE_REPORT_FILE);
    fs::write(&balance_path, balance).map_err(|e| CliError::Io {
        path: balance_path,
        source: e,
    })?;

    let mut effective = vec![
        ("triples", triples_path.display().to_string()),
        ("sentences", sentences_path.display().to_string()),
        ("property", property.to_string()),
        ("floor", floor.to_string()),
        ("cap", cap.to_string()),
        ("shuffle", shuffle.to_string()),
        ("seed", seed.to_string()),
        ("out", out.display().to_string()),
    ];
    if let Some(d) = &enrich_dir {
        effective.push(("enrich-dir", d.display().to_string()));
    }
    config::write_effective(&out, "prepare", &effective)?;

    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "prepared {} documents, {} groups, {} multi-valued subjects -> {}",
        docs.len(),
        groups.len(),
        candidates.len(),
        out.display()
    );
    Ok(())
}

pub fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let cfg = config::load_optional(&args.shared.config)?;
    let corpus: PathBuf = pick_required(&args.corpus, &cfg, "corpus")?;
    let model_path: PathBuf = pick_required(&args.model, &cfg, "model")?;
    let d = TrainConfig::default();
    let tc = TrainConfig {
        mode: pick(&args.mode, &cfg, "mode", d.mode)?,
        dim: pick(&args.dim, &cfg, "dim", d.dim)?,
        window: pick(&args.window, &cfg, "window", d.window)?,
        negative: pick(&args.negative, &cfg, "negative", d.negative)?,
        epochs: pick(&args.epochs, &cfg, "epochs", d.epochs)?,
        min_count: pick(&args.min_count, &cfg, "min-count", d.min_count)?,
        workers: pick(&args.shared.workers, &cfg, "workers", d.workers)?,
        initial_lr: pick(&args.initial_lr, &cfg, "initial-lr", d.initial_lr)?,
        final_lr: pick(&args.final_lr, &cfg, "final-lr", d.final_lr)?,
        dbow_words: pick_switch(args.dbow_words, &cfg, "dbow-words")?,
        seed: pick(&args.shared.seed, &cfg, "seed", d.seed)?,
    };
    // reject bad hyperparameters before any corpus is read
    tc.validate()?;
    require_dir(&corpus, "corpus")?;

    let docs = files::read_docs(&corpus)?;
    eprintln!(
        "training {} over {} documents from {}",
        tc.mode,
        docs.len(),
        corpus.display()
    );
    let (model, report) = train_observed(docs.docs(), &tc, |s| {
        eprintln!(
            "epoch {}/{}: loss {:.6} lr {:.6}",
            s.epoch, tc.epochs, s.mean_loss, s.lr
        );
    })?;
    if !report.skipped.is_empty() {
        eprintln!(
            "skipped {} document(s) with no in-vocabulary tokens",
            report.skipped.len()
        );
    }

    ensure_parent_dir(&model_path)?;
    save_model(&model, &model_path)?;
    let effective = vec![
        ("corpus", corpus.display().to_string()),
        ("model", model_path.display().to_string()),
        ("mode", tc.mode.to_string()),
        ("dim", tc.dim.to_string()),
        ("window", tc.window.to_string()),
        ("negative", tc.negative.to_string()),
        ("epochs", tc.epochs.to_string()),
        ("min-count", tc.min_count.to_string()),
        ("workers", tc.workers.to_string()),
        ("initial-lr", tc.initial_lr.to_string()),
        ("final-lr", tc.final_lr.to_string()),
        ("dbow-words", tc.dbow_words.to_string()),
        ("seed", tc.seed.to_string()),
    ];
    config::write_effective(&output_dir(&model_path), "train", &effective)?;
    eprintln!(
        "saved model ({} documents, vocabulary {}) to {}",
        model.subjects().len(),
        model.vocab().len(),
        model_path.display()
    );
    Ok(())
}

pub fn cmd_score(args: &ScoreArgs) -> Result<(), CliError> {
    let cfg = config::load_optional(&args.shared.config)?;
    let corpus: PathBuf = pick_required(&args.corpus, &cfg, "corpus")?;
    let model_path: PathBuf = pick_required(&args.model, &cfg, "model")?;
    let scores_path: PathBuf = pick_required(&args.scores, &cfg, "scores")?;
    let method: Method = pick(&args.method, &cfg, "method", Method::CosSim)?;
    let mapping: MapKind = pick(&args.mapping, &cfg, "mapping", MapKind::Lin)?;
    let max_score: u8 = pick(&args.max_score, &cfg, "max-score", DEFAULT_MAX_VALUE)?;
    let log_floor: f64 = pick(&args.log_floor, &cfg, "log-floor", DEFAULT_LOG_FLOOR)?;
    let logreg_reg: f64 = pick(&args.logreg_reg, &cfg, "logreg-reg", DEFAULT_LOGREG_REG)?;
    let logreg_iters: usize = pick(&args.logreg_iters, &cfg, "logreg-iters", DEFAULT_LOGREG_ITERS)?;
    let logreg_lr: f64 = pick(&args.logreg_lr, &cfg, "logreg-lr", DEFAULT_LOGREG_LR)?;
    let seed: u64 = pick(&args.shared.seed, &cfg, "seed", 1)?;

    let spec = MappingSpec {
        kind: mapping,
        max_value: max_score,
        log_floor,
    };
    spec.validate()?;
    require_dir(&corpus, "corpus")?;
    require_file(&model_path, "model")?;

    let model = load_model(&model_path)?;
    let docs = files::read_docs(&corpus)?;
    let groups = files::read_groups(&corpus)?;
    let candidates = files::read_candidates(&corpus)?;

    let scorer = match method {
        Method::CosSim => {
            let (centroids, warnings) = build_centroids(&model, &groups)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            ValueScorer::cos_sim(centroids)
        }
        Method::LogReg => {
            let (classifier, warnings) =
                train_logreg(&model, &groups, logreg_reg, logreg_iters, logreg_lr)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            ValueScorer::log_reg(classifier)
        }
    };

    // subjects missing from the model (zero tokens at train time, or a corpus
    // prepared after training) get one inference attempt against the frozen
    // model before they count as failures
    let session = InferSession::new(&model);
    let infer_epochs = model.config().epochs;
    let mut records: Vec<ScoreRecord> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    for (subject, values) in &candidates {
        let scored = match model.doc_vector(subject) {
            Some(vec) => scorer.score(subject, vec, values),
            None => {
                let doc = docs.get(subject).filter(|d| !d.tokens.is_empty());
                match doc {
                    Some(doc) => match session.infer(&doc.tokens, infer_epochs, seed) {
                        Ok(vec) => {
                            eprintln!("subject {subject:?}: no trained vector, inferred one");
                            scorer.score(subject, &vec, values)
                        }
                        Err(e) => {
                            failures.push(format!("subject {subject:?}: inference failed: {e}"));
                            continue;
                        }
                    },
                    None => {
                        failures.push(format!(
                            "subject {subject:?}: no trained vector and no usable document"
                        ));
                        continue;
                    }
                }
            }
        };
        match scored {
            Ok((recs, issues)) => {
                for issue in issues {
                    eprintln!("warning: {issue}");
                }
                // partially skipped values are warnings; a subject that
                // produced no records at all would silently vanish from the
                // scores file, so it counts as a failure
                if recs.is_empty() && !values.is_empty() {
                    failures.push(format!(
                        "subject {subject:?}: none of its {} candidate value(s) has a model",
                        values.len()
                    ));
                }
                records.extend(recs);
            }
            Err(e) => failures.push(e.to_string()),
        }
    }

    apply_mapping(&mut records, &spec)?;
    ensure_parent_dir(&scores_path)?;
    write_scores(&records, &scores_path)?;
    let effective = vec![
        ("corpus", corpus.display().to_string()),
        ("model", model_path.display().to_string()),
        ("scores", scores_path.display().to_string()),
        ("method", method.to_string()),
        ("mapping", mapping.to_string()),
        ("max-score", max_score.to_string()),
        ("log-floor", log_floor.to_string()),
        ("logreg-reg", logreg_reg.to_string()),
        ("logreg-iters", logreg_iters.to_string()),
        ("logreg-lr", logreg_lr.to_string()),
        ("seed", seed.to_string()),
    ];
    config::write_effective(&output_dir(&scores_path), "score", &effective)?;
    eprintln!(
        "scored {} candidate(s) across {} subject(s) -> {}",
        records.len(),
        candidates.len(),
        scores_path.display()
    );

    if !failures.is_empty() {
        for f in &failures {
            eprintln!("scoring failure: {f}");
        }
        return Err(CliError::Input(format!(
            "{} subject(s) could not be scored",
            failures.len()
        )));
    }
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let cfg = config::load_optional(&args.shared.config)?;
    let scores_path: PathBuf = pick_required(&args.scores, &cfg, "scores")?;
    let gold_path: PathBuf = pick_required(&args.gold, &cfg, "gold")?;
    let delta: i64 = pick(&args.delta, &cfg, "delta", 2)?;
    let label: String = pick(&args.label, &cfg, "label", "scores".to_string())?;

    require_file(&scores_path, "scores")?;
    require_file(&gold_path, "gold")?;

    let preds: Vec<ScoredPair> = read_scores(&scores_path)?
        .into_iter()
        .map(|r| ScoredPair::new(r.subject, r.value, i64::from(r.mapped)))
        .collect();
    let gold = load_gold(&gold_path)?;
    let report = evaluate(&preds, &gold, delta)?;
    print!("{}", format_report(&label, &report));
    Ok(())
}
