//! Triple and sentence ingestion, per-person documents, value groups.
//!
//! The preparation flow: load `(subject, value)` triples for a property, fold
//! every sentence mentioning a subject into one [`PersonDoc`], group subjects
//! that carry exactly one value by that value, then balance the groups by
//! truncating oversized ones and enriching undersized ones with pseudo-docs
//! fetched from an [`EnrichmentClient`].

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

/// Pages requested from the enrichment client for an undersized group.
pub const ENRICH_PAGE_LIMIT: usize = 200;

/// Default minimum group size before enrichment kicks in.
pub const DEFAULT_FLOOR: usize = 100;

/// Default maximum group size; larger groups are truncated.
pub const DEFAULT_CAP: usize = 5000;

#[derive(Debug, Error)]
pub enum CorpusError {
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
    #[error("duplicate document for subject {0:?}")]
    DuplicateSubject(String),
    #[error("invalid balance bounds: floor {floor} exceeds cap {cap}")]
    InvalidBounds { floor: usize, cap: usize },
    #[error("unknown property {0:?} (expected \"profession\" or \"nationality\")")]
    UnknownProperty(String),
}

/// The knowledge-base property a triple asserts a value for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Property {
    Profession,
    Nationality,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Property::Profession => f.write_str("profession"),
            Property::Nationality => f.write_str("nationality"),
        }
    }
}

impl FromStr for Property {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, CorpusError> {
        match s {
            "profession" => Ok(Property::Profession),
            "nationality" => Ok(Property::Nationality),
            other => Err(CorpusError::UnknownProperty(other.to_string())),
        }
    }
}

/// One `(subject, property, value)` assertion.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub subject: String,
    pub property: Property,
    pub value: String,
}

/// A subject's preprocessed token sequence, built from every sentence that
/// mentions them. All tokens are lowercase and none equals a token of the
/// subject's own name.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonDoc {
    pub subject: String,
    pub tokens: Vec<String>,
    pub source_sentence_count: usize,
}

/// The single-valued subjects of one value, in load order.
///
/// `members` holds subject keys into a [`DocSet`]. Enrichment pseudo-docs get
/// synthetic keys and set the `enriched` flag.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueGroup {
    pub value: String,
    pub property: Property,
    pub members: Vec<String>,
    pub enriched: bool,
}

/// Insertion-ordered store of person documents keyed by subject.
#[derive(Debug, Default, Clone)]
pub struct DocSet {
    docs: Vec<PersonDoc>,
    index: HashMap<String, usize>,
}

impl DocSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, doc: PersonDoc) -> Result<(), CorpusError> {
        if self.index.contains_key(&doc.subject) {
            return Err(CorpusError::DuplicateSubject(doc.subject));
        }
        self.index.insert(doc.subject.clone(), self.docs.len());
        self.docs.push(doc);
        Ok(())
    }

    pub fn get(&self, subject: &str) -> Option<&PersonDoc> {
        self.index.get(subject).map(|&i| &self.docs[i])
    }

    /// Documents in insertion order.
    pub fn docs(&self) -> &[PersonDoc] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

/// Loads `subject<TAB>value` triples, deduplicating repeated lines.
///
/// Fields are whitespace-trimmed and must be non-empty; lines with no tab or
/// extra tabs are rejected with their line number. Blank lines are skipped.
pub fn load_triples(path: impl AsRef<Path>, property: Property) -> Result<Vec<Triple>, CorpusError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;

    let mut triples = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let malformed = |reason: &str| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: lineno,
            reason: reason.to_string(),
        };
        let (subject, value) = line
            .split_once('\t')
            .ok_or_else(|| malformed("missing tab separator"))?;
        if value.contains('\t') {
            return Err(malformed("expected exactly two tab-separated fields"));
        }
        let subject = subject.trim();
        let value = value.trim();
        if subject.is_empty() {
            return Err(malformed("empty subject field"));
        }
        if value.is_empty() {
            return Err(malformed("empty value field"));
        }
        if seen.insert((subject.to_string(), value.to_string())) {
            triples.push(Triple {
                subject: subject.to_string(),
                property,
                value: value.to_string(),
            });
        }
    }
    Ok(triples)
}

/// Loads `subject<TAB>sentence` pairs in file order.
///
/// The sentence part may itself contain tabs; only the first tab splits.
pub fn load_sentences(path: impl AsRef<Path>) -> Result<Vec<(String, String)>, CorpusError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;

    let mut pairs = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let (subject, sentence) = line.split_once('\t').ok_or_else(|| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: lineno,
            reason: "missing tab separator".to_string(),
        })?;
        let subject = subject.trim();
        if subject.is_empty() {
            return Err(CorpusError::Malformed {
                path: path.to_path_buf(),
                line: lineno,
                reason: "empty subject field".to_string(),
            });
        }
        pairs.push((subject.to_string(), sentence.to_string()));
    }
    Ok(pairs)
}

fn trim_boundary_punct(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_alphanumeric())
}

/// Builds a person document from the sentences mentioning a subject.
///
/// Sentences are lowercased, every occurrence of the subject's full name is
/// replaced by a space (case-insensitive), and the remainder is split on
/// whitespace with boundary punctuation stripped. Stop words are kept.
/// Residual single name tokens ("young" from "Neil Young") are dropped.
/// An empty subject disables name removal, which is how enrichment pages
/// become pseudo-docs.
pub fn build_person_doc(subject: &str, sentences: &[String]) -> PersonDoc {
    let name = subject.trim().to_lowercase();
    let name_tokens: HashSet<&str> = name
        .split_whitespace()
        .map(trim_boundary_punct)
        .filter(|t| !t.is_empty())
        .collect();

    let mut tokens = Vec::new();
    for sentence in sentences {
        let lower = sentence.to_lowercase();
        let cleaned = if name.is_empty() {
            lower
        } else {
            lower.replace(&name, " ")
        };
        for raw in cleaned.split_whitespace() {
            let token = trim_boundary_punct(raw);
            if token.is_empty() || name_tokens.contains(token) {
                continue;
            }
            tokens.push(token.to_string());
        }
    }

    PersonDoc {
        subject: subject.to_string(),
        tokens,
        source_sentence_count: sentences.len(),
    }
}

/// Groups single-valued subjects by `(property, value)` in load order.
///
/// A subject contributes to a group iff it carries exactly one value for the
/// property; multi-valued subjects are excluded everywhere. Subjects whose
/// document has zero tokens (or no document at all) are excluded, but their
/// value still yields a group so undersized values surface in balancing.
pub fn group_single_valued(triples: &[Triple], docs: &DocSet) -> Vec<ValueGroup> {
    let mut value_count: HashMap<(&str, Property), usize> = HashMap::new();
    for t in triples {
        *value_count.entry((t.subject.as_str(), t.property)).or_insert(0) += 1;
    }

    let mut groups: Vec<ValueGroup> = Vec::new();
    let mut group_index: HashMap<(String, Property), usize> = HashMap::new();
    for t in triples {
        if value_count[&(t.subject.as_str(), t.property)] != 1 {
            continue;
        }
        let key = (t.value.clone(), t.property);
        let gi = *group_index.entry(key).or_insert_with(|| {
            groups.push(ValueGroup {
                value: t.value.clone(),
                property: t.property,
                members: Vec::new(),
                enriched: false,
            });
            groups.len() - 1
        });
        let has_tokens = docs.get(&t.subject).is_some_and(|d| !d.tokens.is_empty());
        if has_tokens {
            groups[gi].members.push(t.subject.clone());
        }
    }
    groups
}

#[derive(Debug, Clone)]
pub struct EnrichError(pub String);

impl fmt::Display for EnrichError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for EnrichError {}

/// Source of extra example pages for undersized value groups.
pub trait EnrichmentClient {
    /// Up to `limit` text pages relevant to `value`, most relevant first.
    fn fetch_pages(&self, value: &str, limit: usize) -> Result<Vec<String>, EnrichError>;
}

/// Enricher that never returns pages; undersized groups just get a warning.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullEnricher;

impl EnrichmentClient for NullEnricher {
    fn fetch_pages(&self, _value: &str, _limit: usize) -> Result<Vec<String>, EnrichError> {
        Ok(Vec::new())
    }
}

/// Offline enricher backed by a fixture directory of `<value>.txt` files,
/// one page per paragraph block separated by blank lines.
#[derive(Debug, Clone)]
pub struct DirEnricher {
    dir: PathBuf,
}

impl DirEnricher {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }
}

impl EnrichmentClient for DirEnricher {
    fn fetch_pages(&self, value: &str, limit: usize) -> Result<Vec<String>, EnrichError> {
        let path = self.dir.join(format!("{value}.txt"));
        let text = fs::read_to_string(&path)
            .map_err(|e| EnrichError(format!("{}: {e}", path.display())))?;

        let mut pages = Vec::new();
        let mut current = String::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                if !current.is_empty() {
                    pages.push(std::mem::take(&mut current));
                }
            } else {
                if !current.is_empty() {
                    current.push('\n');
                }
                current.push_str(line);
            }
            if pages.len() == limit {
                return Ok(pages);
            }
        }
        if !current.is_empty() && pages.len() < limit {
            pages.push(current);
        }
        Ok(pages)
    }
}

/// What [`balance_groups`] did to each group.
#[derive(Debug, Default, Clone)]
pub struct BalanceReport {
    /// `(value, original size, retained size)` per truncated group.
    pub truncated: Vec<(String, usize, usize)>,
    /// `(value, pseudo-docs added)` per enriched group.
    pub enriched: Vec<(String, usize)>,
    /// Groups left below the floor, enrichment failures, and similar.
    pub warnings: Vec<String>,
}

/// Truncates oversized groups and enriches undersized ones.
///
/// Groups above `cap` keep their first `cap` members in load order. Groups
/// below `floor` that are not already enriched receive up to
/// [`ENRICH_PAGE_LIMIT`] pseudo-docs from the enricher; each page becomes a
/// [`PersonDoc`] under a synthetic subject key and is inserted into `docs` so
/// it participates in training. Enrichment failure leaves the group as-is
/// with a recorded warning; the pipeline never aborts on it. Applying this
/// twice with the same bounds changes nothing the second time.
pub fn balance_groups(
    mut groups: Vec<ValueGroup>,
    docs: &mut DocSet,
    floor: usize,
    cap: usize,
    enricher: &dyn EnrichmentClient,
) -> Result<(Vec<ValueGroup>, BalanceReport), CorpusError> {
    if floor > cap {
        return Err(CorpusError::InvalidBounds { floor, cap });
    }

    let mut report = BalanceReport::default();
    for group in &mut groups {
        if group.members.len() < floor && !group.enriched {
            match enricher.fetch_pages(&group.value, ENRICH_PAGE_LIMIT) {
                Ok(pages) => {
                    let mut added = 0usize;
                    for (i, page) in pages.iter().enumerate() {
                        let lines: Vec<String> = page.lines().map(str::to_string).collect();
                        let mut doc = build_person_doc("", &lines);
                        if doc.tokens.is_empty() {
                            continue;
                        }
                        let key = format!("!enrich/{}/{i}", group.value);
                        doc.subject = key.clone();
                        docs.insert(doc)?;
                        group.members.push(key);
                        added += 1;
                    }
                    if added > 0 {
                        group.enriched = true;
                        report.enriched.push((group.value.clone(), added));
                    }
                }
                Err(e) => {
                    report
                        .warnings
                        .push(format!("group {:?}: enrichment failed: {e}", group.value));
                }
            }
        }
        if group.members.len() > cap {
            report
                .truncated
                .push((group.value.clone(), group.members.len(), cap));
            group.members.truncate(cap);
        }
        if group.members.len() < floor {
            report.warnings.push(format!(
                "group {:?} has {} member(s), below floor {floor}",
                group.value,
                group.members.len()
            ));
        }
    }
    Ok((groups, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn tmp_file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn doc_set(docs: Vec<PersonDoc>) -> DocSet {
        let mut set = DocSet::new();
        for d in docs {
            set.insert(d).unwrap();
        }
        set
    }

    #[test]
    fn load_triples_parses_lines() {
        let f = tmp_file("A\tActor\nA\tSinger\n");
        let triples = load_triples(f.path(), Property::Profession).unwrap();
        assert_eq!(
            triples,
            vec![
                Triple {
                    subject: "A".into(),
                    property: Property::Profession,
                    value: "Actor".into()
                },
                Triple {
                    subject: "A".into(),
                    property: Property::Profession,
                    value: "Singer".into()
                },
            ]
        );
    }

    #[test]
    fn load_triples_dedups_repeated_lines() {
        let f = tmp_file("A\tActor\nA\tActor\n");
        let triples = load_triples(f.path(), Property::Profession).unwrap();
        assert_eq!(triples.len(), 1);
    }

    #[test]
    fn load_triples_rejects_missing_tab() {
        let f = tmp_file("A Actor\n");
        let err = load_triples(f.path(), Property::Profession).unwrap_err();
        match err {
            CorpusError::Malformed { line, .. } => assert_eq!(line, 1),
            other => panic!("expected Malformed, got {other:?}"),
        }
    }

    #[test]
    fn load_triples_rejects_empty_fields() {
        let f = tmp_file("A\t  \n");
        assert!(matches!(
            load_triples(f.path(), Property::Profession),
            Err(CorpusError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn load_triples_missing_file_is_io_error() {
        let err = load_triples("/nonexistent/triples.tsv", Property::Profession).unwrap_err();
        assert!(matches!(err, CorpusError::Io { .. }));
    }

    #[test]
    fn person_doc_removes_name_and_lowercases() {
        let doc = build_person_doc("Neil Young", &["Neil Young is a singer.".to_string()]);
        assert_eq!(doc.tokens, vec!["is", "a", "singer"]);
        assert_eq!(doc.source_sentence_count, 1);
    }

    #[test]
    fn person_doc_name_removal_is_case_insensitive() {
        let doc = build_person_doc("Ada", &["ADA wrote THE program".to_string()]);
        assert_eq!(doc.tokens, vec!["wrote", "the", "program"]);
    }

    #[test]
    fn person_doc_empty_sentences_gives_zero_tokens() {
        let doc = build_person_doc("X", &[]);
        assert!(doc.tokens.is_empty());
        assert_eq!(doc.source_sentence_count, 0);
    }

    #[test]
    fn person_doc_drops_residual_name_tokens() {
        // "Young" alone survives full-name removal but not tokenization.
        let doc = build_person_doc(
            "Neil Young",
            &["Young performed; Neil Young sang.".to_string()],
        );
        assert_eq!(doc.tokens, vec!["performed", "sang"]);
    }

    #[test]
    fn person_doc_strips_boundary_punctuation_keeps_digits() {
        let doc = build_person_doc("X", &["(born 1945), \"don't\" stop!".to_string()]);
        assert_eq!(doc.tokens, vec!["born", "1945", "don't", "stop"]);
    }

    #[test]
    fn group_single_valued_excludes_multi_valued() {
        let triples = vec![
            Triple {
                subject: "A".into(),
                property: Property::Profession,
                value: "Actor".into(),
            },
            Triple {
                subject: "B".into(),
                property: Property::Profession,
                value: "Actor".into(),
            },
            Triple {
                subject: "C".into(),
                property: Property::Profession,
                value: "Actor".into(),
            },
            Triple {
                subject: "C".into(),
                property: Property::Profession,
                value: "Singer".into(),
            },
        ];
        let docs = doc_set(
            ["A", "B", "C"]
                .iter()
                .map(|s| build_person_doc(s, &["works on stage".to_string()]))
                .collect(),
        );
        let groups = group_single_valued(&triples, &docs);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].value, "Actor");
        assert_eq!(groups[0].members, vec!["A", "B"]);
    }

    #[test]
    fn group_single_valued_excludes_zero_token_docs() {
        let triples = vec![Triple {
            subject: "A".into(),
            property: Property::Profession,
            value: "Actor".into(),
        }];
        let docs = doc_set(vec![build_person_doc("A", &[])]);
        let groups = group_single_valued(&triples, &docs);
        assert_eq!(groups.len(), 1);
        assert!(groups[0].members.is_empty());
    }

    #[test]
    fn group_single_valued_cardinality() {
        let mut triples = Vec::new();
        let mut docs = DocSet::new();
        for i in 0..200 {
            let subject = format!("S{i}");
            triples.push(Triple {
                subject: subject.clone(),
                property: Property::Profession,
                value: format!("V{i}"),
            });
            docs.insert(build_person_doc(&subject, &["some text here".to_string()]))
                .unwrap();
        }
        let groups = group_single_valued(&triples, &docs);
        assert_eq!(groups.len(), 200);
        assert!(groups.iter().all(|g| g.members.len() == 1));
    }

    struct FixedEnricher {
        pages: usize,
    }

    impl EnrichmentClient for FixedEnricher {
        fn fetch_pages(&self, value: &str, limit: usize) -> Result<Vec<String>, EnrichError> {
            Ok((0..self.pages.min(limit))
                .map(|i| format!("page {i} about {value} topics"))
                .collect())
        }
    }

    struct FailingEnricher;

    impl EnrichmentClient for FailingEnricher {
        fn fetch_pages(&self, _: &str, _: usize) -> Result<Vec<String>, EnrichError> {
            Err(EnrichError("backend unavailable".to_string()))
        }
    }

    fn sized_group(value: &str, n: usize, docs: &mut DocSet) -> ValueGroup {
        let members: Vec<String> = (0..n)
            .map(|i| {
                let s = format!("{value}-{i}");
                docs.insert(build_person_doc(&s, &["filler words".to_string()]))
                    .unwrap();
                s
            })
            .collect();
        ValueGroup {
            value: value.to_string(),
            property: Property::Profession,
            members,
            enriched: false,
        }
    }

    #[test]
    fn balance_truncates_to_cap() {
        let mut docs = DocSet::new();
        let group = sized_group("Actor", 6000, &mut docs);
        let first_5000: Vec<String> = group.members[..5000].to_vec();
        let (groups, report) =
            balance_groups(vec![group], &mut docs, 100, 5000, &NullEnricher).unwrap();
        assert_eq!(groups[0].members, first_5000);
        assert_eq!(report.truncated, vec![("Actor".to_string(), 6000, 5000)]);
    }

    #[test]
    fn balance_enriches_small_groups() {
        let mut docs = DocSet::new();
        let group = sized_group("Carpenter", 40, &mut docs);
        let (groups, report) =
            balance_groups(vec![group], &mut docs, 100, 5000, &FixedEnricher { pages: 200 })
                .unwrap();
        assert_eq!(groups[0].members.len(), 240);
        assert!(groups[0].enriched);
        assert_eq!(report.enriched, vec![("Carpenter".to_string(), 200)]);
        assert!(report.warnings.is_empty());
        // pseudo-docs are real docs now
        assert!(docs.get(&groups[0].members[40]).is_some());
    }

    #[test]
    fn balance_leaves_in_bounds_groups_alone() {
        let mut docs = DocSet::new();
        let group = sized_group("Singer", 500, &mut docs);
        let before = group.clone();
        let (groups, report) =
            balance_groups(vec![group], &mut docs, 100, 5000, &NullEnricher).unwrap();
        assert_eq!(groups[0], before);
        assert!(report.truncated.is_empty());
        assert!(report.enriched.is_empty());
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn balance_enricher_failure_warns_and_continues() {
        let mut docs = DocSet::new();
        let group = sized_group("Carpenter", 3, &mut docs);
        let (groups, report) =
            balance_groups(vec![group], &mut docs, 100, 5000, &FailingEnricher).unwrap();
        assert_eq!(groups[0].members.len(), 3);
        assert!(!groups[0].enriched);
        assert_eq!(report.warnings.len(), 2); // failure + below-floor
    }

    #[test]
    fn balance_is_idempotent() {
        let mut docs = DocSet::new();
        let big = sized_group("Actor", 120, &mut docs);
        let small = sized_group("Carpenter", 10, &mut docs);
        let enricher = FixedEnricher { pages: 50 };
        let (once, _) =
            balance_groups(vec![big, small], &mut docs, 20, 100, &enricher).unwrap();
        let (twice, report) =
            balance_groups(once.clone(), &mut docs, 20, 100, &enricher).unwrap();
        assert_eq!(once, twice);
        assert!(report.enriched.is_empty());
    }

    #[test]
    fn balance_rejects_floor_above_cap() {
        let mut docs = DocSet::new();
        assert!(matches!(
            balance_groups(Vec::new(), &mut docs, 10, 5, &NullEnricher),
            Err(CorpusError::InvalidBounds { .. })
        ));
    }

    #[test]
    fn dir_enricher_splits_paragraph_blocks() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("Carpenter.txt"),
            "builds with wood\nand tools\n\nsecond page text\n\n\nthird page\n",
        )
        .unwrap();
        let enricher = DirEnricher::new(dir.path());
        let pages = enricher.fetch_pages("Carpenter", 200).unwrap();
        assert_eq!(
            pages,
            vec![
                "builds with wood\nand tools".to_string(),
                "second page text".to_string(),
                "third page".to_string(),
            ]
        );
        assert_eq!(enricher.fetch_pages("Carpenter", 2).unwrap().len(), 2);
        assert!(enricher.fetch_pages("Missing", 200).is_err());
    }

    #[test]
    fn groups_partition_subjects_within_property() {
        let f = tmp_file("A\tActor\nB\tActor\nB\tSinger\nC\tSinger\nD\tDancer\n");
        let triples = load_triples(f.path(), Property::Profession).unwrap();
        let docs = doc_set(
            ["A", "B", "C", "D"]
                .iter()
                .map(|s| build_person_doc(s, &["text body".to_string()]))
                .collect(),
        );
        let groups = group_single_valued(&triples, &docs);
        let mut seen = HashSet::new();
        for g in &groups {
            for m in &g.members {
                assert!(seen.insert(m.clone()), "{m} appears in two groups");
            }
        }
    }

    proptest! {
        #[test]
        fn person_doc_tokens_are_lowercase_and_name_free(
            subject in "[A-Za-z]{1,8}( [A-Za-z]{1,8})?",
            sentences in proptest::collection::vec("[ -~]{0,60}", 0..5),
        ) {
            let doc = build_person_doc(&subject, &sentences);
            let name_tokens: HashSet<String> = subject
                .to_lowercase()
                .split_whitespace()
                .map(|t| trim_boundary_punct(t).to_string())
                .collect();
            for token in &doc.tokens {
                prop_assert!(!token.chars().any(|c| c.is_uppercase()), "uppercase in {token:?}");
                prop_assert!(!name_tokens.contains(token.as_str()), "name token {token:?} leaked");
            }
        }
    }
}
