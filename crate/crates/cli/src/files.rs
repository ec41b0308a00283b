//! On-disk layout of a prepared corpus directory.
//!
//! `prepare` writes, `train` and `score` read:
//!   docs.tsv        subject, source sentence count, space-joined tokens
//!   groups.tsv      value, property, enriched flag, member subject (one line
//!                   per member; a trailing empty member field keeps a group
//!                   with no usable members visible downstream)
//!   candidates.tsv  subject, candidate value, for multi-valued subjects
//!
//! All files are tab-separated. Subjects and values came from tab-separated
//! inputs so they never contain tabs themselves; tokens never contain
//! whitespace at all.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use triplerank::corpus::DocSet;
use triplerank::{PersonDoc, Property, ValueGroup};

use crate::CliError;

pub const DOCS_FILE: &str = "docs.tsv";
pub const GROUPS_FILE: &str = "groups.tsv";
pub const CANDIDATES_FILE: &str = "candidates.tsv";
pub const BALANCE_REPORT_FILE: &str = "balance_report.txt";

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn malformed(path: &Path, line: usize, reason: impl Into<String>) -> CliError {
    CliError::Malformed {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, CliError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut lines = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| io_err(path, e))?;
        lines.push(line.trim_end_matches('\r').to_string());
    }
    Ok(lines)
}

pub fn write_docs(dir: &Path, docs: &[PersonDoc]) -> Result<(), CliError> {
    let path = dir.join(DOCS_FILE);
    let mut out = String::new();
    for d in docs {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            d.subject,
            d.source_sentence_count,
            d.tokens.join(" ")
        ));
    }
    fs::write(&path, out).map_err(|e| io_err(&path, e))
}

pub fn read_docs(dir: &Path) -> Result<DocSet, CliError> {
    let path = dir.join(DOCS_FILE);
    let mut set = DocSet::new();
    for (idx, line) in read_lines(&path)?.into_iter().enumerate() {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(malformed(
                &path,
                lineno,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let count: usize = fields[1].parse().map_err(|e| {
            malformed(&path, lineno, format!("bad sentence count {:?}: {e}", fields[1]))
        })?;
        let tokens: Vec<String> = if fields[2].is_empty() {
            Vec::new()
        } else {
            fields[2].split(' ').map(str::to_string).collect()
        };
        set.insert(PersonDoc {
            subject: fields[0].to_string(),
            tokens,
            source_sentence_count: count,
        })
        .map_err(|e| malformed(&path, lineno, e.to_string()))?;
    }
    Ok(set)
}

pub fn write_groups(dir: &Path, groups: &[ValueGroup]) -> Result<(), CliError> {
    let path = dir.join(GROUPS_FILE);
    let mut out = String::new();
    for g in groups {
        let enriched = u8::from(g.enriched);
        if g.members.is_empty() {
            out.push_str(&format!("{}\t{}\t{enriched}\t\n", g.value, g.property));
        }
        for m in &g.members {
            out.push_str(&format!("{}\t{}\t{enriched}\t{m}\n", g.value, g.property));
        }
    }
    fs::write(&path, out).map_err(|e| io_err(&path, e))
}

pub fn read_groups(dir: &Path) -> Result<Vec<ValueGroup>, CliError> {
    let path = dir.join(GROUPS_FILE);
    let mut groups: Vec<ValueGroup> = Vec::new();
    let mut index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    for (idx, line) in read_lines(&path)?.into_iter().enumerate() {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(malformed(
                &path,
                lineno,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let property: Property = fields[1]
            .parse()
            .map_err(|e: triplerank::corpus::CorpusError| malformed(&path, lineno, e.to_string()))?;
        let enriched = match fields[2] {
            "0" => false,
            "1" => true,
            other => {
                return Err(malformed(&path, lineno, format!("bad enriched flag {other:?}")))
            }
        };
        let gi = match index.get(fields[0]) {
            Some(&gi) => {
                let g = &groups[gi];
                if g.property != property || g.enriched != enriched {
                    return Err(malformed(
                        &path,
                        lineno,
                        format!("group {:?} changes property or enriched flag", fields[0]),
                    ));
                }
                gi
            }
            None => {
                index.insert(fields[0].to_string(), groups.len());
                groups.push(ValueGroup {
                    value: fields[0].to_string(),
                    property,
                    members: Vec::new(),
                    enriched,
                });
                groups.len() - 1
            }
        };
        if !fields[3].is_empty() {
            groups[gi].members.push(fields[3].to_string());
        }
    }
    Ok(groups)
}

pub fn write_candidates(dir: &Path, candidates: &[(String, Vec<String>)]) -> Result<(), CliError> {
    let path = dir.join(CANDIDATES_FILE);
    let mut out = String::new();
    for (subject, values) in candidates {
        for v in values {
            out.push_str(&format!("{subject}\t{v}\n"));
        }
    }
    fs::write(&path, out).map_err(|e| io_err(&path, e))
}

/// Candidate values grouped by subject, both in first-seen file order.
pub fn read_candidates(dir: &Path) -> Result<Vec<(String, Vec<String>)>, CliError> {
    let path = dir.join(CANDIDATES_FILE);
    let mut out: Vec<(String, Vec<String>)> = Vec::new();
    let mut index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    for (idx, line) in read_lines(&path)?.into_iter().enumerate() {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 || fields[0].is_empty() || fields[1].is_empty() {
            return Err(malformed(&path, lineno, "expected subject<TAB>value"));
        }
        let i = *index.entry(fields[0].to_string()).or_insert_with(|| {
            out.push((fields[0].to_string(), Vec::new()));
            out.len() - 1
        });
        out[i].1.push(fields[1].to_string());
    }
    Ok(out)
}
