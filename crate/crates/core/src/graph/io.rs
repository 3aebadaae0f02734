//! TSV readers and writers for triple files.
//!
//! Two layouts are supported:
//!
//! - `NameTsv`: UTF-8, one `head<TAB>relation<TAB>tail` triple per line.
//! - `IdTsv`: a leading line with the triple count N, then N lines
//!   `head tail relation`, space-separated, entity ids first and the
//!   relation id last (the common id-mapped benchmark layout).

use super::{Triple, TripleStore, Vocabulary};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripleFormat {
    NameTsv,
    IdTsv,
}

impl std::str::FromStr for TripleFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "name-tsv" | "name" => Ok(TripleFormat::NameTsv),
            "id-tsv" | "id" => Ok(TripleFormat::IdTsv),
            other => Err(format!("unknown triple format `{other}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: {kind} id {id} exceeds declared count {limit}")]
    UnknownId {
        line: usize,
        kind: &'static str,
        id: usize,
        limit: usize,
    },
    #[error("line {line}: unknown {kind} name `{name}`")]
    UnknownName {
        line: usize,
        kind: &'static str,
        name: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-load statistics worth surfacing to the caller.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadReport {
    /// Duplicate lines dropped.
    pub duplicates: usize,
    /// Lines skipped because an entity/relation was not in the vocabulary
    /// (only in `load_triples_with_vocab` with `skip_unknown`).
    pub skipped_unknown: usize,
}

/// Load a triple file, building a fresh vocabulary.
///
/// For `IdTsv` the entity/relation counts are inferred from the largest ids
/// seen and the vocabulary carries decimal-string names.
pub fn load_triples(
    path: &Path,
    format: TripleFormat,
) -> Result<(Vocabulary, TripleStore, LoadReport), GraphError> {
    match format {
        TripleFormat::NameTsv => {
            let mut vocab = Vocabulary::new();
            let mut triples = Vec::new();
            for_each_name_line(path, |line_no, h, r, t| {
                let _ = line_no;
                triples.push(Triple::new(
                    vocab.intern_entity(h),
                    vocab.intern_relation(r),
                    vocab.intern_entity(t),
                ));
                Ok(())
            })?;
            let (store, duplicates) =
                TripleStore::from_triples(vocab.num_entities(), vocab.num_relations(), triples);
            Ok((
                vocab,
                store,
                LoadReport {
                    duplicates,
                    skipped_unknown: 0,
                },
            ))
        }
        TripleFormat::IdTsv => {
            let raw = read_id_lines(path, None)?;
            let num_entities = raw
                .iter()
                .map(|t| t.head.max(t.tail) + 1)
                .max()
                .unwrap_or(0);
            let num_relations = raw.iter().map(|t| t.relation + 1).max().unwrap_or(0);
            let vocab = Vocabulary::synthetic(num_entities, num_relations);
            let (store, duplicates) = TripleStore::from_triples(num_entities, num_relations, raw);
            Ok((
                vocab,
                store,
                LoadReport {
                    duplicates,
                    skipped_unknown: 0,
                },
            ))
        }
    }
}

/// Load a triple file against an existing vocabulary (e.g. a test split
/// against the training vocabulary).
///
/// Ids must fit the vocabulary's declared counts and names must be known;
/// with `skip_unknown` offending lines are counted and dropped instead of
/// failing the load.
pub fn load_triples_with_vocab(
    path: &Path,
    format: TripleFormat,
    vocab: &Vocabulary,
    skip_unknown: bool,
) -> Result<(TripleStore, LoadReport), GraphError> {
    let mut triples = Vec::new();
    let mut skipped = 0usize;
    match format {
        TripleFormat::NameTsv => {
            for_each_name_line(path, |line_no, h, r, t| {
                let ids = (vocab.entity_id(h), vocab.relation_id(r), vocab.entity_id(t));
                match ids {
                    (Some(h), Some(r), Some(t)) => {
                        triples.push(Triple::new(h, r, t));
                        Ok(())
                    }
                    _ if skip_unknown => {
                        skipped += 1;
                        Ok(())
                    }
                    (None, _, _) => Err(GraphError::UnknownName {
                        line: line_no,
                        kind: "entity",
                        name: h.to_string(),
                    }),
                    (_, None, _) => Err(GraphError::UnknownName {
                        line: line_no,
                        kind: "relation",
                        name: r.to_string(),
                    }),
                    (_, _, None) => Err(GraphError::UnknownName {
                        line: line_no,
                        kind: "entity",
                        name: t.to_string(),
                    }),
                }
            })?;
        }
        TripleFormat::IdTsv => {
            let limits = (vocab.num_entities(), vocab.num_relations());
            let raw = read_id_lines(path, if skip_unknown { None } else { Some(limits) })?;
            for t in raw {
                if t.head < limits.0 && t.tail < limits.0 && t.relation < limits.1 {
                    triples.push(t);
                } else {
                    skipped += 1;
                }
            }
        }
    }
    let (store, duplicates) =
        TripleStore::from_triples(vocab.num_entities(), vocab.num_relations(), triples);
    Ok((
        store,
        LoadReport {
            duplicates,
            skipped_unknown: skipped,
        },
    ))
}

/// Write a store in the given format. Output round-trips through the
/// matching loader.
pub fn write_triples(
    path: &Path,
    format: TripleFormat,
    vocab: &Vocabulary,
    store: &TripleStore,
) -> Result<(), GraphError> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        TripleFormat::NameTsv => {
            for t in store.triples() {
                writeln!(
                    out,
                    "{}\t{}\t{}",
                    vocab.entity_name(t.head),
                    vocab.relation_name(t.relation),
                    vocab.entity_name(t.tail)
                )?;
            }
        }
        TripleFormat::IdTsv => {
            writeln!(out, "{}", store.len())?;
            for t in store.triples() {
                writeln!(out, "{} {} {}", t.head, t.tail, t.relation)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn for_each_name_line<F>(path: &Path, mut f: F) -> Result<(), GraphError>
where
    F: FnMut(usize, &str, &str, &str) -> Result<(), GraphError>,
{
    let reader = BufReader::new(File::open(path)?);
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(h), Some(r), Some(t), None)
                if !h.is_empty() && !r.is_empty() && !t.is_empty() =>
            {
                f(line_no, h, r, t)?
            }
            _ => {
                return Err(GraphError::MalformedLine {
                    line: line_no,
                    reason: "expected head<TAB>relation<TAB>tail".to_string(),
                })
            }
        }
    }
    Ok(())
}

fn read_id_lines(path: &Path, limits: Option<(usize, usize)>) -> Result<Vec<Triple>, GraphError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();

    let declared = loop {
        match lines.next() {
            None => return Ok(Vec::new()), // empty file: empty store
            Some((idx, line)) => {
                let line = line?;
                if line.is_empty() {
                    continue;
                }
                break line
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| GraphError::MalformedLine {
                        line: idx + 1,
                        reason: "expected leading triple count".to_string(),
                    })?;
            }
        }
    };

    let mut out = Vec::with_capacity(declared);
    let mut last_line = 0usize;
    for (idx, line) in lines {
        let line = line?;
        let line_no = idx + 1;
        last_line = line_no;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_ascii_whitespace();
        let fields = (parts.next(), parts.next(), parts.next(), parts.next());
        let (h, t, r) = match fields {
            (Some(h), Some(t), Some(r), None) => (h, t, r),
            _ => {
                return Err(GraphError::MalformedLine {
                    line: line_no,
                    reason: "expected `head tail relation`".to_string(),
                })
            }
        };
        let parse = |s: &str| -> Result<usize, GraphError> {
            s.parse().map_err(|_| GraphError::MalformedLine {
                line: line_no,
                reason: format!("non-numeric id `{s}`"),
            })
        };
        let (h, t, r) = (parse(h)?, parse(t)?, parse(r)?);
        if let Some((max_e, max_r)) = limits {
            for (kind, id, limit) in [
                ("entity", h, max_e),
                ("entity", t, max_e),
                ("relation", r, max_r),
            ] {
                if id >= limit {
                    return Err(GraphError::UnknownId {
                        line: line_no,
                        kind,
                        id,
                        limit,
                    });
                }
            }
        }
        out.push(Triple::new(h, r, t));
        if out.len() > declared {
            return Err(GraphError::MalformedLine {
                line: line_no,
                reason: format!("more than the declared {declared} triples"),
            });
        }
    }
    if out.len() < declared {
        return Err(GraphError::MalformedLine {
            line: last_line + 1,
            reason: format!("declared {declared} triples, found {}", out.len()),
        });
    }
    Ok(out)
}
