//! Triple and graph data model, plus the tab-separated knowledge-graph file format.
//!
//! A KG file holds one `subject<TAB>relation<TAB>object` record per line. Blank
//! lines and lines starting with `#` are skipped. Duplicates collapse onto their
//! first occurrence.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KgError {
    #[error("line {line}: expected 3 tab-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: {source}")]
    InvalidTriple {
        line: usize,
        #[source]
        source: TripleError,
    },
    #[error("line {line}: invalid UTF-8")]
    Encoding { line: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TripleError {
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("{0} contains a tab or newline")]
    ReservedChar(&'static str),
}

/// An atomic fact: subject, relation, object.
///
/// Fields are trimmed on construction and are never empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawTriple")]
pub struct Triple {
    subject: String,
    relation: String,
    object: String,
}

#[derive(Deserialize)]
struct RawTriple {
    subject: String,
    relation: String,
    object: String,
}

impl TryFrom<RawTriple> for Triple {
    type Error = TripleError;

    fn try_from(raw: RawTriple) -> Result<Self, Self::Error> {
        Triple::new(raw.subject, raw.relation, raw.object)
    }
}

fn check_field(role: &'static str, value: &str) -> Result<String, TripleError> {
    let trimmed = value.trim();
    if trimmed.is_empty() {
        return Err(TripleError::Empty(role));
    }
    if trimmed.contains(['\t', '\n', '\r']) {
        return Err(TripleError::ReservedChar(role));
    }
    Ok(trimmed.to_string())
}

impl Triple {
    pub fn new(
        subject: impl AsRef<str>,
        relation: impl AsRef<str>,
        object: impl AsRef<str>,
    ) -> Result<Self, TripleError> {
        Ok(Self {
            subject: check_field("subject", subject.as_ref())?,
            relation: check_field("relation", relation.as_ref())?,
            object: check_field("object", object.as_ref())?,
        })
    }

    pub fn subject(&self) -> &str {
        &self.subject
    }

    pub fn relation(&self) -> &str {
        &self.relation
    }

    pub fn object(&self) -> &str {
        &self.object
    }

    /// Prompt line form: `subject | relation | object`.
    pub fn to_line(&self) -> String {
        format!("{} | {} | {}", self.subject, self.relation, self.object)
    }

    /// Parses one `s | r | o` line. Returns `None` unless the line has exactly
    /// three non-empty pipe-separated fields.
    pub fn from_line(line: &str) -> Option<Triple> {
        let parts: Vec<&str> = line.split('|').collect();
        if parts.len() != 3 {
            return None;
        }
        Triple::new(parts[0], parts[1], parts[2]).ok()
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.subject, self.relation, self.object)
    }
}

/// Pipeline stage a graph belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Loaded from a KG file or built by hand.
    #[default]
    Source,
    Pseudo,
    GroundTruth,
    Fixed,
}

/// An ordered, duplicate-free set of triples.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(from = "RawGraph", into = "RawGraph")]
pub struct Graph {
    stage: Stage,
    triples: Vec<Triple>,
    seen: HashSet<Triple>,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    stage: Stage,
    triples: Vec<Triple>,
}

impl From<RawGraph> for Graph {
    fn from(raw: RawGraph) -> Self {
        Graph::from_triples(raw.stage, raw.triples)
    }
}

impl From<Graph> for RawGraph {
    fn from(g: Graph) -> Self {
        RawGraph {
            stage: g.stage,
            triples: g.triples,
        }
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.stage == other.stage && self.triples == other.triples
    }
}

impl Eq for Graph {}

impl Graph {
    pub fn new(stage: Stage) -> Self {
        Self {
            stage,
            ..Self::default()
        }
    }

    pub fn from_triples(stage: Stage, triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut g = Graph::new(stage);
        for t in triples {
            g.insert(t);
        }
        g
    }

    /// Appends `t` unless an identical triple is already present.
    pub fn insert(&mut self, t: Triple) -> bool {
        if self.seen.contains(&t) {
            return false;
        }
        self.seen.insert(t.clone());
        self.triples.push(t);
        true
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn with_stage(mut self, stage: Stage) -> Self {
        self.stage = stage;
        self
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Triple> {
        self.triples.iter()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.seen.contains(t)
    }

    /// Distinct subject labels.
    pub fn subjects(&self) -> BTreeSet<String> {
        self.triples.iter().map(|t| t.subject.clone()).collect()
    }

    /// Union of `self` then `other`, keeping first occurrences. The result
    /// carries `self`'s stage.
    pub fn merge(&self, other: &Graph) -> Graph {
        let mut out = self.clone();
        for t in &other.triples {
            out.insert(t.clone());
        }
        out
    }

    /// One `s | r | o` line per triple, newline-terminated.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            out.push_str(&t.to_line());
            out.push('\n');
        }
        out
    }

    /// Collects every well-formed `s | r | o` line from free text. Leading
    /// list markers (`-`, `*`, `1.`) are ignored; other lines are skipped.
    pub fn from_lines(stage: Stage, text: &str) -> Graph {
        let mut g = Graph::new(stage);
        for line in text.lines() {
            if let Some(t) = Triple::from_line(strip_list_marker(line.trim())) {
                g.insert(t);
            }
        }
        g
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for t in &self.triples {
            writeln!(w, "{}\t{}\t{}", t.subject, t.relation, t.object)?;
        }
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("triples are valid UTF-8")
    }
}

impl<'a> IntoIterator for &'a Graph {
    type Item = &'a Triple;
    type IntoIter = std::slice::Iter<'a, Triple>;

    fn into_iter(self) -> Self::IntoIter {
        self.triples.iter()
    }
}

fn strip_list_marker(line: &str) -> &str {
    if let Some(rest) = line.strip_prefix("- ").or_else(|| line.strip_prefix("* ")) {
        return rest;
    }
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    if digits > 0 {
        if let Some(rest) = line[digits..].strip_prefix(". ") {
            return rest;
        }
    }
    line
}

/// Reads a tab-separated KG file into a source-stage graph.
pub fn parse_triple_file<R: BufRead>(mut reader: R) -> Result<Graph, KgError> {
    let mut g = Graph::new(Stage::Source);
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let line = std::str::from_utf8(&buf).map_err(|_| KgError::Encoding { line: line_no })?;
        let line = line.trim_end_matches(['\n', '\r']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(KgError::FieldCount {
                line: line_no,
                found: fields.len(),
            });
        }
        let t = Triple::new(fields[0], fields[1], fields[2])
            .map_err(|source| KgError::InvalidTriple { line: line_no, source })?;
        g.insert(t);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str, r: &str, o: &str) -> Triple {
        Triple::new(s, r, o).unwrap()
    }

    #[test]
    fn single_record() {
        let g = parse_triple_file("Berlin\tcapital of\tGermany\n".as_bytes()).unwrap();
        assert_eq!(g.triples(), &[t("Berlin", "capital of", "Germany")]);
    }

    #[test]
    fn exact_duplicates_collapse() {
        let g = parse_triple_file("a\tb\tc\na\tb\tc\n".as_bytes()).unwrap();
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let src = "# header\n\n  \nx\ty\tz\r\n# trailing\n";
        let g = parse_triple_file(src.as_bytes()).unwrap();
        assert_eq!(g.triples(), &[t("x", "y", "z")]);
    }

    #[test]
    fn field_count_error_names_line() {
        let err = parse_triple_file("a\tb\tc\n\na\tb\n".as_bytes()).unwrap_err();
        assert!(matches!(err, KgError::FieldCount { line: 3, found: 2 }), "{err}");
        assert!(err.to_string().starts_with("line 3:"));
    }

    #[test]
    fn invalid_utf8_is_encoding_error() {
        let bytes = b"a\tb\tc\n\xff\xfe\tb\tc\n";
        let err = parse_triple_file(&bytes[..]).unwrap_err();
        assert!(matches!(err, KgError::Encoding { line: 2 }));
    }

    #[test]
    fn empty_field_rejected() {
        let err = parse_triple_file("a\t \tc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, KgError::InvalidTriple { line: 1, .. }));
    }

    #[test]
    fn triple_fields_are_trimmed_and_case_sensitive() {
        assert_eq!(
            t(" Berlin ", "capital of", "Germany"),
            t("Berlin", "capital of", "Germany")
        );
        assert_ne!(
            t("berlin", "capital of", "Germany"),
            t("Berlin", "capital of", "Germany")
        );
        assert_eq!(Triple::new("a\tb", "r", "o"), Err(TripleError::ReservedChar("subject")));
        assert_eq!(Triple::new("a", "", "o"), Err(TripleError::Empty("relation")));
    }

    #[test]
    fn subjects_of_empty_and_repeated() {
        assert!(Graph::default().subjects().is_empty());
        let g = Graph::from_triples(Stage::Source, [t("a", "r", "b"), t("a", "q", "c")]);
        assert_eq!(g.subjects().into_iter().collect::<Vec<_>>(), vec!["a".to_string()]);
    }

    #[test]
    fn merge_identity_and_idempotence() {
        let g = Graph::from_triples(Stage::Pseudo, [t("a", "r", "b"), t("c", "r", "d")]);
        assert_eq!(g.merge(&Graph::new(Stage::Source)), g);
        assert_eq!(g.merge(&g), g);
    }

    #[test]
    fn merge_keeps_left_order_first() {
        let a = Graph::from_triples(Stage::GroundTruth, [t("1", "r", "x"), t("2", "r", "x")]);
        let b = Graph::from_triples(Stage::Pseudo, [t("3", "r", "x"), t("1", "r", "x")]);
        let m = a.merge(&b);
        assert_eq!(m.stage(), Stage::GroundTruth);
        let subjects: Vec<_> = m.iter().map(|t| t.subject()).collect();
        assert_eq!(subjects, ["1", "2", "3"]);
    }

    #[test]
    fn line_format_tolerates_prose_and_markers() {
        let text = "Here is the fixed graph:\n- Alan Turing | field of work | Computer Science\n\
                    2. Alan Turing | born in | London\nnot | a triple\n| | |\nDone.";
        let g = Graph::from_lines(Stage::Fixed, text);
        assert_eq!(
            g.triples(),
            &[
                t("Alan Turing", "field of work", "Computer Science"),
                t("Alan Turing", "born in", "London")
            ]
        );
        assert_eq!(Graph::from_lines(Stage::Fixed, &g.to_lines()), g);
    }

    #[test]
    fn json_roundtrip_rejects_invalid_triples() {
        let g = Graph::from_triples(Stage::Fixed, [t("a", "r", "b")]);
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(
            json,
            r#"{"stage":"fixed","triples":[{"subject":"a","relation":"r","object":"b"}]}"#
        );
        assert_eq!(serde_json::from_str::<Graph>(&json).unwrap(), g);
        let bad = r#"{"subject":" ","relation":"r","object":"b"}"#;
        assert!(serde_json::from_str::<Triple>(bad).is_err());
    }
}
