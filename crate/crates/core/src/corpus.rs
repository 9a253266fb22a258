//! Document model and external file formats.
//!
//! Three file kinds cross the boundary of the parser:
//!
//! * **Documents**: pre-parsed text as JSON, one document per file, with
//!   tokens, POS tags, sentence boundaries, paragraph numbers, a bracketed
//!   constituent tree, and a dependency graph per sentence.
//! * **Relation files**: JSON arrays of discourse relations (gold
//!   annotations and parser output share the schema).
//! * **Connective lexicons**: tab-separated text listing connective
//!   surfaces and their categories.
//!
//! Readers validate everything on the way in so the rest of the crate can
//! assume well-formed structures: token indices in range, sentence ranges
//! adjacent, trees matching the token stream, dependency graphs tree-shaped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{ConstTree, DepGraph};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("document {doc}: {message}")]
    Document { doc: String, message: String },
    #[error("relation {index}: {message}")]
    Relation { index: usize, message: String },
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
}

fn doc_err(doc: &str, message: impl Into<String>) -> CorpusError {
    CorpusError::Document {
        doc: doc.to_string(),
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// Tokens, sentences, documents
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Token {
    pub index: usize,
    pub text: String,
    pub pos: String,
    pub sentence: usize,
}

/// Punctuation POS tags, as used when trimming argument spans and picking
/// first/last content words.
pub fn is_punct_pos(pos: &str) -> bool {
    matches!(pos, "." | "," | ":" | "``" | "''" | "-LRB-" | "-RRB-")
}

#[derive(Debug, Clone)]
pub struct Sentence {
    pub index: usize,
    /// Document token range, inclusive on both ends.
    pub start: usize,
    pub end: usize,
    pub paragraph: usize,
    pub tree: ConstTree,
    pub deps: DepGraph,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false // a valid sentence always covers at least one token
    }

    pub fn token_range(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

#[derive(Debug, Clone)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<Token>,
    pub sentences: Vec<Sentence>,
}

impl Document {
    pub fn sentence_of(&self, token: usize) -> usize {
        self.tokens[token].sentence
    }

    pub fn sentence(&self, index: usize) -> &Sentence {
        &self.sentences[index]
    }

    pub fn token(&self, index: usize) -> &Token {
        &self.tokens[index]
    }

    /// Lowercased token text.
    pub fn word_lower(&self, index: usize) -> String {
        self.tokens[index].text.to_lowercase()
    }
}

// ---------------------------------------------------------------------------
// Token spans
// ---------------------------------------------------------------------------

/// A non-empty set of document token indices, kept sorted and deduplicated.
/// Spans may be discontiguous (argument spans with material carved out).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenSpan(Vec<usize>);

impl TokenSpan {
    /// Builds a span from any iterator of indices; returns `None` when the
    /// iterator is empty. Input order does not matter.
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Option<TokenSpan> {
        let set: BTreeSet<usize> = indices.into_iter().collect();
        if set.is_empty() {
            None
        } else {
            Some(TokenSpan(set.into_iter().collect()))
        }
    }

    pub fn contiguous(start: usize, end: usize) -> Option<TokenSpan> {
        if start > end {
            None
        } else {
            Some(TokenSpan((start..=end).collect()))
        }
    }

    pub fn single(index: usize) -> TokenSpan {
        TokenSpan(vec![index])
    }

    pub fn first(&self) -> usize {
        self.0[0]
    }

    pub fn last(&self) -> usize {
        *self.0.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    pub fn overlaps(&self, other: &TokenSpan) -> bool {
        // Spans are tiny (a sentence at most); a scan with binary search
        // on the other side is plenty.
        self.iter().any(|i| other.contains(i))
    }

    pub fn is_contiguous(&self) -> bool {
        self.last() - self.first() + 1 == self.len()
    }

    /// Indices present in `self` but not in `other`; `None` when nothing
    /// remains.
    pub fn minus(&self, other: &TokenSpan) -> Option<TokenSpan> {
        TokenSpan::new(self.iter().filter(|&i| !other.contains(i)))
    }

    /// Lowercased texts of the span's tokens joined by single spaces.
    pub fn surface_lower(&self, doc: &Document) -> String {
        self.words(doc).to_lowercase()
    }

    /// Original-case texts of the span's tokens joined by single spaces.
    pub fn words(&self, doc: &Document) -> String {
        let mut out = String::new();
        for (n, i) in self.iter().enumerate() {
            if n > 0 {
                out.push(' ');
            }
            out.push_str(&doc.tokens[i].text);
        }
        out
    }
}

impl Serialize for TokenSpan {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TokenSpan {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = Vec::<usize>::deserialize(deserializer)?;
        TokenSpan::new(raw).ok_or_else(|| serde::de::Error::custom("token span must be non-empty"))
    }
}

// ---------------------------------------------------------------------------
// Senses and relations
// ---------------------------------------------------------------------------

/// Top-level sense classes, in the fixed tie-break order used by the sense
/// classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SenseClass {
    Comparison,
    Contingency,
    Expansion,
    Temporal,
}

impl SenseClass {
    pub const ALL: [SenseClass; 4] = [
        SenseClass::Comparison,
        SenseClass::Contingency,
        SenseClass::Expansion,
        SenseClass::Temporal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SenseClass::Comparison => "Comparison",
            SenseClass::Contingency => "Contingency",
            SenseClass::Expansion => "Expansion",
            SenseClass::Temporal => "Temporal",
        }
    }
}

impl fmt::Display for SenseClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SenseClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Comparison" => Ok(SenseClass::Comparison),
            "Contingency" => Ok(SenseClass::Contingency),
            "Expansion" => Ok(SenseClass::Expansion),
            "Temporal" => Ok(SenseClass::Temporal),
            other => Err(format!("unknown sense class {other:?}")),
        }
    }
}

/// A sense annotation: mandatory class, optional finer type and subtype,
/// written as a slash path like `Temporal/Asynchronous/precedence`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SenseLabel {
    pub class: SenseClass,
    pub subtype: Vec<String>,
}

impl SenseLabel {
    pub fn class_only(class: SenseClass) -> SenseLabel {
        SenseLabel {
            class,
            subtype: Vec::new(),
        }
    }
}

impl fmt::Display for SenseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.class)?;
        for part in &self.subtype {
            write!(f, "/{part}")?;
        }
        Ok(())
    }
}

impl FromStr for SenseLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split('/');
        let class: SenseClass = parts.next().unwrap_or("").parse()?;
        let subtype: Vec<String> = parts.map(str::to_string).collect();
        if subtype.len() > 2 {
            return Err(format!("sense path {s:?} has more than three levels"));
        }
        if subtype.iter().any(|p| p.is_empty()) {
            return Err(format!("sense path {s:?} has an empty level"));
        }
        Ok(SenseLabel { class, subtype })
    }
}

impl Serialize for SenseLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SenseLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationType {
    Explicit,
    Implicit,
    AltLex,
    EntRel,
    NoRel,
}

impl RelationType {
    /// Relation types anchored on a connective span in the text.
    pub fn has_connective(self) -> bool {
        matches!(self, RelationType::Explicit | RelationType::AltLex)
    }

    /// Relation types that never carry a sense.
    pub fn senseless(self) -> bool {
        matches!(self, RelationType::EntRel | RelationType::NoRel)
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RelationType::Explicit => "Explicit",
            RelationType::Implicit => "Implicit",
            RelationType::AltLex => "AltLex",
            RelationType::EntRel => "EntRel",
            RelationType::NoRel => "NoRel",
        };
        f.write_str(s)
    }
}

/// One discourse relation: two argument spans, an optional connective
/// anchor, and an optional sense.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscourseRelation {
    pub relation_type: RelationType,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub connective_span: Option<TokenSpan>,
    pub arg1: TokenSpan,
    pub arg2: TokenSpan,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sense: Option<SenseLabel>,
}

impl DiscourseRelation {
    /// Structural checks that do not need the document: connective presence
    /// matches the relation type, senses appear where they may, spans are
    /// pairwise disjoint, and non-explicit arguments come in text order.
    pub fn check_shape(&self) -> Result<(), String> {
        match (self.relation_type.has_connective(), &self.connective_span) {
            (true, None) => {
                return Err(format!(
                    "{} relation is missing its connective span",
                    self.relation_type
                ))
            }
            (false, Some(_)) => {
                return Err(format!(
                    "{} relation must not carry a connective span",
                    self.relation_type
                ))
            }
            _ => {}
        }
        if self.relation_type == RelationType::Explicit && self.sense.is_none() {
            return Err("Explicit relation is missing its sense".to_string());
        }
        if self.relation_type.senseless() && self.sense.is_some() {
            return Err(format!(
                "{} relation must not carry a sense",
                self.relation_type
            ));
        }
        if self.arg1.overlaps(&self.arg2) {
            return Err("arg1 and arg2 overlap".to_string());
        }
        if let Some(conn) = &self.connective_span {
            if self.arg1.overlaps(conn) || self.arg2.overlaps(conn) {
                return Err("argument span overlaps the connective".to_string());
            }
        }
        if self.relation_type != RelationType::Explicit && self.arg1.last() >= self.arg2.first() {
            return Err(format!(
                "{} relation must have arg1 entirely before arg2",
                self.relation_type
            ));
        }
        Ok(())
    }

    fn check_in_range(&self, token_count: usize) -> Result<(), String> {
        let spans = [
            Some(&self.arg1),
            Some(&self.arg2),
            self.connective_span.as_ref(),
        ];
        for span in spans.into_iter().flatten() {
            if span.last() >= token_count {
                return Err(format!(
                    "span index {} exceeds document length {}",
                    span.last(),
                    token_count
                ));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Connective lexicon
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConnectiveCategory {
    Subordinating,
    Coordinating,
    Adverbial,
}

impl ConnectiveCategory {
    pub fn name(self) -> &'static str {
        match self {
            ConnectiveCategory::Subordinating => "Subordinating",
            ConnectiveCategory::Coordinating => "Coordinating",
            ConnectiveCategory::Adverbial => "Adverbial",
        }
    }
}

impl fmt::Display for ConnectiveCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConnectiveCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Subordinating" => Ok(ConnectiveCategory::Subordinating),
            "Coordinating" => Ok(ConnectiveCategory::Coordinating),
            "Adverbial" => Ok(ConnectiveCategory::Adverbial),
            other => Err(format!("unknown connective category {other:?}")),
        }
    }
}

/// One lexicon entry: a lowercased surface (one or more words) and its
/// syntactic category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectiveLexiconEntry {
    pub words: Vec<String>,
    pub category: ConnectiveCategory,
}

impl ConnectiveLexiconEntry {
    pub fn surface(&self) -> String {
        self.words.join(" ")
    }
}

/// Parses a lexicon: one `surface<TAB>Category` entry per line, `#` starts
/// a comment line, blank lines are skipped. Surfaces are lowercased and
/// must be unique.
pub fn read_lexicon(text: &str) -> Result<Vec<ConnectiveLexiconEntry>, CorpusError> {
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| CorpusError::Lexicon {
            line: lineno + 1,
            message,
        };
        let (surface, category) = line
            .split_once('\t')
            .ok_or_else(|| err("expected `surface<TAB>Category`".to_string()))?;
        let words: Vec<String> = surface
            .split_whitespace()
            .map(|w| w.to_lowercase())
            .collect();
        if words.is_empty() {
            return Err(err("empty connective surface".to_string()));
        }
        let category: ConnectiveCategory =
            category.trim().parse().map_err(|e: String| err(e))?;
        if !seen.insert(words.join(" ")) {
            return Err(err(format!("duplicate surface {:?}", words.join(" "))));
        }
        entries.push(ConnectiveLexiconEntry { words, category });
    }
    Ok(entries)
}

/// Renders a lexicon in the same format `read_lexicon` accepts.
pub fn write_lexicon(entries: &[ConnectiveLexiconEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&e.surface());
        out.push('\t');
        out.push_str(&e.category.to_string());
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Document JSON
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct DocWire {
    id: String,
    tokens: Vec<TokenWire>,
    sentences: Vec<SentenceWire>,
}

#[derive(Serialize, Deserialize)]
struct TokenWire {
    t: String,
    pos: String,
}

#[derive(Serialize, Deserialize)]
struct SentenceWire {
    start: usize,
    end: usize,
    paragraph: usize,
    #[serde(rename = "const")]
    tree: String,
    /// `[head, dependent, label]` triples; the sentence root has head -1.
    deps: Vec<(i64, i64, String)>,
}

/// Parses and validates one document from JSON.
pub fn read_document(json: &str) -> Result<Document, CorpusError> {
    let wire: DocWire = serde_json::from_str(json)?;
    let id = wire.id;
    if wire.tokens.is_empty() {
        return Err(doc_err(&id, "document has no tokens"));
    }
    if wire.sentences.is_empty() {
        return Err(doc_err(&id, "document has no sentences"));
    }

    let mut tokens: Vec<Token> = wire
        .tokens
        .into_iter()
        .enumerate()
        .map(|(index, t)| Token {
            index,
            text: t.t,
            pos: t.pos,
            sentence: usize::MAX,
        })
        .collect();

    let mut sentences = Vec::with_capacity(wire.sentences.len());
    let mut expected_start = 0usize;
    let mut last_paragraph = 0usize;
    for (index, sent) in wire.sentences.into_iter().enumerate() {
        if sent.start != expected_start {
            return Err(doc_err(
                &id,
                format!(
                    "sentence {index} starts at {} but the previous one ended at {}",
                    sent.start,
                    expected_start as i64 - 1
                ),
            ));
        }
        if sent.end < sent.start || sent.end >= tokens.len() {
            return Err(doc_err(
                &id,
                format!("sentence {index} has invalid range {}..={}", sent.start, sent.end),
            ));
        }
        if index > 0 && sent.paragraph < last_paragraph {
            return Err(doc_err(
                &id,
                format!("sentence {index} decreases the paragraph index"),
            ));
        }
        expected_start = sent.end + 1;
        last_paragraph = sent.paragraph;
        for tok in &mut tokens[sent.start..=sent.end] {
            tok.sentence = index;
        }

        let tree = ConstTree::parse(&sent.tree, sent.start)
            .map_err(|e| doc_err(&id, format!("sentence {index}: {e}")))?;
        let sentence_len = sent.end - sent.start + 1;
        if tree.leaf_count() != sentence_len {
            return Err(doc_err(
                &id,
                format!(
                    "sentence {index}: tree has {} leaves for {} tokens",
                    tree.leaf_count(),
                    sentence_len
                ),
            ));
        }
        // The index is the document-wide token number, not a slice offset.
        #[allow(clippy::needless_range_loop)]
        for tok_index in sent.start..=sent.end {
            let pt = tree
                .preterminal_of(tok_index)
                .expect("leaf count was checked");
            let node = tree.node(pt);
            let token = &tokens[tok_index];
            if node.word.as_deref() != Some(token.text.as_str()) {
                return Err(doc_err(
                    &id,
                    format!(
                        "sentence {index}: tree leaf {:?} does not match token {tok_index} {:?}",
                        node.word.as_deref().unwrap_or(""),
                        token.text
                    ),
                ));
            }
            if node.label != token.pos {
                return Err(doc_err(
                    &id,
                    format!(
                        "sentence {index}: preterminal {:?} does not match POS {:?} of token {tok_index}",
                        node.label, token.pos
                    ),
                ));
            }
        }

        let deps = build_dep_graph(&id, index, sent.start, sent.end, &sent.deps)?;
        sentences.push(Sentence {
            index,
            start: sent.start,
            end: sent.end,
            paragraph: sent.paragraph,
            tree,
            deps,
        });
    }
    if expected_start != tokens.len() {
        return Err(doc_err(
            &id,
            format!(
                "sentences cover tokens up to {} but the document has {}",
                expected_start as i64 - 1,
                tokens.len()
            ),
        ));
    }

    Ok(Document {
        id,
        tokens,
        sentences,
    })
}

fn build_dep_graph(
    id: &str,
    sentence: usize,
    start: usize,
    end: usize,
    arcs: &[(i64, i64, String)],
) -> Result<DepGraph, CorpusError> {
    let mut head: BTreeMap<usize, (usize, String)> = BTreeMap::new();
    let mut root: Option<usize> = None;
    let in_range = |i: i64| i >= start as i64 && i <= end as i64;
    for &(h, d, ref label) in arcs {
        if !in_range(d) {
            return Err(doc_err(
                id,
                format!("sentence {sentence}: dependent {d} outside token range"),
            ));
        }
        let d = d as usize;
        if h == -1 {
            if let Some(prev) = root {
                return Err(doc_err(
                    id,
                    format!("sentence {sentence}: multiple roots ({prev} and {d})"),
                ));
            }
            if head.contains_key(&d) {
                return Err(doc_err(
                    id,
                    format!("sentence {sentence}: token {d} has multiple dependency heads"),
                ));
            }
            root = Some(d);
            continue;
        }
        if !in_range(h) {
            return Err(doc_err(
                id,
                format!("sentence {sentence}: head {h} outside token range"),
            ));
        }
        if root == Some(d) || head.insert(d, (h as usize, label.clone())).is_some() {
            return Err(doc_err(
                id,
                format!("sentence {sentence}: token {d} has multiple dependency heads"),
            ));
        }
    }
    let root = root.ok_or_else(|| doc_err(id, format!("sentence {sentence}: no root arc")))?;
    let expected = end - start + 1;
    if head.len() + 1 != expected {
        return Err(doc_err(
            id,
            format!(
                "sentence {sentence}: {} tokens have heads but the sentence has {expected}",
                head.len() + 1
            ),
        ));
    }
    DepGraph::new(root, head).map_err(|e| doc_err(id, format!("sentence {sentence}: {e}")))
}

/// Renders a document back to the JSON format `read_document` accepts.
pub fn write_document(doc: &Document) -> String {
    let wire = DocWire {
        id: doc.id.clone(),
        tokens: doc
            .tokens
            .iter()
            .map(|t| TokenWire {
                t: t.text.clone(),
                pos: t.pos.clone(),
            })
            .collect(),
        sentences: doc
            .sentences
            .iter()
            .map(|s| {
                let mut deps: Vec<(i64, i64, String)> = vec![(-1, s.deps.root() as i64, "root".to_string())];
                deps.extend(
                    s.deps
                        .arcs()
                        .map(|(h, d, l)| (h as i64, d as i64, l.to_string())),
                );
                deps.sort_by_key(|&(_, d, _)| d);
                SentenceWire {
                    start: s.start,
                    end: s.end,
                    paragraph: s.paragraph,
                    tree: s.tree.render(),
                    deps,
                }
            })
            .collect(),
    };
    serde_json::to_string_pretty(&wire).expect("document serialization cannot fail")
}

// ---------------------------------------------------------------------------
// Relation JSON
// ---------------------------------------------------------------------------

/// Parses a relation file and validates every relation against the
/// document it annotates.
pub fn read_relations(json: &str, doc: &Document) -> Result<Vec<DiscourseRelation>, CorpusError> {
    let relations: Vec<DiscourseRelation> = serde_json::from_str(json)?;
    for (index, rel) in relations.iter().enumerate() {
        rel.check_in_range(doc.tokens.len())
            .and_then(|_| rel.check_shape())
            .map_err(|message| CorpusError::Relation { index, message })?;
    }
    Ok(relations)
}

/// Parses a relation file with shape checks only. Scoring works from
/// relation files alone, without the documents they annotate, so token
/// ranges cannot be verified here.
pub fn read_relations_standalone(json: &str) -> Result<Vec<DiscourseRelation>, CorpusError> {
    let relations: Vec<DiscourseRelation> = serde_json::from_str(json)?;
    for (index, rel) in relations.iter().enumerate() {
        rel.check_shape()
            .map_err(|message| CorpusError::Relation { index, message })?;
    }
    Ok(relations)
}

/// Renders relations as a JSON array. Keys appear in a fixed order
/// (`relation_type`, `connective_span`, `arg1`, `arg2`, `sense`) and spans
/// as sorted index arrays, so output is byte-stable for identical input.
pub fn write_relations(relations: &[DiscourseRelation]) -> String {
    let mut out =
        serde_json::to_string_pretty(relations).expect("relation serialization cannot fail");
    out.push('\n');
    out
}
