//! Stage 1: find connective candidates and decide which are discourse usages.
//!
//! A lexicon scan proposes every within-sentence match of a connective
//! surface ("because", "as long as", ...). Most matches are not discourse
//! connectives ("after" in "after Christmas"), so a classifier over
//! syntactic context features keeps only the real ones.

use std::collections::HashSet;

use crate::corpus::{
    ConnectiveLexiconEntry, DiscourseRelation, Document, RelationType, TokenSpan,
};
use crate::maxent::{FeatureVector, LabeledInstance, MaxentModel};
use crate::syntax::{self, NONE_LABEL};

/// Classifier label for discourse usages.
pub const DISCOURSE: &str = "discourse";
/// Classifier label for non-discourse usages.
pub const NON_DISCOURSE: &str = "non-discourse";

/// A lexicon match: a contiguous run of tokens inside one sentence whose
/// lowercased text equals the entry's surface.
#[derive(Debug, Clone)]
pub struct ConnectiveCandidate {
    pub span: TokenSpan,
    pub entry: ConnectiveLexiconEntry,
    pub sentence: usize,
}

impl ConnectiveCandidate {
    /// Original-case surface text of the matched tokens.
    pub fn text(&self, doc: &Document) -> String {
        self.span.words(doc)
    }
}

/// Scans every sentence for lexicon matches, case-insensitively. Longer
/// matches win: once a match is accepted, shorter or later matches using
/// any of its tokens are suppressed. Output is sorted by span start.
pub fn scan_candidates(
    doc: &Document,
    lexicon: &[ConnectiveLexiconEntry],
) -> Vec<ConnectiveCandidate> {
    let lower: Vec<String> = doc.tokens.iter().map(|t| t.text.to_lowercase()).collect();
    let mut out = Vec::new();
    for sentence in &doc.sentences {
        // All matches in this sentence, then greedy acceptance by length.
        let mut matches: Vec<(usize, &ConnectiveLexiconEntry)> = Vec::new();
        for start in sentence.token_range() {
            for entry in lexicon {
                let end = start + entry.words.len() - 1;
                if end > sentence.end {
                    continue;
                }
                if entry
                    .words
                    .iter()
                    .enumerate()
                    .all(|(k, w)| lower[start + k] == *w)
                {
                    matches.push((start, entry));
                }
            }
        }
        matches.sort_by(|a, b| {
            b.1.words
                .len()
                .cmp(&a.1.words.len())
                .then(a.0.cmp(&b.0))
        });
        let mut claimed = vec![false; sentence.len()];
        let mut accepted: Vec<ConnectiveCandidate> = Vec::new();
        for (start, entry) in matches {
            let range = start - sentence.start..start - sentence.start + entry.words.len();
            if claimed[range.clone()].iter().any(|&c| c) {
                continue;
            }
            claimed[range].fill(true);
            accepted.push(ConnectiveCandidate {
                span: TokenSpan::contiguous(start, start + entry.words.len() - 1)
                    .expect("match length is at least one"),
                entry: entry.clone(),
                sentence: sentence.index,
            });
        }
        accepted.sort_by_key(|c| c.span.first());
        out.extend(accepted);
    }
    out
}

/// Position of the connective in its sentence, bucketed by the relative
/// offset r of its first token: r < 0.2 is "beginning", r > 0.8 is "end",
/// anything else "middle".
pub fn connective_position(doc: &Document, span: &TokenSpan) -> &'static str {
    let sentence = doc.sentence(doc.sentence_of(span.first()));
    let offset = span.first() - sentence.start;
    let r = offset as f64 / sentence.len() as f64;
    if r < 0.2 {
        "beginning"
    } else if r > 0.8 {
        "end"
    } else {
        "middle"
    }
}

/// The ten stage-1 features of a candidate: its own category, the
/// categories around it in the tree, the lowercased surface, whether a VP
/// follows, and the POS tags on either side (alone and conjoined with the
/// candidate's category). Neighbours beyond the sentence edge become NONE.
pub fn connective_features(doc: &Document, cand: &ConnectiveCandidate) -> FeatureVector {
    let sentence = doc.sentence(cand.sentence);
    let tree = &sentence.tree;
    let span = &cand.span;
    let in_tree = "candidate spans stay inside their sentence";
    let self_cat = syntax::self_category(tree, span).expect(in_tree).to_string();
    let parent = syntax::parent_category(tree, span)
        .expect(in_tree)
        .unwrap_or(NONE_LABEL);
    let left = syntax::left_sibling_category(tree, span)
        .expect(in_tree)
        .unwrap_or(NONE_LABEL);
    let right = syntax::right_sibling_category(tree, span)
        .expect(in_tree)
        .unwrap_or(NONE_LABEL);
    let right_vp = syntax::right_sibling_contains_vp(tree, span).expect(in_tree);
    let word = span.surface_lower(doc);
    let prev_pos = if span.first() > sentence.start {
        doc.token(span.first() - 1).pos.as_str()
    } else {
        NONE_LABEL
    };
    let next_pos = if span.last() < sentence.end {
        doc.token(span.last() + 1).pos.as_str()
    } else {
        NONE_LABEL
    };
    // For multiword candidates the "word POS" is the span's own category;
    // for single tokens that is exactly the POS tag.
    FeatureVector::new([
        format!("selfCat={self_cat}"),
        format!("parentCat={parent}"),
        format!("leftSib={left}"),
        format!("rightSib={right}"),
        format!("word={word}"),
        format!("rightVP={right_vp}"),
        format!("prevPOS={prev_pos}"),
        format!("prevPOS+wordPOS={prev_pos}&{self_cat}"),
        format!("nextPOS={next_pos}"),
        format!("nextPOS+wordPOS={next_pos}&{self_cat}"),
    ])
}

/// Keeps the candidates the model calls discourse usages with probability
/// above `threshold`.
pub fn identify_connectives(
    doc: &Document,
    lexicon: &[ConnectiveLexiconEntry],
    model: &MaxentModel,
    threshold: f64,
) -> Vec<ConnectiveCandidate> {
    scan_candidates(doc, lexicon)
        .into_iter()
        .filter(|cand| model.prob_of(&connective_features(doc, cand), DISCOURSE) > threshold)
        .collect()
}

/// One training instance per lexicon match: positive when the candidate
/// span exactly equals a gold explicit connective span.
pub fn training_instances(
    doc: &Document,
    gold: &[DiscourseRelation],
    lexicon: &[ConnectiveLexiconEntry],
) -> Vec<LabeledInstance> {
    let gold_spans: HashSet<&TokenSpan> = gold
        .iter()
        .filter(|r| r.relation_type == RelationType::Explicit)
        .filter_map(|r| r.connective_span.as_ref())
        .collect();
    scan_candidates(doc, lexicon)
        .into_iter()
        .map(|cand| {
            let label = if gold_spans.contains(&cand.span) {
                DISCOURSE
            } else {
                NON_DISCOURSE
            };
            LabeledInstance::new(connective_features(doc, &cand), label)
        })
        .collect()
}
