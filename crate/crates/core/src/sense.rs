//! Stages 3 and 4: assign senses.
//!
//! Explicit relations get one of the four top-level sense classes from a
//! classifier over the connective and its context (stage 3). Pairs of
//! adjacent same-paragraph sentences not already linked by an explicit
//! relation are then classified jointly for relation presence and sense
//! (stage 4): a sense class yields an implicit relation, EntRel an entity
//! relation, and None no relation at all.

use std::collections::{BTreeMap, HashSet};

use crate::connective::connective_position;
use crate::corpus::{
    is_punct_pos, ConnectiveCategory, ConnectiveLexiconEntry, DiscourseRelation, Document,
    RelationType, SenseClass, SenseLabel, TokenSpan,
};
use crate::maxent::{FeatureVector, LabeledInstance, MaxentModel};
use crate::syntax::{self, NONE_LABEL};

/// Stage-4 label for a pure entity-based coherence link.
pub const ENTREL: &str = "EntRel";
/// Stage-4 label for the absence of any relation.
pub const NO_RELATION: &str = "None";

// ---------------------------------------------------------------------------
// Stage 3: explicit relation senses
// ---------------------------------------------------------------------------

/// Looks up the lexicon category of a connective span by its lowercased
/// surface.
pub fn lexicon_category(
    lexicon: &[ConnectiveLexiconEntry],
    doc: &Document,
    conn: &TokenSpan,
) -> Option<ConnectiveCategory> {
    let surface = conn.surface_lower(doc);
    lexicon
        .iter()
        .find(|e| e.surface() == surface)
        .map(|e| e.category)
}

/// The six stage-3 features: the connective's lowercased surface, its own
/// and its parent's constituent category, its sentence position, its
/// lexicon category, and the lowercased word before it (NONE at the
/// sentence start).
pub fn explicit_sense_features(
    doc: &Document,
    conn: &TokenSpan,
    category: Option<ConnectiveCategory>,
) -> FeatureVector {
    let sentence = doc.sentence(doc.sentence_of(conn.first()));
    let in_tree = "connective spans stay inside their sentence";
    let self_cat = syntax::self_category(&sentence.tree, conn).expect(in_tree);
    let parent = syntax::parent_category(&sentence.tree, conn)
        .expect(in_tree)
        .unwrap_or(NONE_LABEL);
    let prev_word = if conn.first() > sentence.start {
        doc.word_lower(conn.first() - 1)
    } else {
        NONE_LABEL.to_string()
    };
    FeatureVector::new([
        format!("connLower={}", conn.surface_lower(doc)),
        format!("selfCat={self_cat}"),
        format!("parentCat={parent}"),
        format!("connPos={}", connective_position(doc, conn)),
        format!("connType={}", category.map_or(NONE_LABEL, |c| c.name())),
        format!("prevWord={prev_word}"),
    ])
}

/// Picks the sense class of an explicit relation. Ties resolve to the
/// alphabetically first class because model labels are sorted and the
/// argmax keeps the earliest maximum.
pub fn classify_explicit(
    doc: &Document,
    conn: &TokenSpan,
    category: Option<ConnectiveCategory>,
    model: &MaxentModel,
) -> SenseClass {
    let (label, _) = model.predict_best(&explicit_sense_features(doc, conn, category));
    label
        .parse()
        .expect("stage-3 models are trained on sense class labels only")
}

/// One instance per gold explicit relation, labelled with its top-level
/// sense class.
pub fn explicit_training_instances(
    doc: &Document,
    gold: &[DiscourseRelation],
    lexicon: &[ConnectiveLexiconEntry],
) -> Vec<LabeledInstance> {
    gold.iter()
        .filter(|r| r.relation_type == RelationType::Explicit)
        .filter_map(|r| {
            let conn = r.connective_span.as_ref()?;
            let sense = r.sense.as_ref()?;
            let category = lexicon_category(lexicon, doc, conn);
            Some(LabeledInstance::new(
                explicit_sense_features(doc, conn, category),
                sense.class.name(),
            ))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Stage 4: non-explicit relations between adjacent sentences
// ---------------------------------------------------------------------------

/// Stage-4 outcome: either a sense class (an implicit relation), an
/// entity relation, or nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonExplicitLabel {
    Class(SenseClass),
    EntRel,
    NoRelation,
}

impl NonExplicitLabel {
    pub fn name(self) -> &'static str {
        match self {
            NonExplicitLabel::Class(c) => c.name(),
            NonExplicitLabel::EntRel => ENTREL,
            NonExplicitLabel::NoRelation => NO_RELATION,
        }
    }

    pub fn parse(text: &str) -> Option<NonExplicitLabel> {
        match text {
            ENTREL => Some(NonExplicitLabel::EntRel),
            NO_RELATION => Some(NonExplicitLabel::NoRelation),
            other => other.parse().ok().map(NonExplicitLabel::Class),
        }
    }
}

fn span_overlaps_sentence(doc: &Document, span: &TokenSpan, sentence: usize) -> bool {
    let s = doc.sentence(sentence);
    span.iter().any(|t| t >= s.start && t <= s.end)
}

/// True when the relation links the two sentences, in either direction.
fn links_pair(doc: &Document, relation: &DiscourseRelation, i: usize, j: usize) -> bool {
    (span_overlaps_sentence(doc, &relation.arg1, i)
        && span_overlaps_sentence(doc, &relation.arg2, j))
        || (span_overlaps_sentence(doc, &relation.arg1, j)
            && span_overlaps_sentence(doc, &relation.arg2, i))
}

/// Adjacent same-paragraph sentence pairs not linked by any of the given
/// explicit relations. These are the stage-4 classification sites.
pub fn nonexplicit_pairs(doc: &Document, explicit: &[DiscourseRelation]) -> Vec<(usize, usize)> {
    (0..doc.sentences.len().saturating_sub(1))
        .map(|i| (i, i + 1))
        .filter(|&(i, j)| doc.sentence(i).paragraph == doc.sentence(j).paragraph)
        .filter(|&(i, j)| {
            !explicit
                .iter()
                .filter(|r| r.relation_type == RelationType::Explicit)
                .any(|r| links_pair(doc, r, i, j))
        })
        .collect()
}

/// A whole sentence with trailing punctuation removed; the full sentence
/// when it is punctuation throughout.
pub fn sentence_span_trimmed(doc: &Document, sentence: usize) -> TokenSpan {
    let s = doc.sentence(sentence);
    let mut end = s.end;
    while end > s.start && is_punct_pos(&doc.token(end).pos) {
        end -= 1;
    }
    if is_punct_pos(&doc.token(end).pos) {
        end = s.end;
    }
    TokenSpan::contiguous(s.start, end).expect("sentences are never empty")
}

/// The `k` most frequent lowercased words of gold non-explicit Arg2 spans,
/// by descending frequency, then alphabetically. These act as weak cue
/// words ("thus", "instead", ...) for stage-4 features.
pub fn build_indicator_lexicon(
    corpus: &[(Document, Vec<DiscourseRelation>)],
    k: usize,
) -> Vec<String> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for (doc, gold) in corpus {
        for relation in gold {
            if matches!(
                relation.relation_type,
                RelationType::Implicit | RelationType::AltLex | RelationType::EntRel
            ) {
                for t in relation.arg2.iter() {
                    *counts.entry(doc.word_lower(t)).or_insert(0) += 1;
                }
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.into_iter().take(k).map(|(w, _)| w).collect()
}

fn first_last_nonpunct(doc: &Document, sentence: usize) -> (String, String) {
    let s = doc.sentence(sentence);
    let mut words = s
        .token_range()
        .filter(|&t| !is_punct_pos(&doc.token(t).pos))
        .map(|t| doc.word_lower(t));
    let first = words.next().unwrap_or_else(|| NONE_LABEL.to_string());
    let last = words.next_back().unwrap_or_else(|| first.clone());
    (first, last)
}

fn word_types(doc: &Document, sentence: usize) -> HashSet<String> {
    doc.sentence(sentence)
        .token_range()
        .filter(|&t| !is_punct_pos(&doc.token(t).pos))
        .map(|t| doc.word_lower(t))
        .collect()
}

/// Stage-4 features of a sentence pair: first and last non-punctuation
/// words of each sentence (and the pair of firsts), the bucketed count of
/// shared word types, and one feature per indicator word present in
/// either sentence.
pub fn nonexplicit_features(
    doc: &Document,
    pair: (usize, usize),
    indicators: &[String],
) -> FeatureVector {
    let (i, j) = pair;
    let (first1, last1) = first_last_nonpunct(doc, i);
    let (first2, last2) = first_last_nonpunct(doc, j);
    let types1 = word_types(doc, i);
    let types2 = word_types(doc, j);
    let common = types1.intersection(&types2).count();
    let bucket = match common {
        0 => "0",
        1 => "1",
        2 => "2",
        _ => "3+",
    };
    let mut features = vec![
        format!("arg1First={first1}"),
        format!("arg1Last={last1}"),
        format!("arg2First={first2}"),
        format!("arg2Last={last2}"),
        format!("firstPair={first1}&{first2}"),
        format!("commonWords={bucket}"),
    ];
    for word in indicators {
        if types1.contains(word) {
            features.push(format!("ind1={word}"));
        }
        if types2.contains(word) {
            features.push(format!("ind2={word}"));
        }
    }
    FeatureVector::new(features)
}

/// Classifies one adjacent sentence pair.
pub fn classify_nonexplicit(
    doc: &Document,
    pair: (usize, usize),
    indicators: &[String],
    model: &MaxentModel,
) -> NonExplicitLabel {
    let (label, _) = model.predict_best(&nonexplicit_features(doc, pair, indicators));
    NonExplicitLabel::parse(label)
        .expect("stage-4 models are trained on sense classes, EntRel and None")
}

/// Builds the relation a stage-4 label stands for, if any. Arguments are
/// the two whole sentences with trailing punctuation trimmed; the earlier
/// sentence is always Arg1.
pub fn nonexplicit_relation(
    doc: &Document,
    pair: (usize, usize),
    label: NonExplicitLabel,
) -> Option<DiscourseRelation> {
    let (i, j) = pair;
    let arg1 = sentence_span_trimmed(doc, i);
    let arg2 = sentence_span_trimmed(doc, j);
    match label {
        NonExplicitLabel::NoRelation => None,
        NonExplicitLabel::EntRel => Some(DiscourseRelation {
            relation_type: RelationType::EntRel,
            connective_span: None,
            arg1,
            arg2,
            sense: None,
        }),
        NonExplicitLabel::Class(class) => Some(DiscourseRelation {
            relation_type: RelationType::Implicit,
            connective_span: None,
            arg1,
            arg2,
            sense: Some(SenseLabel::class_only(class)),
        }),
    }
}

/// The stage-4 label a gold annotation assigns to a pair: the sense class
/// of an implicit (or alternatively lexicalized) relation, EntRel for an
/// entity relation, and None for an explicit NoRel annotation or for no
/// annotation at all.
pub fn gold_pair_label(doc: &Document, gold: &[DiscourseRelation], pair: (usize, usize)) -> &'static str {
    let (i, j) = pair;
    gold.iter()
        .filter(|r| r.relation_type != RelationType::Explicit)
        .find(|r| {
            span_overlaps_sentence(doc, &r.arg1, i) && span_overlaps_sentence(doc, &r.arg2, j)
        })
        .map_or(NO_RELATION, |r| match r.relation_type {
            RelationType::EntRel => ENTREL,
            RelationType::NoRel => NO_RELATION,
            _ => r
                .sense
                .as_ref()
                .map_or(NO_RELATION, |s| s.class.name()),
        })
}

/// One instance per stage-4 pair of the document, using gold explicit
/// relations to decide which pairs exist.
pub fn nonexplicit_training_instances(
    doc: &Document,
    gold: &[DiscourseRelation],
    indicators: &[String],
) -> Vec<LabeledInstance> {
    nonexplicit_pairs(doc, gold)
        .into_iter()
        .map(|pair| {
            LabeledInstance::new(
                nonexplicit_features(doc, pair, indicators),
                gold_pair_label(doc, gold, pair),
            )
        })
        .collect()
}
