//! Scoring predicted relations against gold, plus a frequency baseline.
//!
//! Scores are precision/recall/F1 over four rows — connective spans, Arg1
//! spans, Arg2 spans and senses — reported for all relations combined and
//! broken down into explicit and non-explicit relations. Explicit rows
//! compare exact keys as multisets, so scores never depend on the order
//! relations appear in a file. Non-explicit relations carry no connective
//! anchor; predicted and gold relations are paired by argument overlap
//! and compared pairwise.

use std::collections::BTreeMap;

use serde::ser::{Serialize, SerializeStruct, Serializer};
use serde::Deserialize;

use crate::connective::scan_candidates;
use crate::corpus::{
    ConnectiveLexiconEntry, DiscourseRelation, Document, RelationType, SenseClass, SenseLabel,
    TokenSpan,
};
use crate::sense::{nonexplicit_pairs, nonexplicit_relation, NonExplicitLabel, NO_RELATION};

/// How argument spans are compared: exactly, or by at least 70% token
/// overlap in both directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchMode {
    Exact,
    Partial,
}

impl MatchMode {
    pub fn name(self) -> &'static str {
        match self {
            MatchMode::Exact => "exact",
            MatchMode::Partial => "partial",
        }
    }
}

/// Minimum overlap fraction, in both directions, for a partial match.
pub const PARTIAL_OVERLAP: f64 = 0.7;

/// True/false-positive and false-negative counts for one scored row.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RowCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl RowCounts {
    fn from_totals(tp: usize, predicted: usize, gold: usize) -> RowCounts {
        RowCounts {
            tp,
            fp: predicted - tp,
            fn_: gold - tp,
        }
    }

    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let p = self.precision();
        let r = self.recall();
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    fn add(&mut self, other: RowCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

impl Serialize for RowCounts {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("RowCounts", 6)?;
        s.serialize_field("tp", &self.tp)?;
        s.serialize_field("fp", &self.fp)?;
        s.serialize_field("fn", &self.fn_)?;
        s.serialize_field("precision", &self.precision())?;
        s.serialize_field("recall", &self.recall())?;
        s.serialize_field("f1", &self.f1())?;
        s.end()
    }
}

/// The four scored rows of one relation group.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct RowSet {
    pub connective: RowCounts,
    pub arg1: RowCounts,
    pub arg2: RowCounts,
    pub sense: RowCounts,
}

impl RowSet {
    fn add(&mut self, other: &RowSet) {
        self.connective.add(other.connective);
        self.arg1.add(other.arg1);
        self.arg2.add(other.arg2);
        self.sense.add(other.sense);
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EvalReport {
    pub mode: &'static str,
    pub combined: RowSet,
    pub explicit: RowSet,
    pub nonexplicit: RowSet,
}

/// The label a relation contributes to the sense row: the top-level sense
/// class, or "EntRel" for entity relations. NoRel annotations score
/// nowhere and return None.
fn effective_sense(relation: &DiscourseRelation) -> Option<String> {
    match relation.relation_type {
        RelationType::NoRel => None,
        RelationType::EntRel => Some("EntRel".to_string()),
        _ => relation.sense.as_ref().map(|s| s.class.name().to_string()),
    }
}

fn multiset_tp<K: Ord>(pred: Vec<K>, gold: Vec<K>) -> usize {
    let mut counts: BTreeMap<K, usize> = BTreeMap::new();
    for key in gold {
        *counts.entry(key).or_insert(0) += 1;
    }
    let mut tp = 0;
    for key in pred {
        if let Some(n) = counts.get_mut(&key) {
            if *n > 0 {
                *n -= 1;
                tp += 1;
            }
        }
    }
    tp
}

fn overlap_count(a: &TokenSpan, b: &TokenSpan) -> usize {
    a.iter().filter(|&t| b.contains(t)).count()
}

fn partial_match(a: &TokenSpan, b: &TokenSpan) -> bool {
    let shared = overlap_count(a, b) as f64;
    shared >= PARTIAL_OVERLAP * a.len() as f64 && shared >= PARTIAL_OVERLAP * b.len() as f64
}

fn span_matches(mode: MatchMode, a: &TokenSpan, b: &TokenSpan) -> bool {
    match mode {
        MatchMode::Exact => a == b,
        MatchMode::Partial => partial_match(a, b),
    }
}

fn conn_key(relation: &DiscourseRelation) -> Vec<usize> {
    relation
        .connective_span
        .as_ref()
        .expect("explicit relations carry a connective span")
        .indices()
        .to_vec()
}

/// Scores the explicit relations of one document pair.
fn score_explicit(
    pred: &[&DiscourseRelation],
    gold: &[&DiscourseRelation],
    mode: MatchMode,
) -> RowSet {
    let conn_tp = multiset_tp(
        pred.iter().map(|r| conn_key(r)).collect(),
        gold.iter().map(|r| conn_key(r)).collect(),
    );
    let sense_tp = multiset_tp(
        pred.iter().map(|r| (conn_key(r), effective_sense(r))).collect(),
        gold.iter().map(|r| (conn_key(r), effective_sense(r))).collect(),
    );
    let (arg1_tp, arg2_tp) = match mode {
        MatchMode::Exact => (
            multiset_tp(
                pred.iter().map(|r| (conn_key(r), r.arg1.clone())).collect(),
                gold.iter().map(|r| (conn_key(r), r.arg1.clone())).collect(),
            ),
            multiset_tp(
                pred.iter().map(|r| (conn_key(r), r.arg2.clone())).collect(),
                gold.iter().map(|r| (conn_key(r), r.arg2.clone())).collect(),
            ),
        ),
        MatchMode::Partial => {
            // Pair relations with identical connective spans, then compare
            // the paired arguments by overlap.
            let mut by_conn: BTreeMap<Vec<usize>, Vec<&DiscourseRelation>> = BTreeMap::new();
            for r in gold {
                by_conn.entry(conn_key(r)).or_default().push(r);
            }
            let mut arg1_tp = 0;
            let mut arg2_tp = 0;
            let mut used: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
            for r in pred {
                let key = conn_key(r);
                let next = used.entry(key.clone()).or_insert(0);
                if let Some(partner) = by_conn.get(&key).and_then(|v| v.get(*next)) {
                    *next += 1;
                    if partial_match(&r.arg1, &partner.arg1) {
                        arg1_tp += 1;
                    }
                    if partial_match(&r.arg2, &partner.arg2) {
                        arg2_tp += 1;
                    }
                }
            }
            (arg1_tp, arg2_tp)
        }
    };
    RowSet {
        connective: RowCounts::from_totals(conn_tp, pred.len(), gold.len()),
        arg1: RowCounts::from_totals(arg1_tp, pred.len(), gold.len()),
        arg2: RowCounts::from_totals(arg2_tp, pred.len(), gold.len()),
        sense: RowCounts::from_totals(sense_tp, pred.len(), gold.len()),
    }
}

/// Scores the non-explicit relations of one document pair. Relations are
/// paired greedily in text order by argument overlap; each gold relation
/// matches at most one prediction.
fn score_nonexplicit(
    pred: &[&DiscourseRelation],
    gold: &[&DiscourseRelation],
    mode: MatchMode,
) -> RowSet {
    let sort_key =
        |r: &&DiscourseRelation| (r.arg1.first(), r.arg2.first(), r.arg1.clone(), r.arg2.clone());
    let mut pred: Vec<&DiscourseRelation> = pred.to_vec();
    let mut gold: Vec<&DiscourseRelation> = gold.to_vec();
    pred.sort_by_key(sort_key);
    gold.sort_by_key(sort_key);

    let mut taken = vec![false; gold.len()];
    let mut arg1_tp = 0;
    let mut arg2_tp = 0;
    let mut sense_tp = 0;
    for p in &pred {
        let partner = gold.iter().enumerate().find(|(i, g)| {
            !taken[*i] && p.arg1.overlaps(&g.arg1) && p.arg2.overlaps(&g.arg2)
        });
        if let Some((i, g)) = partner {
            taken[i] = true;
            if span_matches(mode, &p.arg1, &g.arg1) {
                arg1_tp += 1;
            }
            if span_matches(mode, &p.arg2, &g.arg2) {
                arg2_tp += 1;
            }
            if effective_sense(p) == effective_sense(g) {
                sense_tp += 1;
            }
        }
    }
    RowSet {
        connective: RowCounts::default(),
        arg1: RowCounts::from_totals(arg1_tp, pred.len(), gold.len()),
        arg2: RowCounts::from_totals(arg2_tp, pred.len(), gold.len()),
        sense: RowCounts::from_totals(sense_tp, pred.len(), gold.len()),
    }
}

/// Scores predictions against gold over pairs of relation lists, one pair
/// per document. NoRel annotations are ignored on both sides; explicit
/// relations are scored by connective keys and everything else by
/// argument overlap pairing.
pub fn evaluate(
    documents: &[(Vec<DiscourseRelation>, Vec<DiscourseRelation>)],
    mode: MatchMode,
) -> EvalReport {
    let mut explicit = RowSet::default();
    let mut nonexplicit = RowSet::default();
    for (pred, gold) in documents {
        let is_explicit = |r: &&DiscourseRelation| r.relation_type == RelationType::Explicit;
        let scored = |r: &&DiscourseRelation| r.relation_type != RelationType::NoRel;
        let pred_explicit: Vec<_> = pred.iter().filter(is_explicit).collect();
        let gold_explicit: Vec<_> = gold.iter().filter(is_explicit).collect();
        let pred_other: Vec<_> = pred.iter().filter(|r| !is_explicit(r)).filter(scored).collect();
        let gold_other: Vec<_> = gold.iter().filter(|r| !is_explicit(r)).filter(scored).collect();
        explicit.add(&score_explicit(&pred_explicit, &gold_explicit, mode));
        nonexplicit.add(&score_nonexplicit(&pred_other, &gold_other, mode));
    }
    let mut combined = explicit;
    combined.add(&nonexplicit);
    // Non-explicit relations have no connective row; the combined
    // connective row is exactly the explicit one.
    combined.connective = explicit.connective;
    EvalReport {
        mode: mode.name(),
        combined,
        explicit,
        nonexplicit,
    }
}

/// Renders the aligned plain-text score table.
pub fn render_text(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("Scores ({} span match)\n", report.mode));
    let sections = [
        ("All relations", &report.combined),
        ("Explicit relations", &report.explicit),
        ("Non-explicit relations", &report.nonexplicit),
    ];
    for (title, rows) in sections {
        out.push('\n');
        out.push_str(&format!(
            "{title}\n  {:<12} {:>6} {:>6} {:>6} {:>10} {:>8} {:>8}\n",
            "Row", "TP", "FP", "FN", "Precision", "Recall", "F1"
        ));
        let named: [(&str, &RowCounts); 4] = [
            ("Connective", &rows.connective),
            ("Arg1", &rows.arg1),
            ("Arg2", &rows.arg2),
            ("Sense", &rows.sense),
        ];
        for (name, counts) in named {
            if name == "Connective" && title == "Non-explicit relations" {
                continue;
            }
            out.push_str(&format!(
                "  {:<12} {:>6} {:>6} {:>6} {:>10.3} {:>8.3} {:>8.3}\n",
                name,
                counts.tp,
                counts.fp,
                counts.fn_,
                counts.precision(),
                counts.recall(),
                counts.f1()
            ));
        }
    }
    out
}

/// Renders the JSON report with a fixed key order.
pub fn render_json(report: &EvalReport) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serialization cannot fail");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// Frequency baseline
// ---------------------------------------------------------------------------

/// What the baseline remembers about one connective surface: how often
/// lexicon matches were discourse connectives in training and which sense
/// classes they expressed.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, Deserialize)]
pub struct ConnectiveStat {
    pub seen: usize,
    pub discourse: usize,
    pub senses: BTreeMap<String, usize>,
}

/// Counting statistics behind the baseline parser: per-surface discourse
/// frequencies and the overall most frequent non-explicit label.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, Deserialize)]
pub struct Baseline1Stats {
    pub connectives: BTreeMap<String, ConnectiveStat>,
    pub majority_nonexplicit: String,
}

/// Collects baseline statistics from gold annotations.
pub fn train_baseline1(
    corpus: &[(Document, Vec<DiscourseRelation>)],
    lexicon: &[ConnectiveLexiconEntry],
) -> Baseline1Stats {
    let mut connectives: BTreeMap<String, ConnectiveStat> = BTreeMap::new();
    let mut labels: BTreeMap<String, usize> = BTreeMap::new();
    for (doc, gold) in corpus {
        let gold_conns: BTreeMap<&TokenSpan, &DiscourseRelation> = gold
            .iter()
            .filter(|r| r.relation_type == RelationType::Explicit)
            .filter_map(|r| r.connective_span.as_ref().map(|s| (s, r)))
            .collect();
        for cand in scan_candidates(doc, lexicon) {
            let stat = connectives.entry(cand.entry.surface()).or_default();
            stat.seen += 1;
            if let Some(relation) = gold_conns.get(&cand.span) {
                stat.discourse += 1;
                if let Some(sense) = &relation.sense {
                    *stat.senses.entry(sense.class.name().to_string()).or_insert(0) += 1;
                }
            }
        }
        for relation in gold {
            let label = match relation.relation_type {
                RelationType::Explicit => continue,
                RelationType::EntRel => "EntRel".to_string(),
                RelationType::NoRel => NO_RELATION.to_string(),
                _ => match &relation.sense {
                    Some(sense) => sense.class.name().to_string(),
                    None => continue,
                },
            };
            *labels.entry(label).or_insert(0) += 1;
        }
    }
    Baseline1Stats {
        connectives,
        majority_nonexplicit: majority(&labels).unwrap_or_else(|| NO_RELATION.to_string()),
    }
}

/// The most frequent key; ties go alphabetically first.
fn majority(counts: &BTreeMap<String, usize>) -> Option<String> {
    counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(k, _)| k.clone())
}

/// The frequency baseline parser. A lexicon match becomes a connective
/// exactly when its surface was a discourse connective more than half the
/// time in training; Arg2 is then everything after the connective in its
/// sentence, Arg1 the entire previous sentence (or everything before the
/// connective when there is none), and the sense is the surface's most
/// frequent training sense. Every remaining adjacent same-paragraph
/// sentence pair receives the overall most frequent non-explicit label.
pub fn baseline1_parse(
    doc: &Document,
    lexicon: &[ConnectiveLexiconEntry],
    stats: &Baseline1Stats,
) -> Vec<DiscourseRelation> {
    let mut relations = Vec::new();
    for cand in scan_candidates(doc, lexicon) {
        let Some(stat) = stats.connectives.get(&cand.entry.surface()) else {
            continue;
        };
        if stat.discourse * 2 <= stat.seen {
            continue;
        }
        let Some(class) = majority(&stat.senses).and_then(|name| name.parse::<SenseClass>().ok())
        else {
            continue;
        };
        let sentence = doc.sentence(cand.sentence);
        let Some(arg2) = TokenSpan::new(cand.span.last() + 1..=sentence.end) else {
            continue;
        };
        let arg1 = if cand.sentence > 0 {
            let previous = doc.sentence(cand.sentence - 1);
            TokenSpan::new(previous.token_range())
        } else {
            TokenSpan::new(sentence.start..cand.span.first())
        };
        let Some(arg1) = arg1 else {
            continue;
        };
        relations.push(DiscourseRelation {
            relation_type: RelationType::Explicit,
            connective_span: Some(cand.span),
            arg1,
            arg2,
            sense: Some(SenseLabel::class_only(class)),
        });
    }

    if let Some(label) = NonExplicitLabel::parse(&stats.majority_nonexplicit) {
        for pair in nonexplicit_pairs(doc, &relations) {
            if let Some(relation) = nonexplicit_relation(doc, pair, label) {
                relations.push(relation);
            }
        }
    }

    relations.sort_by_key(|r| (r.arg2.first(), r.arg1.first()));
    relations
}
