//! Shared helpers for the integration suites: a deterministic synthetic
//! corpus generator and brute-force graph oracles that the production
//! implementations are checked against.
//!
//! The generated documents use a small closed vocabulary and a handful of
//! sentence shapes, chosen so that every template carries an unambiguous
//! correct analysis: clause boundaries line up with constituents, each
//! paragraph opens with a plain sentence that can serve as a previous-
//! sentence argument, and the two non-discourse templates ("after" as a
//! preposition, "and" inside a noun phrase) are distinguishable from their
//! discourse counterparts by syntax alone.

#![allow(dead_code)]

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use discourse::corpus::{
    is_punct_pos, read_document, read_relations, write_relations, DiscourseRelation, Document,
    RelationType, TokenSpan,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

/// Verbs reserved for paragraph-opening sentences. Keeping them disjoint
/// from the other verb pool gives the argument models a clean lexical cue
/// for "the previous sentence" without making the task trivial elsewhere.
const OPEN_VERBS: [&str; 6] = ["arrived", "opened", "gathered", "started", "landed", "surfaced"];

const MAIN_VERBS: [&str; 10] = [
    "stumbled", "recovered", "waited", "slowed", "rallied", "paused", "shifted", "settled",
    "cheered", "drifted",
];

const NOUNS: [&str; 12] = [
    "storm", "market", "crowd", "driver", "garden", "signal", "harvest", "engine", "river",
    "council", "bridge", "valley",
];

/// Mid-sentence subordinators with the sense each one expresses here.
const MIDSUB: [(&str, &str); 5] = [
    ("because", "Contingency/cause"),
    ("although", "Comparison/contrast"),
    ("if", "Contingency/condition"),
    ("unless", "Contingency/condition"),
    ("while", "Comparison"),
];

/// Sentence-initial subordinators. "while" deliberately takes a different
/// sense here than in mid-sentence position, so sense classification must
/// use more than the surface string.
const INITIALSUB: [(&str, &str); 3] = [
    ("after", "Temporal/Asynchronous/precedence"),
    ("if", "Contingency/condition"),
    ("while", "Temporal/Synchrony"),
];

/// Coordinators other than "and" for the second coordination slot.
const COORD_SECOND: [(&str, &str); 2] = [
    ("but", "Comparison/contrast"),
    ("so", "Contingency/cause/result"),
];

const ADVB: [(&str, &str); 4] = [
    ("however", "Comparison/contrast"),
    ("therefore", "Contingency/cause/result"),
    ("meanwhile", "Temporal/Synchrony"),
    ("instead", "Expansion/alternative"),
];

/// Sentence-initial cue words of implicit relations. None of these are in
/// the connective lexicon; stage 4 has to pick them up as indicator words.
const MARKERS: [(&str, &str); 4] = [
    ("thus", "Contingency/cause/result"),
    ("later", "Temporal/Asynchronous/succession"),
    ("furthermore", "Expansion/conjunction"),
    ("conversely", "Comparison/contrast"),
];

/// The connective lexicon shared by the whole synthetic corpus.
pub const LEXICON: &str = "because\tSubordinating\n\
although\tSubordinating\n\
if\tSubordinating\n\
unless\tSubordinating\n\
while\tSubordinating\n\
after\tSubordinating\n\
as long as\tSubordinating\n\
but\tCoordinating\n\
so\tCoordinating\n\
and\tCoordinating\n\
however\tAdverbial\n\
therefore\tAdverbial\n\
meanwhile\tAdverbial\n\
instead\tAdverbial\n";

// ---------------------------------------------------------------------------
// Sentence templates
// ---------------------------------------------------------------------------

/// What one sentence contributes to the document's gold annotation, in
/// sentence-local token indices.
enum GoldSpec {
    /// An explicit relation contained in this sentence.
    Explicit {
        conn: Vec<usize>,
        arg1: Vec<usize>,
        arg2: Vec<usize>,
        sense: &'static str,
    },
    /// An explicit relation whose Arg1 is the previous sentence with
    /// trailing punctuation trimmed.
    ExplicitPrevArg1 {
        conn: Vec<usize>,
        arg2: Vec<usize>,
        sense: &'static str,
    },
    /// A non-explicit annotation pairing this sentence with the previous
    /// one: a sense path for an implicit relation, "EntRel", or "NoRel".
    PairWithPrev { label: &'static str },
}

struct SentenceSpec {
    tokens: Vec<(String, &'static str)>,
    tree: String,
    /// `(head, dependent, label)` with sentence-local indices, head -1 for
    /// the root.
    deps: Vec<(i64, i64, &'static str)>,
    gold: Vec<GoldSpec>,
}

fn cap(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// "The {noun} {verb} ."
fn t_plain(noun: &str, verb: &str) -> SentenceSpec {
    SentenceSpec {
        tokens: vec![
            ("The".into(), "DT"),
            (noun.into(), "NN"),
            (verb.into(), "VBD"),
            (".".into(), "."),
        ],
        tree: format!("(S (NP (DT The) (NN {noun})) (VP (VBD {verb})) (. .))"),
        deps: vec![(-1, 2, "root"), (2, 1, "nsubj"), (1, 0, "det"), (2, 3, "punct")],
        gold: Vec::new(),
    }
}

/// "The {n1} {v1} {conn} the {n2} {v2} ." with a subordinate second clause.
fn t_midsub(
    conn: &str,
    sense: &'static str,
    n1: &str,
    v1: &str,
    n2: &str,
    v2: &str,
) -> SentenceSpec {
    SentenceSpec {
        tokens: vec![
            ("The".into(), "DT"),
            (n1.into(), "NN"),
            (v1.into(), "VBD"),
            (conn.into(), "IN"),
            ("the".into(), "DT"),
            (n2.into(), "NN"),
            (v2.into(), "VBD"),
            (".".into(), "."),
        ],
        tree: format!(
            "(S (S (NP (DT The) (NN {n1})) (VP (VBD {v1}))) \
             (SBAR (IN {conn}) (S (NP (DT the) (NN {n2})) (VP (VBD {v2})))) (. .))"
        ),
        deps: vec![
            (-1, 2, "root"),
            (2, 1, "nsubj"),
            (1, 0, "det"),
            (2, 6, "advcl"),
            (6, 3, "mark"),
            (6, 5, "nsubj"),
            (5, 4, "det"),
            (2, 7, "punct"),
        ],
        gold: vec![GoldSpec::Explicit {
            conn: vec![3],
            arg1: vec![0, 1, 2],
            arg2: vec![4, 5, 6],
            sense,
        }],
    }
}

/// "{Conn} the {n1} {v1} , the {n2} {v2} ." with the subordinate clause
/// first; Arg1 is the main clause after the comma.
fn t_initialsub(
    conn: &str,
    sense: &'static str,
    n1: &str,
    v1: &str,
    n2: &str,
    v2: &str,
) -> SentenceSpec {
    let conn_cap = cap(conn);
    SentenceSpec {
        tokens: vec![
            (conn_cap.clone(), "IN"),
            ("the".into(), "DT"),
            (n1.into(), "NN"),
            (v1.into(), "VBD"),
            (",".into(), ","),
            ("the".into(), "DT"),
            (n2.into(), "NN"),
            (v2.into(), "VBD"),
            (".".into(), "."),
        ],
        tree: format!(
            "(S (SBAR (IN {conn_cap}) (S (NP (DT the) (NN {n1})) (VP (VBD {v1})))) \
             (, ,) (S (NP (DT the) (NN {n2})) (VP (VBD {v2}))) (. .))"
        ),
        deps: vec![
            (-1, 7, "root"),
            (7, 3, "advcl"),
            (3, 0, "mark"),
            (3, 2, "nsubj"),
            (2, 1, "det"),
            (7, 4, "punct"),
            (7, 6, "nsubj"),
            (6, 5, "det"),
            (7, 8, "punct"),
        ],
        gold: vec![GoldSpec::Explicit {
            conn: vec![0],
            arg1: vec![5, 6, 7],
            arg2: vec![1, 2, 3],
            sense,
        }],
    }
}

/// "The {n1} {v1} {conn} the {n2} {v2} ." with two coordinated clauses.
fn t_coord(
    conn: &str,
    sense: &'static str,
    n1: &str,
    v1: &str,
    n2: &str,
    v2: &str,
) -> SentenceSpec {
    SentenceSpec {
        tokens: vec![
            ("The".into(), "DT"),
            (n1.into(), "NN"),
            (v1.into(), "VBD"),
            (conn.into(), "CC"),
            ("the".into(), "DT"),
            (n2.into(), "NN"),
            (v2.into(), "VBD"),
            (".".into(), "."),
        ],
        tree: format!(
            "(S (S (NP (DT The) (NN {n1})) (VP (VBD {v1}))) (CC {conn}) \
             (S (NP (DT the) (NN {n2})) (VP (VBD {v2}))) (. .))"
        ),
        deps: vec![
            (-1, 2, "root"),
            (2, 1, "nsubj"),
            (1, 0, "det"),
            (2, 3, "cc"),
            (2, 6, "conj"),
            (6, 5, "nsubj"),
            (5, 4, "det"),
            (2, 7, "punct"),
        ],
        gold: vec![GoldSpec::Explicit {
            conn: vec![3],
            arg1: vec![0, 1, 2],
            arg2: vec![4, 5, 6],
            sense,
        }],
    }
}

/// "{Conn} , the {n} {v} ." — a discourse adverbial whose Arg1 is the
/// previous sentence.
fn t_advb(conn: &str, sense: &'static str, n: &str, v: &str) -> SentenceSpec {
    let conn_cap = cap(conn);
    SentenceSpec {
        tokens: vec![
            (conn_cap.clone(), "RB"),
            (",".into(), ","),
            ("the".into(), "DT"),
            (n.into(), "NN"),
            (v.into(), "VBD"),
            (".".into(), "."),
        ],
        tree: format!("(S (RB {conn_cap}) (, ,) (S (NP (DT the) (NN {n})) (VP (VBD {v}))) (. .))"),
        deps: vec![
            (-1, 4, "root"),
            (4, 0, "advmod"),
            (4, 1, "punct"),
            (4, 3, "nsubj"),
            (3, 2, "det"),
            (4, 5, "punct"),
        ],
        gold: vec![GoldSpec::ExplicitPrevArg1 {
            conn: vec![0],
            arg2: vec![2, 3, 4],
            sense,
        }],
    }
}

/// "The {n1} {v1} after the {n2} ." — "after" as a plain preposition, not
/// a discourse connective.
fn t_nondisc_after(n1: &str, v1: &str, n2: &str) -> SentenceSpec {
    SentenceSpec {
        tokens: vec![
            ("The".into(), "DT"),
            (n1.into(), "NN"),
            (v1.into(), "VBD"),
            ("after".into(), "IN"),
            ("the".into(), "DT"),
            (n2.into(), "NN"),
            (".".into(), "."),
        ],
        tree: format!(
            "(S (NP (DT The) (NN {n1})) (VP (VBD {v1}) (PP (IN after) \
             (NP (DT the) (NN {n2})))) (. .))"
        ),
        deps: vec![
            (-1, 2, "root"),
            (2, 1, "nsubj"),
            (1, 0, "det"),
            (2, 3, "prep"),
            (3, 5, "pobj"),
            (5, 4, "det"),
            (2, 6, "punct"),
        ],
        gold: Vec::new(),
    }
}

/// "The {n1} and the {n2} {v} ." — "and" coordinating noun phrases, not
/// clauses; not a discourse connective.
fn t_nondisc_and(n1: &str, n2: &str, v: &str) -> SentenceSpec {
    SentenceSpec {
        tokens: vec![
            ("The".into(), "DT"),
            (n1.into(), "NN"),
            ("and".into(), "CC"),
            ("the".into(), "DT"),
            (n2.into(), "NN"),
            (v.into(), "VBD"),
            (".".into(), "."),
        ],
        tree: format!(
            "(S (NP (NP (DT The) (NN {n1})) (CC and) (NP (DT the) (NN {n2}))) \
             (VP (VBD {v})) (. .))"
        ),
        deps: vec![
            (-1, 5, "root"),
            (5, 1, "nsubj"),
            (1, 0, "det"),
            (1, 2, "cc"),
            (1, 4, "conj"),
            (4, 3, "det"),
            (5, 6, "punct"),
        ],
        gold: Vec::new(),
    }
}

/// "The {n1} {v1} as long as the {n2} {v2} ." with a three-word connective.
fn t_multisub(n1: &str, v1: &str, n2: &str, v2: &str) -> SentenceSpec {
    SentenceSpec {
        tokens: vec![
            ("The".into(), "DT"),
            (n1.into(), "NN"),
            (v1.into(), "VBD"),
            ("as".into(), "IN"),
            ("long".into(), "JJ"),
            ("as".into(), "IN"),
            ("the".into(), "DT"),
            (n2.into(), "NN"),
            (v2.into(), "VBD"),
            (".".into(), "."),
        ],
        tree: format!(
            "(S (S (NP (DT The) (NN {n1})) (VP (VBD {v1}))) \
             (SBAR (IN as) (JJ long) (IN as) (S (NP (DT the) (NN {n2})) (VP (VBD {v2})))) (. .))"
        ),
        deps: vec![
            (-1, 2, "root"),
            (2, 1, "nsubj"),
            (1, 0, "det"),
            (2, 8, "advcl"),
            (8, 3, "mark"),
            (3, 4, "mwe"),
            (3, 5, "mwe"),
            (8, 7, "nsubj"),
            (7, 6, "det"),
            (2, 9, "punct"),
        ],
        gold: vec![GoldSpec::Explicit {
            conn: vec![3, 4, 5],
            arg1: vec![0, 1, 2],
            arg2: vec![6, 7, 8],
            sense: "Contingency/condition",
        }],
    }
}

/// "It {v} the {obj} ." — an entity continuation of the previous sentence.
fn t_entrel(v: &str, obj: &str) -> SentenceSpec {
    SentenceSpec {
        tokens: vec![
            ("It".into(), "PRP"),
            (v.into(), "VBD"),
            ("the".into(), "DT"),
            (obj.into(), "NN"),
            (".".into(), "."),
        ],
        tree: format!("(S (NP (PRP It)) (VP (VBD {v}) (NP (DT the) (NN {obj}))) (. .))"),
        deps: vec![
            (-1, 1, "root"),
            (1, 0, "nsubj"),
            (1, 3, "dobj"),
            (3, 2, "det"),
            (1, 4, "punct"),
        ],
        gold: vec![GoldSpec::PairWithPrev { label: "EntRel" }],
    }
}

/// "{Marker} the {n} {v} ." — an implicit relation to the previous
/// sentence, cued by a sentence-initial adverb outside the lexicon.
fn t_implicit(marker: &str, sense: &'static str, n: &str, v: &str) -> SentenceSpec {
    let marker_cap = cap(marker);
    SentenceSpec {
        tokens: vec![
            (marker_cap.clone(), "RB"),
            ("the".into(), "DT"),
            (n.into(), "NN"),
            (v.into(), "VBD"),
            (".".into(), "."),
        ],
        tree: format!(
            "(S (RB {marker_cap}) (S (NP (DT the) (NN {n})) (VP (VBD {v}))) (. .))"
        ),
        deps: vec![
            (-1, 3, "root"),
            (3, 0, "advmod"),
            (3, 2, "nsubj"),
            (2, 1, "det"),
            (3, 4, "punct"),
        ],
        gold: vec![GoldSpec::PairWithPrev { label: sense }],
    }
}

// ---------------------------------------------------------------------------
// Corpus generation
// ---------------------------------------------------------------------------

pub struct SynthDoc {
    pub id: String,
    pub json: String,
    pub doc: Document,
    pub gold: Vec<DiscourseRelation>,
    pub gold_json: String,
}

struct Gen {
    rng: ChaCha8Rng,
    blueprint: usize,
    midsub: usize,
    initialsub: usize,
    coord_second: usize,
    advb: usize,
    marker: usize,
    nondisc_and: usize,
}

impl Gen {
    fn new(seed: u64) -> Gen {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            blueprint: 0,
            midsub: 0,
            initialsub: 0,
            coord_second: 0,
            advb: 0,
            marker: 0,
            nondisc_and: 0,
        }
    }

    fn noun(&mut self) -> String {
        NOUNS[self.rng.gen_range(0..NOUNS.len())].to_string()
    }

    fn noun_not(&mut self, other: &str) -> String {
        loop {
            let w = self.noun();
            if w != other {
                return w;
            }
        }
    }

    fn main_verb(&mut self) -> String {
        MAIN_VERBS[self.rng.gen_range(0..MAIN_VERBS.len())].to_string()
    }

    fn open_verb(&mut self) -> String {
        OPEN_VERBS[self.rng.gen_range(0..OPEN_VERBS.len())].to_string()
    }

    fn opener(&mut self) -> SentenceSpec {
        let n = self.noun();
        let v = self.open_verb();
        t_plain(&n, &v)
    }

    /// One paragraph of one of the four rotating shapes. Every shape
    /// starts with an opener so that previous-sentence arguments always
    /// exist.
    fn paragraph(&mut self, kind: usize) -> Vec<SentenceSpec> {
        match kind {
            // opener; adverbial connective; implicit continuation
            0 => {
                let (adv, adv_sense) = ADVB[self.advb % ADVB.len()];
                self.advb += 1;
                let (marker, marker_sense) = MARKERS[self.marker % MARKERS.len()];
                self.marker += 1;
                let (an, av) = (self.noun(), self.main_verb());
                let (mn, mv) = (self.noun(), self.main_verb());
                vec![
                    self.opener(),
                    t_advb(adv, adv_sense, &an, &av),
                    t_implicit(marker, marker_sense, &mn, &mv),
                ]
            }
            // opener; mid-sentence subordinator; prepositional "after";
            // entity continuation
            1 => {
                let (conn, sense) = MIDSUB[self.midsub % MIDSUB.len()];
                self.midsub += 1;
                let n1 = self.noun();
                let n2 = self.noun_not(&n1);
                let (v1, v2) = (self.main_verb(), self.main_verb());
                let pn1 = self.noun();
                let pn2 = self.noun_not(&pn1);
                let pv = self.main_verb();
                let (ev, eo) = (self.main_verb(), self.noun());
                vec![
                    self.opener(),
                    t_midsub(conn, sense, &n1, &v1, &n2, &v2),
                    t_nondisc_after(&pn1, &pv, &pn2),
                    t_entrel(&ev, &eo),
                ]
            }
            // opener; clausal "and"; sentence-initial subordinator;
            // "but"/"so"; noun-phrase "and" in every second paragraph
            2 => {
                let (iconn, isense) = INITIALSUB[self.initialsub % INITIALSUB.len()];
                self.initialsub += 1;
                let (cconn, csense) = COORD_SECOND[self.coord_second % COORD_SECOND.len()];
                self.coord_second += 1;
                let an1 = self.noun();
                let an2 = self.noun_not(&an1);
                let (av1, av2) = (self.main_verb(), self.main_verb());
                let in1 = self.noun();
                let in2 = self.noun_not(&in1);
                let (iv1, iv2) = (self.main_verb(), self.main_verb());
                let cn1 = self.noun();
                let cn2 = self.noun_not(&cn1);
                let (cv1, cv2) = (self.main_verb(), self.main_verb());
                let mut para = vec![
                    self.opener(),
                    t_coord("and", "Expansion/conjunction", &an1, &av1, &an2, &av2),
                    t_initialsub(iconn, isense, &in1, &iv1, &in2, &iv2),
                    t_coord(cconn, csense, &cn1, &cv1, &cn2, &cv2),
                ];
                self.nondisc_and += 1;
                if self.nondisc_and.is_multiple_of(2) {
                    let nn1 = self.noun();
                    let nn2 = self.noun_not(&nn1);
                    let nv = self.main_verb();
                    para.push(t_nondisc_and(&nn1, &nn2, &nv));
                    // An occasional explicit no-relation annotation between
                    // two sentences that are indeed unrelated.
                    para[2].gold.push(GoldSpec::PairWithPrev { label: "NoRel" });
                }
                para
            }
            // opener; multiword subordinator; implicit continuation; coda
            _ => {
                let (marker, marker_sense) = MARKERS[self.marker % MARKERS.len()];
                self.marker += 1;
                let n1 = self.noun();
                let n2 = self.noun_not(&n1);
                let (v1, v2) = (self.main_verb(), self.main_verb());
                let (mn, mv) = (self.noun(), self.main_verb());
                let (dn, dv) = (self.noun(), self.main_verb());
                vec![
                    self.opener(),
                    t_multisub(&n1, &v1, &n2, &v2),
                    t_implicit(marker, marker_sense, &mn, &mv),
                    t_plain(&dn, &dv),
                ]
            }
        }
    }

    fn document(&mut self, index: usize) -> SynthDoc {
        let id = format!("synth-{index:03}");
        let n_paragraphs = 2 + self.rng.gen_range(0..2);
        let mut specs: Vec<(SentenceSpec, usize)> = Vec::new();
        for p in 0..n_paragraphs {
            let kind = self.blueprint % 4;
            self.blueprint += 1;
            for spec in self.paragraph(kind) {
                specs.push((spec, p));
            }
        }

        // Flatten to document-level tokens and sentence records.
        let mut flat: Vec<(String, &'static str)> = Vec::new();
        let mut bounds: Vec<(usize, usize)> = Vec::new();
        let mut sentence_values = Vec::new();
        for (spec, paragraph) in &specs {
            let start = flat.len();
            let end = start + spec.tokens.len() - 1;
            bounds.push((start, end));
            let deps: Vec<serde_json::Value> = spec
                .deps
                .iter()
                .map(|&(h, d, l)| {
                    let h = if h < 0 { -1 } else { h + start as i64 };
                    serde_json::json!([h, d + start as i64, l])
                })
                .collect();
            sentence_values.push(serde_json::json!({
                "start": start,
                "end": end,
                "paragraph": paragraph,
                "const": spec.tree,
                "deps": deps,
            }));
            flat.extend(spec.tokens.iter().cloned());
        }
        let token_values: Vec<serde_json::Value> = flat
            .iter()
            .map(|(t, pos)| serde_json::json!({"t": t, "pos": pos}))
            .collect();
        let doc_value = serde_json::json!({
            "id": id,
            "tokens": token_values,
            "sentences": sentence_values,
        });
        let mut json = serde_json::to_string_pretty(&doc_value).unwrap();
        json.push('\n');
        let doc = read_document(&json).unwrap_or_else(|e| panic!("generated {id}: {e}"));

        // Resolve gold annotations now that sentence bounds are known.
        let trimmed = |s: usize| -> Vec<usize> {
            let (start, end) = bounds[s];
            let mut e = end;
            while e > start && is_punct_pos(flat[e].1) {
                e -= 1;
            }
            (start..=e).collect()
        };
        let offset = |indices: &[usize], base: usize| -> TokenSpan {
            TokenSpan::new(indices.iter().map(|i| i + base)).unwrap()
        };
        let mut relations = Vec::new();
        for (s_idx, (spec, _)) in specs.iter().enumerate() {
            let base = bounds[s_idx].0;
            for gold in &spec.gold {
                let relation = match gold {
                    GoldSpec::Explicit {
                        conn,
                        arg1,
                        arg2,
                        sense,
                    } => DiscourseRelation {
                        relation_type: RelationType::Explicit,
                        connective_span: Some(offset(conn, base)),
                        arg1: offset(arg1, base),
                        arg2: offset(arg2, base),
                        sense: Some(sense.parse().unwrap()),
                    },
                    GoldSpec::ExplicitPrevArg1 { conn, arg2, sense } => DiscourseRelation {
                        relation_type: RelationType::Explicit,
                        connective_span: Some(offset(conn, base)),
                        arg1: TokenSpan::new(trimmed(s_idx - 1)).unwrap(),
                        arg2: offset(arg2, base),
                        sense: Some(sense.parse().unwrap()),
                    },
                    GoldSpec::PairWithPrev { label } => {
                        let arg1 = TokenSpan::new(trimmed(s_idx - 1)).unwrap();
                        let arg2 = TokenSpan::new(trimmed(s_idx)).unwrap();
                        let (relation_type, sense) = match *label {
                            "EntRel" => (RelationType::EntRel, None),
                            "NoRel" => (RelationType::NoRel, None),
                            path => (RelationType::Implicit, Some(path.parse().unwrap())),
                        };
                        DiscourseRelation {
                            relation_type,
                            connective_span: None,
                            arg1,
                            arg2,
                            sense,
                        }
                    }
                };
                relation
                    .check_shape()
                    .unwrap_or_else(|e| panic!("generated {id}: {e}"));
                relations.push(relation);
            }
        }
        relations.sort_by_key(|r| (r.arg2.first(), r.arg1.first()));
        let gold_json = write_relations(&relations);
        let gold = read_relations(&gold_json, &doc).unwrap_or_else(|e| panic!("generated {id}: {e}"));
        SynthDoc {
            id,
            json,
            doc,
            gold,
            gold_json,
        }
    }
}

/// Generates `n_docs` documents deterministically from `seed`.
pub fn generate_corpus(seed: u64, n_docs: usize) -> Vec<SynthDoc> {
    let mut gen = Gen::new(seed);
    (0..n_docs).map(|i| gen.document(i)).collect()
}

/// Writes `<id>.json` document files (plus `lexicon.txt`) and gold files
/// into the two directories, creating them as needed.
pub fn write_corpus(corpus: &[SynthDoc], docs_dir: &Path, gold_dir: &Path) {
    fs::create_dir_all(docs_dir).unwrap();
    fs::create_dir_all(gold_dir).unwrap();
    for doc in corpus {
        fs::write(docs_dir.join(format!("{}.json", doc.id)), &doc.json).unwrap();
        fs::write(gold_dir.join(format!("{}.json", doc.id)), &doc.gold_json).unwrap();
    }
    fs::write(docs_dir.join("lexicon.txt"), LEXICON).unwrap();
}

/// The `(document, gold)` pairs the training APIs expect.
pub fn as_training(corpus: &[SynthDoc]) -> Vec<(Document, Vec<DiscourseRelation>)> {
    corpus
        .iter()
        .map(|d| (d.doc.clone(), d.gold.clone()))
        .collect()
}

// ---------------------------------------------------------------------------
// Fixture loading
// ---------------------------------------------------------------------------

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn load_fixture(name: &str) -> Document {
    let text = fs::read_to_string(fixture_path(name)).unwrap();
    read_document(&text).unwrap()
}

// ---------------------------------------------------------------------------
// Graph oracles
// ---------------------------------------------------------------------------

/// Breadth-first shortest path over the undirected dependency arcs of all
/// sentences plus one edge between the roots of each adjacent sentence
/// pair. This is the definition of step distance, computed the slow way.
pub fn oracle_step_distance(doc: &Document, a: usize, b: usize) -> usize {
    let n = doc.tokens.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut prev_root: Option<usize> = None;
    for sentence in &doc.sentences {
        for (head, dep, _) in sentence.deps.arcs() {
            adj[head].push(dep);
            adj[dep].push(head);
        }
        let root = sentence.deps.root();
        if let Some(prev) = prev_root {
            adj[prev].push(root);
            adj[root].push(prev);
        }
        prev_root = Some(root);
    }
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    dist[a] = 0;
    queue.push_back(a);
    while let Some(u) = queue.pop_front() {
        if u == b {
            return dist[u];
        }
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    unreachable!("dependency trees and the root chain connect every token pair")
}

/// The rendered dependency path between two tokens of one sentence, found
/// by breadth-first search with parent tracking instead of ancestor-chain
/// comparison: `/label` steps toward a head, `\label` toward a dependent.
pub fn oracle_dep_path(doc: &Document, a: usize, b: usize) -> String {
    assert_eq!(doc.sentence_of(a), doc.sentence_of(b));
    let graph = &doc.sentences[doc.sentence_of(a)].deps;
    let n = doc.tokens.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (head, dep, _) in graph.arcs() {
        adj[head].push(dep);
        adj[dep].push(head);
    }
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    seen[a] = true;
    queue.push_back(a);
    while let Some(u) = queue.pop_front() {
        if u == b {
            break;
        }
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some(u);
                queue.push_back(v);
            }
        }
    }
    assert!(seen[b], "tokens of one sentence are always connected");
    let mut chain = vec![b];
    while let Some(p) = parent[*chain.last().unwrap()] {
        chain.push(p);
    }
    chain.reverse();
    assert_eq!(chain[0], a);
    let mut out = String::new();
    for pair in chain.windows(2) {
        let (u, v) = (pair[0], pair[1]);
        if let Some((head, label)) = graph.head_of(v) {
            if head == u {
                out.push('\\');
                out.push_str(label);
                continue;
            }
        }
        let (head, label) = graph.head_of(u).expect("step must follow an arc");
        assert_eq!(head, v, "step must follow an arc");
        out.push('/');
        out.push_str(label);
    }
    out
}

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

/// Bisection on a sign change; returns the midpoint once the bracket is
/// narrower than `tol`.
pub fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    assert!(
        f_lo.signum() != f_hi.signum(),
        "bisection needs a sign change over the bracket"
    );
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
