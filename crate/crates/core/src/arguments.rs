//! Stage 2: locate the two arguments of an explicit connective.
//!
//! Rather than label whole spans directly, the stage ranks candidate
//! argument *head* tokens with one classifier per argument, then projects
//! each chosen head to a span: the yield of the largest constituent that
//! contains the head but none of the connective's tokens. Arg2 is the
//! argument the connective attaches to syntactically; Arg1 is the other.

use crate::connective::{connective_position, ConnectiveCandidate};
use crate::corpus::{is_punct_pos, ConnectiveCategory, Document, TokenSpan};
use crate::maxent::{FeatureVector, LabeledInstance, MaxentModel};
use crate::syntax::{self, NONE_LABEL};

/// Classifier label for the chosen head of an argument.
pub const HEAD: &str = "head";
/// Classifier label for every other candidate.
pub const NOT_HEAD: &str = "other";

/// Candidate head tokens are content words: verbs, common nouns and
/// adjectives.
pub fn is_head_pos(pos: &str) -> bool {
    pos.starts_with("VB") || pos == "NN" || pos == "NNS" || pos.starts_with("JJ")
}

/// The head of a span: its leftmost token whose dependency head lies
/// outside the span (or which is the sentence root).
pub fn span_head(doc: &Document, span: &TokenSpan) -> usize {
    span.iter()
        .find(|&t| match doc.sentence(doc.sentence_of(t)).deps.head_of(t) {
            Some((head, _)) => !span.contains(head),
            None => true,
        })
        .expect("a non-empty span always has a token attached outside it")
}

/// Arg2 head candidates: content-word tokens of the connective's own
/// sentence, excluding the connective's tokens.
pub fn arg2_candidates(doc: &Document, conn: &TokenSpan) -> Vec<usize> {
    let sentence = doc.sentence(doc.sentence_of(conn.first()));
    sentence
        .token_range()
        .filter(|&t| !conn.contains(t) && is_head_pos(&doc.token(t).pos))
        .collect()
}

/// Arg1 head candidates: content-word tokens in the connective's sentence
/// or any earlier one, excluding the connective's tokens, within
/// `step_bound` dependency steps of the connective's head token.
pub fn arg1_candidates(doc: &Document, conn: &TokenSpan, step_bound: usize) -> Vec<usize> {
    let conn_head = span_head(doc, conn);
    let conn_sentence = doc.sentence_of(conn.first());
    let last = doc.sentence(conn_sentence).end;
    (0..=last)
        .filter(|&t| !conn.contains(t) && is_head_pos(&doc.token(t).pos))
        .filter(|&t| syntax::step_distance(doc, t, conn_head) <= step_bound)
        .collect()
}

/// The twelve stage-2 features of a candidate head relative to a
/// connective: lexical identity of both, their relative order, the
/// connective's sentence position and lexicon category, and the
/// constituent/dependency paths between them. Path features degrade to
/// NONE when candidate and connective sit in different sentences.
pub fn argument_features(
    doc: &Document,
    conn: &TokenSpan,
    category: Option<ConnectiveCategory>,
    candidate: usize,
) -> FeatureVector {
    let conn_sentence = doc.sentence_of(conn.first());
    let cand_sentence = doc.sentence_of(candidate);
    let same = cand_sentence == conn_sentence;
    let conn_text = conn.words(doc);
    let conn_lower = conn.surface_lower(doc);
    let cand_word = doc.word_lower(candidate);
    let rel_pos = if candidate < conn.first() { "before" } else { "after" };
    let conn_pos = connective_position(doc, conn);
    let conn_type = category.map_or(NONE_LABEL, |c| c.name());
    let (const_path, collapsed, path_len, dep_path) = if same {
        let sentence = doc.sentence(conn_sentence);
        let path = syntax::const_path(&sentence.tree, candidate, conn)
            .expect("candidate and connective verified inside this sentence");
        let conn_head = span_head(doc, conn);
        let dep = syntax::dep_path(&sentence.deps, candidate, conn_head)
            .expect("tokens of one sentence share its dependency tree");
        (path.render(), path.collapsed(), path.hops().to_string(), dep.render())
    } else {
        let none = NONE_LABEL.to_string();
        (none.clone(), none.clone(), none.clone(), none)
    };
    FeatureVector::new([
        format!("sameSent={same}"),
        format!("conn={conn_text}"),
        format!("connLower={conn_lower}"),
        format!("candWord={cand_word}"),
        format!("relPos={rel_pos}"),
        format!("connPos={conn_pos}"),
        format!("conn&connPos={conn_text}&{conn_pos}"),
        format!("constPath={const_path}"),
        format!("collapsedPath={collapsed}"),
        format!("pathLen={path_len}"),
        format!("depPath={dep_path}"),
        format!("connType={conn_type}"),
    ])
}

/// Ranks candidates by the model's head probability. Ties break toward
/// the candidate fewer dependency steps from the connective's head, then
/// toward the smaller token index. None when there are no candidates.
fn rank_heads(
    doc: &Document,
    conn: &TokenSpan,
    category: Option<ConnectiveCategory>,
    model: &MaxentModel,
    candidates: &[usize],
) -> Option<usize> {
    let conn_head = span_head(doc, conn);
    candidates
        .iter()
        .map(|&cand| {
            let prob = model.prob_of(&argument_features(doc, conn, category, cand), HEAD);
            (cand, prob, syntax::step_distance(doc, cand, conn_head))
        })
        .min_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("head probabilities are finite")
                .then(a.2.cmp(&b.2))
                .then(a.0.cmp(&b.0))
        })
        .map(|(cand, _, _)| cand)
}

/// Yield of the largest constituent containing `head` and no token of
/// `conn`. The connective may sit in another sentence, in which case this
/// is the head's whole sentence.
fn largest_constituent(doc: &Document, head: usize, conn: &TokenSpan) -> (usize, usize) {
    let tree = &doc.sentence(doc.sentence_of(head)).tree;
    let touches_conn = |id: usize| {
        let node = tree.node(id);
        conn.iter().any(|t| t >= node.first_token && t <= node.last_token)
    };
    let mut id = tree
        .preterminal_of(head)
        .expect("every token has a preterminal");
    while let Some(parent) = tree.node(id).parent {
        if touches_conn(parent) {
            break;
        }
        id = parent;
    }
    let node = tree.node(id);
    (node.first_token, node.last_token)
}

/// Projects a chosen head to an argument span: the yield of its largest
/// connective-free constituent, minus the other argument's constituent
/// (never removing the head itself), with trailing punctuation trimmed.
pub fn project_span(
    doc: &Document,
    head: usize,
    conn: &TokenSpan,
    other_constituent: Option<(usize, usize)>,
) -> TokenSpan {
    let (first, last) = largest_constituent(doc, head, conn);
    let mut tokens: Vec<usize> = (first..=last)
        .filter(|&t| {
            t == head
                || !matches!(other_constituent, Some((of, ol)) if t >= of && t <= ol)
        })
        .collect();
    while let Some(&t) = tokens.last() {
        if t != head && is_punct_pos(&doc.token(t).pos) {
            tokens.pop();
        } else {
            break;
        }
    }
    TokenSpan::new(tokens).expect("the head itself always survives projection")
}

/// Both argument spans for one connective, with notes on any degraded
/// decisions taken along the way.
#[derive(Debug)]
pub struct ExtractedArguments {
    pub arg1: TokenSpan,
    pub arg2: TokenSpan,
    pub notes: Vec<String>,
}

/// Runs head ranking and span projection for both arguments.
///
/// Fallbacks: with no Arg1 candidates the span is the full previous
/// sentence, or the pre-connective part of the first sentence; with no
/// Arg2 candidates, the post-connective remainder of the sentence, or
/// failing that the sentence minus the connective. Both arguments also
/// get disjoint by removing contested tokens from Arg1. An error means
/// no Arg1 could be built at all and the relation should be dropped.
pub fn identify_arguments(
    doc: &Document,
    conn: &ConnectiveCandidate,
    arg1_model: &MaxentModel,
    arg2_model: &MaxentModel,
    step_bound: usize,
) -> Result<ExtractedArguments, String> {
    let span = &conn.span;
    let category = Some(conn.entry.category);
    let mut notes = Vec::new();
    let sentence = doc.sentence(conn.sentence);

    let head1 = rank_heads(doc, span, category, arg1_model, &arg1_candidates(doc, span, step_bound));
    let head2 = rank_heads(doc, span, category, arg2_model, &arg2_candidates(doc, span));
    let const1 = head1.map(|h| largest_constituent(doc, h, span));
    let const2 = head2.map(|h| largest_constituent(doc, h, span));

    let arg2 = match head2 {
        Some(h) => project_span(doc, h, span, const1),
        None => {
            let post: Vec<usize> = (span.last() + 1..=sentence.end).collect();
            let tokens = if post.is_empty() {
                notes.push(format!(
                    "no Arg2 head candidates and nothing after '{}'; using its sentence minus the connective",
                    span.surface_lower(doc)
                ));
                sentence.token_range().filter(|&t| !span.contains(t)).collect()
            } else {
                notes.push(format!(
                    "no Arg2 head candidates for '{}'; using the post-connective remainder",
                    span.surface_lower(doc)
                ));
                post
            };
            TokenSpan::new(tokens)
                .ok_or_else(|| "connective fills its whole sentence; no Arg2 material".to_string())?
        }
    };

    let arg1 = match head1 {
        Some(h) => project_span(doc, h, span, const2),
        None => {
            let tokens: Vec<usize> = if conn.sentence > 0 {
                notes.push(format!(
                    "no Arg1 head candidates for '{}'; using the full previous sentence",
                    span.surface_lower(doc)
                ));
                doc.sentence(conn.sentence - 1).token_range().collect()
            } else {
                notes.push(format!(
                    "no Arg1 head candidates for '{}'; using the pre-connective material",
                    span.surface_lower(doc)
                ));
                (sentence.start..span.first()).collect()
            };
            TokenSpan::new(tokens)
                .ok_or_else(|| "no Arg1 candidates and no material before the connective".to_string())?
        }
    };

    // The arguments must not share tokens; Arg1 cedes any contested ones.
    let arg1 = if arg1.overlaps(&arg2) {
        match arg1.minus(&arg2) {
            Some(reduced) => {
                notes.push("removed tokens contested with Arg2 from Arg1".to_string());
                reduced
            }
            None => return Err("Arg1 entirely swallowed by Arg2".to_string()),
        }
    } else {
        arg1
    };

    Ok(ExtractedArguments { arg1, arg2, notes })
}

/// Training instances for one gold explicit relation: every candidate of
/// each argument, labelled head exactly when it is the head of the gold
/// span. When the gold head is not among the candidates all of them are
/// negative and a note reports the miss.
pub struct ArgumentInstances {
    pub arg1: Vec<LabeledInstance>,
    pub arg2: Vec<LabeledInstance>,
    pub notes: Vec<String>,
}

pub fn training_instances(
    doc: &Document,
    conn: &TokenSpan,
    category: Option<ConnectiveCategory>,
    gold_arg1: &TokenSpan,
    gold_arg2: &TokenSpan,
    step_bound: usize,
) -> ArgumentInstances {
    let mut out = ArgumentInstances {
        arg1: Vec::new(),
        arg2: Vec::new(),
        notes: Vec::new(),
    };
    for (name, gold, candidates, bucket) in [
        (
            "Arg1",
            gold_arg1,
            arg1_candidates(doc, conn, step_bound),
            &mut out.arg1,
        ),
        ("Arg2", gold_arg2, arg2_candidates(doc, conn), &mut out.arg2),
    ] {
        let gold_head = span_head(doc, gold);
        if !candidates.contains(&gold_head) {
            out.notes.push(format!(
                "gold {name} head (token {gold_head}) of '{}' is not a candidate; all candidates negative",
                conn.surface_lower(doc)
            ));
        }
        bucket.extend(candidates.into_iter().map(|cand| {
            let label = if cand == gold_head { HEAD } else { NOT_HEAD };
            LabeledInstance::new(argument_features(doc, conn, category, cand), label)
        }));
    }
    out
}
