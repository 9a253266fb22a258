//! Property tests for the invariants everything else leans on: span
//! normalization, order-independence of feature sets, distance symmetry,
//! and lossless serialization.

mod common;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use discourse::corpus::{
    read_lexicon, read_relations_standalone, write_lexicon, write_relations, ConnectiveCategory,
    ConnectiveLexiconEntry, DiscourseRelation, Document, RelationType, TokenSpan,
};
use discourse::maxent::{FeatureVector, MaxentModel, TrainInfo};
use discourse::syntax::{dep_path, step_distance};
use proptest::prelude::*;

use common::generate_corpus;

/// A small pool of real documents to draw token pairs from.
fn sample_docs() -> &'static Vec<Document> {
    static DOCS: OnceLock<Vec<Document>> = OnceLock::new();
    DOCS.get_or_init(|| generate_corpus(1234, 6).into_iter().map(|d| d.doc).collect())
}

fn sense_strategy() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("Temporal".to_string()),
        Just("Temporal/Asynchronous/precedence".to_string()),
        Just("Contingency/cause".to_string()),
        Just("Comparison/contrast".to_string()),
        Just("Expansion".to_string()),
    ]
}

/// Three disjoint index blocks from one draw of distinct indices, so any
/// assignment of them to arg1/connective/arg2 is shape-valid.
fn disjoint_blocks() -> impl Strategy<Value = (TokenSpan, TokenSpan, TokenSpan)> {
    proptest::collection::btree_set(0..60usize, 3..18).prop_map(|set| {
        let all: Vec<usize> = set.into_iter().collect();
        let third = all.len() / 3;
        let a = TokenSpan::new(all[..third.max(1)].iter().copied()).unwrap();
        let b = TokenSpan::new(all[third.max(1)..(2 * third).max(2)].iter().copied()).unwrap();
        let c = TokenSpan::new(all[(2 * third).max(2)..].iter().copied()).unwrap();
        (a, b, c)
    })
}

fn relation_strategy() -> impl Strategy<Value = DiscourseRelation> {
    (disjoint_blocks(), 0..5usize, sense_strategy(), any::<bool>()).prop_map(
        |((first, middle, last), kind, sense, flip)| {
            let sense = Some(sense.parse().unwrap());
            match kind {
                // Explicit arguments may appear in either text order.
                0 => DiscourseRelation {
                    relation_type: RelationType::Explicit,
                    connective_span: Some(middle),
                    arg1: if flip { last.clone() } else { first.clone() },
                    arg2: if flip { first } else { last },
                    sense,
                },
                1 => DiscourseRelation {
                    relation_type: RelationType::AltLex,
                    connective_span: Some(middle),
                    arg1: first,
                    arg2: last,
                    sense: if flip { sense } else { None },
                },
                2 => DiscourseRelation {
                    relation_type: RelationType::Implicit,
                    connective_span: None,
                    arg1: union(&first, &middle),
                    arg2: last,
                    sense,
                },
                3 => DiscourseRelation {
                    relation_type: RelationType::EntRel,
                    connective_span: None,
                    arg1: first,
                    arg2: union(&middle, &last),
                    sense: None,
                },
                _ => DiscourseRelation {
                    relation_type: RelationType::NoRel,
                    connective_span: None,
                    arg1: first,
                    arg2: last,
                    sense: None,
                },
            }
        },
    )
}

fn union(a: &TokenSpan, b: &TokenSpan) -> TokenSpan {
    TokenSpan::new(a.iter().chain(b.iter())).expect("unions are never empty")
}

proptest! {
    /// Spans normalize any input order and multiplicity away.
    #[test]
    fn token_span_normalizes(indices in proptest::collection::vec(0..200usize, 1..30)) {
        let span = TokenSpan::new(indices.iter().copied()).unwrap();
        let distinct: BTreeSet<usize> = indices.iter().copied().collect();
        prop_assert_eq!(span.len(), distinct.len());
        prop_assert_eq!(span.first(), *distinct.first().unwrap());
        prop_assert_eq!(span.last(), *distinct.last().unwrap());
        let walked: Vec<usize> = span.iter().collect();
        prop_assert!(walked.windows(2).all(|w| w[0] < w[1]));
        for i in 0..200 {
            prop_assert_eq!(span.contains(i), distinct.contains(&i));
        }
        prop_assert_eq!(span.is_contiguous(), span.last() - span.first() + 1 == span.len());
    }

    /// Removing a span leaves exactly the set difference.
    #[test]
    fn token_span_minus_is_set_difference(
        a in proptest::collection::btree_set(0..50usize, 1..20),
        b in proptest::collection::btree_set(0..50usize, 1..20),
    ) {
        let span = TokenSpan::new(a.iter().copied()).unwrap();
        let other = TokenSpan::new(b.iter().copied()).unwrap();
        let expected: BTreeSet<usize> = a.difference(&b).copied().collect();
        match span.minus(&other) {
            Some(result) => {
                let got: BTreeSet<usize> = result.iter().collect();
                prop_assert_eq!(got, expected);
                prop_assert!(!result.overlaps(&other));
            }
            None => prop_assert!(expected.is_empty()),
        }
    }

    /// Feature order and duplication never influence the vector.
    #[test]
    fn feature_vector_is_order_independent(
        mut features in proptest::collection::vec("[a-z=&]{1,12}", 1..15),
        seed in any::<u64>(),
    ) {
        let forward = FeatureVector::new(features.clone());
        // A cheap deterministic shuffle plus a duplicate.
        let by = (seed as usize) % features.len();
        features.rotate_left(by);
        features.push(features[0].clone());
        let shuffled = FeatureVector::new(features);
        prop_assert_eq!(forward, shuffled);
    }

    /// Step distance is a symmetric premetric on document tokens.
    #[test]
    fn step_distance_is_symmetric(doc_index in 0..6usize, a in 0..400usize, b in 0..400usize) {
        let doc = &sample_docs()[doc_index];
        let n = doc.tokens.len();
        let (a, b) = (a % n, b % n);
        let forward = step_distance(doc, a, b);
        prop_assert_eq!(forward, step_distance(doc, b, a));
        prop_assert_eq!(forward == 0, a == b);
        let (sa, sb) = (doc.sentence_of(a), doc.sentence_of(b));
        if sa != sb {
            // Routed walks cross every sentence boundary between the two.
            prop_assert!(forward >= sa.abs_diff(sb));
        }
    }

    /// A dependency path reversed swaps direction markers, hop for hop.
    #[test]
    fn dep_path_reverses_cleanly(doc_index in 0..6usize, a in 0..400usize, b in 0..400usize) {
        let doc = &sample_docs()[doc_index];
        let a = a % doc.tokens.len();
        let sentence = doc.sentence(doc.sentence_of(a));
        // Draw the second endpoint from the same sentence.
        let b = sentence.start + b % sentence.len();
        let graph = &sentence.deps;
        let forward = dep_path(graph, a, b).unwrap();
        let backward = dep_path(graph, b, a).unwrap();
        prop_assert_eq!(forward.len(), backward.len());
        let mirrored: String = backward
            .render()
            .chars()
            .map(|c| match c {
                '/' => '\\',
                '\\' => '/',
                other => other,
            })
            .collect();
        // Same multiset of labeled hops, opposite directions.
        let rendered = forward.render();
        let mut lhs: Vec<&str> = rendered.split(['/', '\\']).collect();
        let mut rhs: Vec<&str> = mirrored.split(['/', '\\']).collect();
        lhs.sort_unstable();
        rhs.sort_unstable();
        prop_assert_eq!(lhs, rhs);
    }

    /// Relation files are lossless for every well-formed relation shape.
    #[test]
    fn relations_round_trip(relations in proptest::collection::vec(relation_strategy(), 0..8)) {
        for relation in &relations {
            prop_assert!(relation.check_shape().is_ok(), "{relation:?}");
        }
        let json = write_relations(&relations);
        let back = read_relations_standalone(&json).unwrap();
        prop_assert_eq!(back, relations);
    }

    /// The lexicon format is lossless for lowercased surfaces.
    #[test]
    fn lexicon_round_trips(
        surfaces in proptest::collection::btree_set("[a-z]{1,8}( [a-z]{1,8}){0,2}", 1..12),
        picks in proptest::collection::vec(0..3usize, 12),
    ) {
        let entries: Vec<ConnectiveLexiconEntry> = surfaces
            .iter()
            .zip(&picks)
            .map(|(surface, pick)| ConnectiveLexiconEntry {
                words: surface.split_whitespace().map(str::to_string).collect(),
                category: [
                    ConnectiveCategory::Subordinating,
                    ConnectiveCategory::Coordinating,
                    ConnectiveCategory::Adverbial,
                ][*pick],
            })
            .collect();
        let text = write_lexicon(&entries);
        prop_assert_eq!(read_lexicon(&text).unwrap(), entries);
    }

    /// Model files are lossless down to the exact weight bits.
    #[test]
    fn models_round_trip(
        n_labels in 2..5usize,
        n_features in 0..6usize,
        raw in proptest::collection::vec(-1e6f64..1e6, 5 * 7),
        l2_sigma2 in 0.01f64..100.0,
    ) {
        let labels: Vec<String> = (0..n_labels).map(|i| format!("label{i}")).collect();
        let features: Vec<String> = (0..n_features).map(|i| format!("f{i}")).collect();
        let weights: Vec<f64> = raw[..n_labels * (n_features + 1)].to_vec();
        let info = TrainInfo { iterations: 3, final_objective: -1.25, grad_norm: 1e-5 };
        let model =
            MaxentModel::from_parts(labels, features, weights, l2_sigma2, info).unwrap();
        let back = MaxentModel::deserialize(&model.serialize()).unwrap();
        prop_assert_eq!(back.labels(), model.labels());
        let input = FeatureVector::new(["f0".to_string(), "zz".to_string()]);
        prop_assert_eq!(back.predict(&input), model.predict(&input));
        prop_assert_eq!(back.serialize(), model.serialize());
    }
}
