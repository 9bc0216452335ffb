use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use synsrl::analysis::{evaluate, f1};
use synsrl::decode::{build_transition_mask, sequence_score, viterbi_indices};
use synsrl::numerics::{clip_global_norm, ParameterStore, Tensor};
use synsrl::synthetic::random_tree;
use synsrl::treebank::{
    bio_to_spans, parse_conllx, parse_props, spans_to_bio, write_conllx, write_props, LabeledSpan,
    PredicateFrame, PropsBlock, Sentence,
};

const ROLES: [&str; 5] = ["A0", "A1", "A2", "AM-TMP", "C-A1"];

/// A sentence length, a predicate and non-overlapping spans.
fn frame_strategy(max_len: usize) -> impl Strategy<Value = (usize, PredicateFrame)> {
    (1..=max_len)
        .prop_flat_map(|n| {
            (
                Just(n),
                0..n,
                prop::collection::vec((0usize..3, 0usize..3, 0..ROLES.len()), 0..n),
            )
        })
        .prop_map(|(n, p, pieces)| {
            let mut spans = Vec::new();
            let mut at = 0;
            for (gap, len, role) in pieces {
                let start = at + gap;
                let end = start + len;
                if end >= n {
                    break;
                }
                spans.push(LabeledSpan::new(ROLES[role], start, end));
                at = end + 1;
            }
            (n, PredicateFrame::new(p, spans).unwrap())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn spans_survive_bio_round_trip((n, frame) in frame_strategy(30)) {
        let tags = spans_to_bio(&frame, n).unwrap();
        prop_assert_eq!(tags.tags().len(), n);
        prop_assert_eq!(bio_to_spans(tags.tags()).unwrap(), frame.spans.clone());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn props_round_trip_is_exact(blocks in prop::collection::vec(frame_strategy(12), 1..4)) {
        let blocks: Vec<PropsBlock> = blocks
            .into_iter()
            .map(|(n, mut frame)| {
                // predicate inside an argument span is fine, but its V
                // is then not written; keep the predicate outside
                frame.spans.retain(|s| !s.contains(frame.predicate));
                let sentence = Sentence::new((0..n).map(|i| format!("w{i}"))).unwrap();
                PropsBlock::from_sentence(&sentence, vec![frame]).unwrap()
            })
            .collect();
        let text = write_props(&blocks).unwrap();
        let back = parse_props(&text).unwrap();
        prop_assert_eq!(&back, &blocks);
        prop_assert_eq!(write_props(&back).unwrap(), text);
    }

    #[test]
    fn trees_survive_conllx_round_trip(n in 1usize..15, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_tree(n, &mut rng);
        let sentence = Sentence::new((0..n).map(|i| format!("t{i}"))).unwrap();
        let text = write_conllx(&[(sentence.clone(), tree.clone())]);
        let back = parse_conllx(&text).unwrap();
        prop_assert_eq!(back, vec![(sentence, tree)]);
    }

    #[test]
    fn lca_is_symmetric_and_an_ancestor(n in 1usize..15, seed in any::<u64>(), i in 0usize..15, j in 0usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tree(n, &mut rng);
        let (i, j) = (i % n, j % n);
        let a = t.lca(i, j);
        prop_assert_eq!(a, t.lca(j, i));
        prop_assert!(t.is_ancestor_or_self(a, i) && t.is_ancestor_or_self(a, j));
        for c in t.children(a) {
            prop_assert!(!(t.is_ancestor_or_self(*c, i) && t.is_ancestor_or_self(*c, j)));
        }
    }

    #[test]
    fn evaluation_is_symmetric_in_precision_and_recall(
        pairs in prop::collection::vec((frame_strategy(10), frame_strategy(10)), 1..5)
    ) {
        let (gold, pred): (Vec<_>, Vec<_>) = pairs
            .into_iter()
            .map(|((_, g), (_, mut p))| {
                p.predicate = g.predicate;
                (vec![g], vec![p])
            })
            .unzip();
        let a = evaluate(&gold, &pred).unwrap();
        let b = evaluate(&pred, &gold).unwrap();
        prop_assert_eq!(a.precision, b.recall);
        prop_assert_eq!(a.recall, b.precision);
        prop_assert!((a.f1 - f1(a.precision, a.recall)).abs() <= 1e-12);
        prop_assert!((0.0..=100.0).contains(&a.f1));
    }

    #[test]
    fn viterbi_is_legal_and_at_least_as_good_as_gold(
        (n, frame) in frame_strategy(8),
        seed in any::<u64>(),
    ) {
        let roles: Vec<String> = ROLES.iter().map(|r| r.to_string()).chain(["V".to_string()]).collect();
        let mut roles = roles;
        roles.sort();
        let mask = build_transition_mask(&roles).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lattice: Vec<Vec<f64>> = (0..n)
            .map(|_| Tensor::uniform(&[mask.len()], 3.0, &mut rng).into_data())
            .collect();
        let (path, score) = viterbi_indices(&lattice, &mask).unwrap();
        prop_assert!(mask.is_legal(&path));
        prop_assert!((sequence_score(&lattice, &path) - score).abs() < 1e-9);
        let gold: Vec<usize> = spans_to_bio(&frame, n)
            .unwrap()
            .tags()
            .iter()
            .map(|t| mask.tagset().index(t).unwrap())
            .collect();
        prop_assert!(mask.is_legal(&gold));
        prop_assert!(score >= sequence_score(&lattice, &gold) - 1e-12);
    }

    #[test]
    fn clipping_bounds_the_global_norm(values in prop::collection::vec(-50.0f64..50.0, 1..40), max in 0.1f64..5.0) {
        let mut store = ParameterStore::new();
        let id = store.add("w", Tensor::zeros(&[values.len()])).unwrap();
        store.accumulate_param(id, &values);
        let before = store.grad_norm();
        let scale = clip_global_norm(&mut store, max);
        prop_assert!(store.grad_norm() <= max + 1e-12);
        if before <= max {
            prop_assert_eq!(scale, 1.0);
        }
    }

    #[test]
    fn parameter_files_round_trip_bit_exact(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..30)) {
        let mut store = ParameterStore::new();
        store.add("a", Tensor::vector(values.clone())).unwrap();
        let back = ParameterStore::from_json(&store.to_json().unwrap()).unwrap();
        let got: Vec<u64> = back.iter().next().unwrap().value().data().iter().map(|v| v.to_bits()).collect();
        let want: Vec<u64> = values.iter().map(|v| v.to_bits()).collect();
        prop_assert_eq!(got, want);
    }
}
