//! Seeded generators for random trees and small synthetic SRL corpora.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::model::Instance;
use crate::treebank::{DependencyTree, LabeledSpan, PredicateFrame, Sentence, ROOT_LABEL};

const RELATIONS: [&str; 6] = ["nsubj", "dobj", "prep", "pobj", "amod", "det"];

/// A uniformly shaped random tree: tokens are attached in a random order,
/// each to a token placed before it. Labels come from a small inventory.
pub fn random_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DependencyTree {
    assert!(n > 0);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut heads = vec![None; n];
    let mut labels = vec![ROOT_LABEL.to_string(); n];
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        heads[order[k]] = Some(parent);
        labels[order[k]] = RELATIONS[rng.random_range(0..RELATIONS.len())].to_string();
    }
    DependencyTree::new(heads, labels).expect("attachment to earlier nodes is acyclic")
}

fn sentence(words: Vec<String>) -> Sentence {
    Sentence::new(words).expect("generated tokens are non-empty")
}

/// Sentences in which the argument role is carried only by the tree.
///
/// Each sentence has one verb whose `nsubj` dependent is `A0` and whose
/// `dobj` dependent is `A1`, plus a distractor noun attached under one of
/// them with relation `nmod` and some filler tokens under the verb. All
/// tokens are shuffled, and the nouns are drawn from one shared pool, so
/// neither word identity nor surface position tells the roles apart.
pub fn relation_role_corpus<R: Rng + ?Sized>(sentences: usize, rng: &mut R) -> Vec<Instance> {
    let nouns: Vec<String> = (0..12).map(|k| format!("noun{k}")).collect();
    let verbs: Vec<String> = (0..4).map(|k| format!("verb{k}")).collect();
    let fillers: Vec<String> = (0..3).map(|k| format!("adv{k}")).collect();

    (0..sentences)
        .map(|_| {
            // slots: 0 verb, 1 subject, 2 object, 3 distractor, 4.. fillers
            let n_fill = rng.random_range(0..=1);
            let n = 4 + n_fill;
            let mut pos: Vec<usize> = (0..n).collect();
            pos.shuffle(rng);
            let picked: Vec<&String> = nouns.choose_multiple(rng, 3).collect();
            let mut words = vec![String::new(); n];
            words[pos[0]] = verbs.choose(rng).unwrap().clone();
            words[pos[1]] = picked[0].clone();
            words[pos[2]] = picked[1].clone();
            words[pos[3]] = picked[2].clone();
            for s in 4..n {
                words[pos[s]] = fillers.choose(rng).unwrap().clone();
            }
            let mut heads = vec![Some(pos[0]); n];
            let mut labels = vec!["advmod".to_string(); n];
            heads[pos[0]] = None;
            labels[pos[0]] = ROOT_LABEL.to_string();
            labels[pos[1]] = "nsubj".into();
            labels[pos[2]] = "dobj".into();
            heads[pos[3]] = Some(pos[1 + rng.random_range(0..2)]);
            labels[pos[3]] = "nmod".into();
            let tree = DependencyTree::new(heads, labels).unwrap();
            let frame = PredicateFrame::new(
                pos[0],
                vec![
                    LabeledSpan::new("A0", pos[1], pos[1]),
                    LabeledSpan::new("A1", pos[2], pos[2]),
                ],
            )
            .unwrap();
            Instance::new(sentence(words), Some(tree), vec![frame]).unwrap()
        })
        .collect()
}

/// Short sentences with random trees and one or two predicates whose
/// arguments are random contiguous spans. Used for memorization checks.
pub fn random_srl_corpus<R: Rng + ?Sized>(sentences: usize, rng: &mut R) -> Vec<Instance> {
    let roles = ["A0", "A1", "A2", "AM-TMP"];
    (0..sentences)
        .map(|_| {
            let n = rng.random_range(4..=7);
            let words = (0..n).map(|_| format!("w{}", rng.random_range(0..30))).collect();
            let tree = random_tree(n, rng);
            let n_pred = rng.random_range(1..=2);
            let mut preds: Vec<usize> = (0..n).collect();
            preds.shuffle(rng);
            let mut frames: Vec<PredicateFrame> = preds[..n_pred]
                .iter()
                .map(|&p| {
                    let mut spans = Vec::new();
                    let mut i = 0;
                    while i < n {
                        if i != p && rng.random_bool(0.4) {
                            let mut end = i;
                            while end + 1 < n && end + 1 != p && rng.random_bool(0.4) {
                                end += 1;
                            }
                            let role = roles[rng.random_range(0..roles.len())];
                            spans.push(LabeledSpan::new(role, i, end));
                            i = end + 1;
                        } else {
                            i += 1;
                        }
                    }
                    PredicateFrame::new(p, spans).unwrap()
                })
                .collect();
            frames.sort_by_key(|f| f.predicate);
            Instance::new(sentence(words), Some(tree), frames).unwrap()
        })
        .collect()
}
