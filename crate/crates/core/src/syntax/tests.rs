use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::numerics::grad_check;
use crate::synthetic::random_tree;

fn example_instance() -> DependencyTree {
    DependencyTree::from_conll_heads(
        &[2, 3, 0, 3, 3],
        ["nn", "nsubj", "root", "dobj", "punct"].map(String::from).to_vec(),
    )
    .unwrap()
}

fn label_vocab(tree: &DependencyTree) -> Vocab {
    let mut v = Vocab::new();
    for l in tree.labels() {
        v.insert(l);
    }
    v
}

/// Undirected BFS from `src`, returning distance and parent per node.
fn bfs(tree: &DependencyTree, src: usize) -> (Vec<usize>, Vec<Option<usize>>) {
    let n = tree.len();
    let mut adj = vec![Vec::new(); n];
    for (i, h) in tree.heads().iter().enumerate() {
        if let Some(h) = *h {
            adj[i].push(h);
            adj[h].push(i);
        }
    }
    let mut dist = vec![usize::MAX; n];
    let mut prev = vec![None; n];
    dist[src] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                prev[v] = Some(u);
                queue.push_back(v);
            }
        }
    }
    (dist, prev)
}

/// Depth by walking heads, independent of the tree's cached depths.
fn walk_depth(tree: &DependencyTree, mut i: usize) -> usize {
    let mut d = 0;
    while let Some(h) = tree.head(i) {
        i = h;
        d += 1;
    }
    d
}

#[test]
fn worked_example_features() {
    let t = example_instance();
    // Ms. = 0, plays = 2
    assert_eq!(t.lca(0, 2), 2);
    assert_eq!(tpf_extract(&t, 0, 2, DEFAULT_TPF_CLIP), (0, 2));
    assert_eq!(pattern_extract(&t, 0, 2), Pattern::Grandchild);
    assert_eq!(pattern_extract(&t, 3, 2), Pattern::Child);
    assert_eq!(pattern_extract(&t, 2, 2), Pattern::SelfNode);
    assert_eq!(pattern_extract(&t, 2, 0), Pattern::Grandparent);
    assert_eq!(pattern_extract(&t, 0, 3), Pattern::Other);
    assert_eq!(pattern_extract(&t, 1, 3), Pattern::Sibling);
    assert_eq!(sdp_paths(&t, 0, 2), (vec![0, 1, 2], vec![2]));
}

#[test]
fn pattern_table() {
    use Pattern::*;
    let cases = [
        ((0, 0), SelfNode),
        ((1, 0), Child),
        ((0, 1), Parent),
        ((2, 0), Grandchild),
        ((0, 2), Grandparent),
        ((1, 1), Sibling),
        ((3, 0), Descendant),
        ((0, 5), Ancestor),
        ((2, 1), Other),
        ((1, 2), Other),
    ];
    for ((w, p), want) in cases {
        assert_eq!(Pattern::from_distances(w, p), want, "({w},{p})");
    }
    for p in Pattern::ALL {
        assert_eq!(p.name().parse::<Pattern>().unwrap(), p);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, format!("\"{}\"", p.name()));
    }
}

#[test]
fn features_agree_with_bfs_on_random_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let n = rng.random_range(1..=12);
        let t = random_tree(n, &mut rng);
        for p in 0..n {
            let (dist, prev) = bfs(&t, p);
            for i in 0..n {
                let (d1, d2) = tpf_extract(&t, i, p, usize::MAX);
                assert_eq!(d1 + d2, dist[i]);
                // the ancestor is the shallowest node on the BFS path
                let mut path = vec![i];
                while let Some(u) = prev[*path.last().unwrap()] {
                    path.push(u);
                }
                let a = *path.iter().min_by_key(|&&u| walk_depth(&t, u)).unwrap();
                assert_eq!(t.lca(i, p), a);
                assert_eq!(d1, walk_depth(&t, p) - walk_depth(&t, a));
                assert_eq!(d2, walk_depth(&t, i) - walk_depth(&t, a));

                let (wp, pp) = sdp_paths(&t, i, p);
                assert_eq!(wp.len() + pp.len(), dist[i] + 2);
                let mut joined = wp.clone();
                joined.extend(pp.iter().rev().skip(1));
                assert_eq!(joined, path);

                let clipped = tpf_extract(&t, i, p, 2);
                assert_eq!(clipped, (d1.min(2), d2.min(2)));
                assert_eq!(tpf_extract(&t, p, i, usize::MAX), (d2, d1));
                assert_eq!(pattern_extract(&t, i, p), Pattern::from_distances(d2, d1));
            }
        }
    }
}

#[test]
fn tpf_rows_are_distinct_and_clipped() {
    let mut store = ParameterStore::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let table = TpfTable::register(&mut store, "tpf", 3, 2, 0.1, &mut rng).unwrap();
    assert_eq!(table.rows(), 16);
    let mut rows: Vec<usize> = (0..4)
        .flat_map(|a| (0..4).map(move |b| (a, b)))
        .map(|pair| table.row(pair))
        .collect();
    rows.sort();
    rows.dedup();
    assert_eq!(rows.len(), 16);
    assert_eq!(table.row((9, 1)), table.row((3, 1)));
}

struct Gru {
    store: ParameterStore,
    labels: LabelEmbeddings,
    gru: TreeGruParams,
}

fn gru_for(tree: &DependencyTree, seed: u64) -> Gru {
    let mut store = ParameterStore::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vocab = label_vocab(tree);
    for extra in ["x", "y", "z"] {
        vocab.insert(extra);
    }
    let labels = LabelEmbeddings::register(&mut store, "labels", vocab, 3, 0.5, &mut rng).unwrap();
    let gru = TreeGruParams::register(&mut store, "gru", 3, 4, &mut rng).unwrap();
    Gru { store, labels, gru }
}

fn values(tape: &Tape, nodes: &[NodeId]) -> Vec<Vec<f64>> {
    nodes.iter().map(|&n| tape.value(n).data().to_vec()).collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn matvec(m: &Tensor, x: &[f64]) -> Vec<f64> {
    let cols = m.shape()[1];
    (0..m.shape()[0])
        .map(|r| (0..cols).map(|c| m.data()[r * cols + c] * x[c]).sum())
        .collect()
}

#[test]
fn leaf_state_by_hand() {
    let t = example_instance();
    let g = gru_for(&t, 1);
    let mut tape = Tape::new(&g.store);
    let up = tree_gru_bottom_up(&mut tape, &t, &g.labels, &g.gru).unwrap();
    // token 0 ("Ms.", nn) is a leaf, so h = z ⊙ tanh(W l)
    let table = g.store.value(g.labels.param());
    let l = table.row(g.labels.vocab.get("nn")).to_vec();
    let gates = matvec(g.store.value(g.store.id("gru.up.w_gates").unwrap()), &l);
    let cand = matvec(g.store.value(g.store.id("gru.up.w").unwrap()), &l);
    let want: Vec<f64> = (0..4).map(|k| sigmoid(gates[16 + k]) * cand[k].tanh()).collect();
    let got = tape.value(up[0]).data();
    for k in 0..4 {
        assert!((got[k] - want[k]).abs() < 1e-12);
    }
}

#[test]
fn root_top_down_state_by_hand() {
    let t = example_instance();
    let g = gru_for(&t, 2);
    let mut tape = Tape::new(&g.store);
    let down = tree_gru_top_down(&mut tape, &t, &g.labels, &g.gru).unwrap();
    let table = g.store.value(g.labels.param());
    let l = table.row(g.labels.vocab.get("root")).to_vec();
    let gates = matvec(g.store.value(g.store.id("gru.down.w_gates").unwrap()), &l);
    let cand = matvec(g.store.value(g.store.id("gru.down.w").unwrap()), &l);
    let got = tape.value(down[2]).data();
    for k in 0..4 {
        let want = sigmoid(gates[4 + k]) * cand[k].tanh();
        assert!((got[k] - want).abs() < 1e-12);
    }
}

/// A random children-before-parents order: repeatedly pick any node
/// whose children are all done.
fn random_bottom_up_order(t: &DependencyTree, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = t.len();
    let mut done = vec![false; n];
    let mut order = Vec::new();
    while order.len() < n {
        let ready: Vec<usize> = (0..n)
            .filter(|&i| !done[i] && t.children(i).iter().all(|&c| done[c]))
            .collect();
        let pick = ready[rng.random_range(0..ready.len())];
        done[pick] = true;
        order.push(pick);
    }
    order
}

#[test]
fn bottom_up_ignores_visiting_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let n = rng.random_range(1..=10);
        let t = random_tree(n, &mut rng);
        let g = gru_for(&t, 4);
        let mut tape = Tape::new(&g.store);
        let a = tree_gru_bottom_up(&mut tape, &t, &g.labels, &g.gru).unwrap();
        let a = values(&tape, &a);
        let order = random_bottom_up_order(&t, &mut rng);
        let b = tree_gru_bottom_up_in_order(&mut tape, &t, &g.labels, &g.gru, &order).unwrap();
        assert_eq!(a, values(&tape, &b));
    }
}

#[test]
fn bad_visiting_order_is_rejected() {
    let t = example_instance();
    let g = gru_for(&t, 4);
    let mut tape = Tape::new(&g.store);
    assert!(tree_gru_bottom_up_in_order(&mut tape, &t, &g.labels, &g.gru, &[2, 0, 1, 3, 4]).is_err());
    assert!(tree_gru_bottom_up_in_order(&mut tape, &t, &g.labels, &g.gru, &[0, 1, 3, 4]).is_err());
}

#[test]
fn bottom_up_state_depends_only_on_the_subtree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let relabels = ["x", "y", "z"];
    for _ in 0..30 {
        let n = rng.random_range(2..=10);
        let t = random_tree(n, &mut rng);
        let g = gru_for(&t, 6);
        let j = rng.random_range(0..n);
        let t2 = t.with_label(j, relabels[rng.random_range(0..3)]);
        let mut tape = Tape::new(&g.store);
        let before = tree_gru_bottom_up(&mut tape, &t, &g.labels, &g.gru).unwrap();
        let before = values(&tape, &before);
        let after = tree_gru_bottom_up(&mut tape, &t2, &g.labels, &g.gru).unwrap();
        let after = values(&tape, &after);
        for i in 0..n {
            if !t.is_ancestor_or_self(j, i) {
                // j lies outside the subtree of i
                if !t.is_ancestor_or_self(i, j) {
                    assert_eq!(before[i], after[i]);
                }
            } else if i != j {
                // i is inside the subtree of j but not j itself
                assert_eq!(before[i], after[i]);
            }
        }
    }
}

#[test]
fn sdp_ignores_labels_off_the_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let n = rng.random_range(2..=10);
        let t = random_tree(n, &mut rng);
        let mut store = ParameterStore::new();
        let mut vocab = label_vocab(&t);
        vocab.insert("x");
        let labels = LabelEmbeddings::register(&mut store, "l", vocab, 3, 0.5, &mut rng).unwrap();
        let (i, p) = (rng.random_range(0..n), rng.random_range(0..n));
        let (wp, pp) = sdp_paths(&t, i, p);
        let off: Vec<usize> = (0..n).filter(|k| !wp.contains(k) && !pp.contains(k)).collect();
        let Some(&j) = off.first() else { continue };
        let t2 = t.with_label(j, "x");
        let mut tape = Tape::new(&store);
        let a = sdp_encode(&mut tape, &t, &labels, i, p).unwrap();
        let b = sdp_encode(&mut tape, &t2, &labels, i, p).unwrap();
        assert_eq!(tape.value(a).data(), tape.value(b).data());
    }
}

fn encoder(mode: SyntaxMode, tree: &DependencyTree) -> (ParameterStore, SyntaxEncoder) {
    let mut store = ParameterStore::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let dims = SyntaxDims {
        label_dim: 3,
        tree_gru_hidden: 2,
        tpf_dim: 4,
        tpf_clip: 7,
        pattern_dim: 2,
    };
    let enc = SyntaxEncoder::register(&mut store, mode, &dims, &label_vocab(tree), 0.5, &mut rng).unwrap();
    (store, enc)
}

#[test]
fn output_widths_match_dims() {
    let t = example_instance();
    for mode in [SyntaxMode::TreeGru, SyntaxMode::Sdp, SyntaxMode::Tpf, SyntaxMode::Pe] {
        let (store, enc) = encoder(mode, &t);
        let dims = SyntaxDims {
            label_dim: 3,
            tree_gru_hidden: 2,
            tpf_dim: 4,
            tpf_clip: 7,
            pattern_dim: 2,
        };
        let mut tape = Tape::new(&store);
        let out = enc.encode(&mut tape, Some(&t), 2).unwrap().unwrap();
        assert_eq!(out.len(), 5);
        for v in out {
            assert_eq!(tape.value(v).len(), dims.output_dim(mode), "{mode}");
        }
        assert!(enc.encode(&mut tape, None, 2).is_err());
    }
    let (store, enc) = encoder(SyntaxMode::None, &t);
    let mut tape = Tape::new(&store);
    assert!(enc.encode(&mut tape, None, 2).unwrap().is_none());
}

#[test]
fn tree_gru_output_does_not_depend_on_the_predicate() {
    let t = example_instance();
    let (store, enc) = encoder(SyntaxMode::TreeGru, &t);
    let mut tape = Tape::new(&store);
    let a = enc.encode(&mut tape, Some(&t), 0).unwrap().unwrap();
    let a = values(&tape, &a);
    let b = enc.encode(&mut tape, Some(&t), 3).unwrap().unwrap();
    assert_eq!(a, values(&tape, &b));
}

#[test]
fn bind_recovers_registered_encoders() {
    let t = example_instance();
    for mode in [SyntaxMode::TreeGru, SyntaxMode::Sdp, SyntaxMode::Tpf, SyntaxMode::Pe] {
        let (store, enc) = encoder(mode, &t);
        let dims = SyntaxDims {
            label_dim: 3,
            tree_gru_hidden: 2,
            tpf_dim: 4,
            tpf_clip: 7,
            pattern_dim: 2,
        };
        let bound = SyntaxEncoder::bind(&store, mode, &dims, &label_vocab(&t)).unwrap();
        let mut tape = Tape::new(&store);
        let a = enc.encode(&mut tape, Some(&t), 1).unwrap().unwrap();
        let a = values(&tape, &a);
        let b = bound.encode(&mut tape, Some(&t), 1).unwrap().unwrap();
        assert_eq!(a, values(&tape, &b));
        let wrong = SyntaxDims { label_dim: 5, tpf_dim: 5, ..dims };
        assert!(SyntaxEncoder::bind(&store, mode, &wrong, &label_vocab(&t)).is_err());
    }
}

#[test]
fn syntax_gradients_match_finite_differences() {
    let t = example_instance();
    for mode in [SyntaxMode::TreeGru, SyntaxMode::Sdp, SyntaxMode::Tpf, SyntaxMode::Pe] {
        let (store, enc) = encoder(mode, &t);
        let report = grad_check(
            &store,
            |tape: &mut Tape| {
                let out = enc.encode(tape, Some(&t), 2)?.unwrap();
                let squashed: Vec<NodeId> = out.into_iter().map(|v| tape.tanh(v)).collect();
                let all = tape.concat(&squashed)?;
                let prod = tape.hadamard(all, all)?;
                Ok(tape.sum_all(prod))
            },
            1e-5,
            1e-6,
        )
        .unwrap();
        assert!(report.passed(), "{mode}: {:?}", report.worst());
    }
}

#[test]
fn mode_names() {
    for (s, m) in [
        ("none", SyntaxMode::None),
        ("tree-gru", SyntaxMode::TreeGru),
        ("sdp", SyntaxMode::Sdp),
        ("tpf", SyntaxMode::Tpf),
        ("pe", SyntaxMode::Pe),
    ] {
        assert_eq!(s.parse::<SyntaxMode>().unwrap(), m);
        assert_eq!(m.to_string(), s);
        assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{s}\""));
    }
    assert!("gcn".parse::<SyntaxMode>().is_err());
}

#[test]
fn top_down_state_depends_only_on_the_root_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..30 {
        let n = rng.random_range(2..=10);
        let t = random_tree(n, &mut rng);
        let g = gru_for(&t, 13);
        let j = rng.random_range(0..n);
        let t2 = t.with_label(j, "y");
        let mut tape = Tape::new(&g.store);
        let before = tree_gru_top_down(&mut tape, &t, &g.labels, &g.gru).unwrap();
        let before = values(&tape, &before);
        let after = tree_gru_top_down(&mut tape, &t2, &g.labels, &g.gru).unwrap();
        let after = values(&tape, &after);
        for i in 0..n {
            if !t.is_ancestor_or_self(j, i) {
                assert_eq!(before[i], after[i]);
            }
        }
    }
}

#[test]
fn pe_and_tpf_ignore_nodes_off_both_root_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..50 {
        let n = rng.random_range(2..=10);
        let t = random_tree(n, &mut rng);
        let (i, p) = (rng.random_range(0..n), rng.random_range(0..n));
        let off: Vec<usize> = (0..n)
            .filter(|&k| !t.is_ancestor_or_self(k, i) && !t.is_ancestor_or_self(k, p))
            .collect();
        let Some(&j) = off.first() else { continue };
        let t2 = t.with_label(j, "x");
        for mode in [SyntaxMode::Tpf, SyntaxMode::Pe] {
            let mut store = ParameterStore::new();
            let mut vocab = label_vocab(&t);
            vocab.insert("x");
            let dims = SyntaxDims {
                label_dim: 3,
                tree_gru_hidden: 2,
                tpf_dim: 4,
                tpf_clip: 7,
                pattern_dim: 2,
            };
            let enc = SyntaxEncoder::register(&mut store, mode, &dims, &vocab, 0.5, &mut rng).unwrap();
            let mut tape = Tape::new(&store);
            let a = enc.encode(&mut tape, Some(&t), p).unwrap().unwrap();
            let b = enc.encode(&mut tape, Some(&t2), p).unwrap().unwrap();
            assert_eq!(tape.value(a[i]).data(), tape.value(b[i]).data(), "{mode}");
        }
    }
}
