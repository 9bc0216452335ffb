use super::LabelEmbeddings;
use crate::error::Result;
use crate::numerics::{NodeId, Tape};
use crate::treebank::DependencyTree;

/// The two halves of the shortest dependency path between word `i` and
/// predicate `p`, split at their lowest common ancestor. Both halves
/// include the ancestor.
pub fn sdp_paths(tree: &DependencyTree, i: usize, p: usize) -> (Vec<usize>, Vec<usize>) {
    let a = tree.lca(i, p);
    let word = tree.path_to_ancestor(i, a).expect("lca is an ancestor");
    let pred = tree.path_to_ancestor(p, a).expect("lca is an ancestor");
    (word, pred)
}

/// Max-pooled label embeddings over each half of the path,
/// `maxpool(l_j : j ∈ path(i,a)) ⊕ maxpool(l_k : k ∈ path(p,a))`.
pub fn sdp_encode(
    tape: &mut Tape,
    tree: &DependencyTree,
    labels: &LabelEmbeddings,
    i: usize,
    p: usize,
) -> Result<NodeId> {
    let (word, pred) = sdp_paths(tree, i, p);
    let pool = |tape: &mut Tape, path: &[usize]| -> Result<NodeId> {
        let vecs = path
            .iter()
            .map(|&j| labels.of_token(tape, tree, j))
            .collect::<Result<Vec<_>>>()?;
        tape.max_pool(&vecs)
    };
    let left = pool(tape, &word)?;
    let right = pool(tape, &pred)?;
    tape.concat(&[left, right])
}
