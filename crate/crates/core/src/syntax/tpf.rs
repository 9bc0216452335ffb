use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{NodeId, ParamId, ParameterStore, Tape, Tensor};
use crate::treebank::DependencyTree;

/// Default clip bound for tree position distances.
pub const DEFAULT_TPF_CLIP: usize = 7;

/// Tree position feature of word `i` for predicate `p`: the number of arcs
/// from the predicate up to their lowest common ancestor, then from the
/// word up to it. Both are clipped to `clip`.
pub fn tpf_extract(tree: &DependencyTree, i: usize, p: usize, clip: usize) -> (usize, usize) {
    let a = tree.lca(i, p);
    let to_pred = tree.depth(p) - tree.depth(a);
    let to_word = tree.depth(i) - tree.depth(a);
    (to_pred.min(clip), to_word.min(clip))
}

/// One embedding per clipped distance pair, `(clip + 1)²` rows.
#[derive(Clone, Debug)]
pub struct TpfTable {
    pub clip: usize,
    pub dim: usize,
    table: ParamId,
}

impl TpfTable {
    pub fn register<R: Rng + ?Sized>(
        store: &mut ParameterStore,
        name: &str,
        clip: usize,
        dim: usize,
        init: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let rows = (clip + 1) * (clip + 1);
        let table = store.add(name, Tensor::uniform(&[rows, dim], init, rng))?;
        Ok(TpfTable { clip, dim, table })
    }

    pub fn bind(store: &ParameterStore, name: &str, clip: usize, dim: usize) -> Result<Self> {
        let table = store.id(name)?;
        let expected = [(clip + 1) * (clip + 1), dim];
        if store.value(table).shape() != expected {
            return Err(Error::Incompatible(format!(
                "{name} has shape {:?}, expected {:?}",
                store.value(table).shape(),
                expected
            )));
        }
        Ok(TpfTable { clip, dim, table })
    }

    pub fn rows(&self) -> usize {
        (self.clip + 1) * (self.clip + 1)
    }

    /// Table row of a pair, clipping out-of-range components.
    pub fn row(&self, (d1, d2): (usize, usize)) -> usize {
        d1.min(self.clip) * (self.clip + 1) + d2.min(self.clip)
    }

    pub fn param(&self) -> ParamId {
        self.table
    }
}

pub fn tpf_encode(tape: &mut Tape, pair: (usize, usize), table: &TpfTable) -> Result<NodeId> {
    let t = tape.param(table.table);
    tape.lookup(t, table.row(pair))
}
