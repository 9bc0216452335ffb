use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LabelEmbeddings;
use crate::error::{Error, Result};
use crate::numerics::{NodeId, ParamId, ParameterStore, Tape, Tensor};
use crate::treebank::DependencyTree;

/// Structural relation of a word to the predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    #[serde(rename = "self")]
    SelfNode,
    Child,
    Parent,
    Grandchild,
    Grandparent,
    Sibling,
    Descendant,
    Ancestor,
    Other,
}

impl Pattern {
    pub const ALL: [Pattern; 9] = [
        Pattern::SelfNode,
        Pattern::Child,
        Pattern::Parent,
        Pattern::Grandchild,
        Pattern::Grandparent,
        Pattern::Sibling,
        Pattern::Descendant,
        Pattern::Ancestor,
        Pattern::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pattern::SelfNode => "self",
            Pattern::Child => "child",
            Pattern::Parent => "parent",
            Pattern::Grandchild => "grandchild",
            Pattern::Grandparent => "grandparent",
            Pattern::Sibling => "sibling",
            Pattern::Descendant => "descendant",
            Pattern::Ancestor => "ancestor",
            Pattern::Other => "other",
        }
    }

    pub fn index(self) -> usize {
        Pattern::ALL.iter().position(|&p| p == self).unwrap()
    }

    /// Classifies by arcs from the word up to the common ancestor and from
    /// the predicate up to it.
    pub fn from_distances(word_up: usize, pred_up: usize) -> Pattern {
        match (word_up, pred_up) {
            (0, 0) => Pattern::SelfNode,
            (1, 0) => Pattern::Child,
            (0, 1) => Pattern::Parent,
            (2, 0) => Pattern::Grandchild,
            (0, 2) => Pattern::Grandparent,
            (1, 1) => Pattern::Sibling,
            (_, 0) => Pattern::Descendant,
            (0, _) => Pattern::Ancestor,
            _ => Pattern::Other,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pattern::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown pattern {s:?}")))
    }
}

/// Pattern of word `i` relative to predicate `p`.
pub fn pattern_extract(tree: &DependencyTree, i: usize, p: usize) -> Pattern {
    let a = tree.lca(i, p);
    Pattern::from_distances(tree.depth(i) - tree.depth(a), tree.depth(p) - tree.depth(a))
}

#[derive(Clone, Debug)]
pub struct PatternEmbeddings {
    pub dim: usize,
    table: ParamId,
}

impl PatternEmbeddings {
    pub fn register<R: Rng + ?Sized>(
        store: &mut ParameterStore,
        name: &str,
        dim: usize,
        init: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let table = store.add(name, Tensor::uniform(&[Pattern::ALL.len(), dim], init, rng))?;
        Ok(PatternEmbeddings { dim, table })
    }

    pub fn bind(store: &ParameterStore, name: &str, dim: usize) -> Result<Self> {
        let table = store.id(name)?;
        let expected = [Pattern::ALL.len(), dim];
        if store.value(table).shape() != expected {
            return Err(Error::Incompatible(format!(
                "{name} has shape {:?}, expected {:?}",
                store.value(table).shape(),
                expected
            )));
        }
        Ok(PatternEmbeddings { dim, table })
    }

    pub fn param(&self) -> ParamId {
        self.table
    }
}

/// `emb(pattern(i,p)) ⊕ l_i ⊕ l_a ⊕ l_p`, where `a` is the lowest common
/// ancestor and `l_a` its arc label to its own head.
pub fn pe_encode(
    tape: &mut Tape,
    tree: &DependencyTree,
    labels: &LabelEmbeddings,
    patterns: &PatternEmbeddings,
    i: usize,
    p: usize,
) -> Result<NodeId> {
    let a = tree.lca(i, p);
    let table = tape.param(patterns.table);
    let pat = tape.lookup(table, pattern_extract(tree, i, p).index())?;
    let li = labels.of_token(tape, tree, i)?;
    let la = labels.of_token(tape, tree, a)?;
    let lp = labels.of_token(tape, tree, p)?;
    tape.concat(&[pat, li, la, lp])
}
