//! Syntax-aware word representations computed from a dependency tree and
//! a predicate: Tree-GRU, shortest-path pooling (SDP), tree position
//! features (TPF) and pattern embeddings (PE).

mod pattern;
mod sdp;
mod tpf;
mod tree_gru;

pub use pattern::{pattern_extract, pe_encode, Pattern, PatternEmbeddings};
pub use sdp::{sdp_encode, sdp_paths};
pub use tpf::{tpf_encode, tpf_extract, TpfTable, DEFAULT_TPF_CLIP};
pub use tree_gru::{
    tree_gru_bottom_up, tree_gru_bottom_up_in_order, tree_gru_encode, tree_gru_top_down,
    TreeGruParams,
};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{NodeId, ParamId, ParameterStore, Tape, Tensor};
use crate::treebank::DependencyTree;
use crate::vocab::Vocab;

/// Relation-label embeddings with an unknown row at index 0.
#[derive(Clone, Debug)]
pub struct LabelEmbeddings {
    pub vocab: Vocab,
    pub dim: usize,
    table: ParamId,
}

impl LabelEmbeddings {
    pub fn register<R: Rng + ?Sized>(
        store: &mut ParameterStore,
        name: &str,
        vocab: Vocab,
        dim: usize,
        init: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let table = store.add(name, Tensor::uniform(&[vocab.len(), dim], init, rng))?;
        Ok(LabelEmbeddings { vocab, dim, table })
    }

    pub fn bind(store: &ParameterStore, name: &str, vocab: Vocab, dim: usize) -> Result<Self> {
        let table = store.id(name)?;
        let expected = [vocab.len(), dim];
        if store.value(table).shape() != expected {
            return Err(Error::Incompatible(format!(
                "{name} has shape {:?}, expected {:?}",
                store.value(table).shape(),
                expected
            )));
        }
        Ok(LabelEmbeddings { vocab, dim, table })
    }

    pub fn param(&self) -> ParamId {
        self.table
    }

    pub fn lookup(&self, tape: &mut Tape, label: &str) -> Result<NodeId> {
        let t = tape.param(self.table);
        tape.lookup(t, self.vocab.get(label))
    }

    /// Embedding of the arc label between token `i` and its head.
    pub fn of_token(&self, tape: &mut Tape, tree: &DependencyTree, i: usize) -> Result<NodeId> {
        self.lookup(tape, tree.label(i))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntaxMode {
    #[default]
    None,
    TreeGru,
    Sdp,
    Tpf,
    Pe,
}

impl SyntaxMode {
    pub const ALL: [SyntaxMode; 5] = [
        SyntaxMode::None,
        SyntaxMode::TreeGru,
        SyntaxMode::Sdp,
        SyntaxMode::Tpf,
        SyntaxMode::Pe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SyntaxMode::None => "none",
            SyntaxMode::TreeGru => "tree-gru",
            SyntaxMode::Sdp => "sdp",
            SyntaxMode::Tpf => "tpf",
            SyntaxMode::Pe => "pe",
        }
    }

    pub fn needs_tree(self) -> bool {
        self != SyntaxMode::None
    }
}

impl fmt::Display for SyntaxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SyntaxMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SyntaxMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown syntax mode {s:?}")))
    }
}

/// Sizes of the syntax components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntaxDims {
    pub label_dim: usize,
    pub tree_gru_hidden: usize,
    pub tpf_dim: usize,
    pub tpf_clip: usize,
    pub pattern_dim: usize,
}

impl Default for SyntaxDims {
    fn default() -> Self {
        SyntaxDims {
            label_dim: 100,
            tree_gru_hidden: 100,
            tpf_dim: 100,
            tpf_clip: DEFAULT_TPF_CLIP,
            pattern_dim: 100,
        }
    }
}

impl SyntaxDims {
    /// Width of the per-token syntax vector a mode produces.
    pub fn output_dim(&self, mode: SyntaxMode) -> usize {
        match mode {
            SyntaxMode::None => 0,
            SyntaxMode::TreeGru => 2 * self.tree_gru_hidden,
            SyntaxMode::Sdp => 2 * self.label_dim,
            SyntaxMode::Tpf => self.tpf_dim,
            SyntaxMode::Pe => self.pattern_dim + 3 * self.label_dim,
        }
    }
}

/// The parameters of whichever syntax mode a model uses.
#[derive(Clone, Debug)]
pub enum SyntaxEncoder {
    None,
    TreeGru {
        labels: LabelEmbeddings,
        gru: TreeGruParams,
    },
    Sdp {
        labels: LabelEmbeddings,
    },
    Tpf {
        table: TpfTable,
    },
    Pe {
        labels: LabelEmbeddings,
        patterns: PatternEmbeddings,
    },
}

const LABELS: &str = "syntax.labels";
const TREE_GRU: &str = "syntax.tree_gru";
const TPF: &str = "syntax.tpf";
const PATTERNS: &str = "syntax.patterns";

impl SyntaxEncoder {
    pub fn register<R: Rng + ?Sized>(
        store: &mut ParameterStore,
        mode: SyntaxMode,
        dims: &SyntaxDims,
        label_vocab: &Vocab,
        init: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let labels = |store: &mut ParameterStore, rng: &mut R| {
            LabelEmbeddings::register(store, LABELS, label_vocab.clone(), dims.label_dim, init, rng)
        };
        Ok(match mode {
            SyntaxMode::None => SyntaxEncoder::None,
            SyntaxMode::TreeGru => {
                let labels = labels(store, rng)?;
                let gru = TreeGruParams::register(
                    store,
                    TREE_GRU,
                    dims.label_dim,
                    dims.tree_gru_hidden,
                    rng,
                )?;
                SyntaxEncoder::TreeGru { labels, gru }
            }
            SyntaxMode::Sdp => SyntaxEncoder::Sdp {
                labels: labels(store, rng)?,
            },
            SyntaxMode::Tpf => SyntaxEncoder::Tpf {
                table: TpfTable::register(store, TPF, dims.tpf_clip, dims.tpf_dim, init, rng)?,
            },
            SyntaxMode::Pe => {
                let labels = labels(store, rng)?;
                let patterns =
                    PatternEmbeddings::register(store, PATTERNS, dims.pattern_dim, init, rng)?;
                SyntaxEncoder::Pe { labels, patterns }
            }
        })
    }

    pub fn bind(
        store: &ParameterStore,
        mode: SyntaxMode,
        dims: &SyntaxDims,
        label_vocab: &Vocab,
    ) -> Result<Self> {
        let labels = || LabelEmbeddings::bind(store, LABELS, label_vocab.clone(), dims.label_dim);
        Ok(match mode {
            SyntaxMode::None => SyntaxEncoder::None,
            SyntaxMode::TreeGru => SyntaxEncoder::TreeGru {
                labels: labels()?,
                gru: TreeGruParams::bind(store, TREE_GRU, dims.label_dim, dims.tree_gru_hidden)?,
            },
            SyntaxMode::Sdp => SyntaxEncoder::Sdp { labels: labels()? },
            SyntaxMode::Tpf => SyntaxEncoder::Tpf {
                table: TpfTable::bind(store, TPF, dims.tpf_clip, dims.tpf_dim)?,
            },
            SyntaxMode::Pe => SyntaxEncoder::Pe {
                labels: labels()?,
                patterns: PatternEmbeddings::bind(store, PATTERNS, dims.pattern_dim)?,
            },
        })
    }

    pub fn mode(&self) -> SyntaxMode {
        match self {
            SyntaxEncoder::None => SyntaxMode::None,
            SyntaxEncoder::TreeGru { .. } => SyntaxMode::TreeGru,
            SyntaxEncoder::Sdp { .. } => SyntaxMode::Sdp,
            SyntaxEncoder::Tpf { .. } => SyntaxMode::Tpf,
            SyntaxEncoder::Pe { .. } => SyntaxMode::Pe,
        }
    }

    /// Per-token syntax vectors for predicate `p`, or `None` in baseline
    /// mode.
    pub fn encode(
        &self,
        tape: &mut Tape,
        tree: Option<&DependencyTree>,
        p: usize,
    ) -> Result<Option<Vec<NodeId>>> {
        if let SyntaxEncoder::None = self {
            return Ok(None);
        }
        let tree = tree.ok_or_else(|| {
            Error::Input(format!("syntax mode {} needs a dependency tree", self.mode()))
        })?;
        let n = tree.len();
        let vecs = match self {
            SyntaxEncoder::None => unreachable!(),
            SyntaxEncoder::TreeGru { labels, gru } => tree_gru_encode(tape, tree, labels, gru)?,
            SyntaxEncoder::Sdp { labels } => (0..n)
                .map(|i| sdp_encode(tape, tree, labels, i, p))
                .collect::<Result<_>>()?,
            SyntaxEncoder::Tpf { table } => (0..n)
                .map(|i| tpf_encode(tape, tpf_extract(tree, i, p, table.clip), table))
                .collect::<Result<_>>()?,
            SyntaxEncoder::Pe { labels, patterns } => (0..n)
                .map(|i| pe_encode(tape, tree, labels, patterns, i, p))
                .collect::<Result<_>>()?,
        };
        Ok(Some(vecs))
    }
}

#[cfg(test)]
mod tests;
