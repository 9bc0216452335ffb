//! Sentences, dependency trees and predicate frames, plus the tree walks
//! that the syntax encoders are built on.
//!
//! Token indices are 0-based everywhere inside the crate. The CoNLL
//! readers and writers convert from and to the 1-based file convention.

mod bio;
mod conllx;
mod props;

pub use bio::{bio_to_spans, spans_to_bio, Tag, TagSequence};
pub use conllx::{parse_conllx, write_conllx};
pub use props::{parse_props, write_props, PropsBlock};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relation label attached to the artificial root arc.
pub const ROOT_LABEL: &str = "root";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    tokens: Vec<String>,
}

impl Sentence {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Result<Self> {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(Error::Input("empty sentence".into()));
        }
        if let Some(bad) = tokens
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(Error::Input(format!("invalid token {bad:?}")));
        }
        Ok(Sentence { tokens })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// A dependency tree over `n` tokens with a single root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyTree {
    heads: Vec<Option<usize>>,
    labels: Vec<String>,
    root: usize,
    depth: Vec<usize>,
    children: Vec<Vec<usize>>,
}

impl DependencyTree {
    /// Builds a tree from 0-based heads (`None` marks the root).
    pub fn new(heads: Vec<Option<usize>>, labels: Vec<String>) -> Result<Self> {
        let n = heads.len();
        if n == 0 {
            return Err(Error::Tree("empty tree".into()));
        }
        if labels.len() != n {
            return Err(Error::Tree(format!(
                "{} heads but {} labels",
                n,
                labels.len()
            )));
        }
        let mut root = None;
        for (i, head) in heads.iter().enumerate() {
            match *head {
                None => {
                    if let Some(r) = root {
                        return Err(Error::Tree(format!(
                            "multiple roots: tokens {} and {}",
                            r + 1,
                            i + 1
                        )));
                    }
                    root = Some(i);
                }
                Some(h) if h == i => {
                    return Err(Error::Tree(format!("token {} is its own head", i + 1)))
                }
                Some(h) if h >= n => {
                    return Err(Error::Tree(format!(
                        "token {} has head {} outside the sentence",
                        i + 1,
                        h + 1
                    )))
                }
                Some(_) => {}
            }
        }
        let Some(root) = root else {
            // Without a root every walk upwards ends in a cycle.
            let mut cur = 0;
            for _ in 0..n {
                cur = heads[cur].unwrap();
            }
            return Err(Error::Tree(format!(
                "cycle through token {} (no token attaches to the root)",
                cur + 1
            )));
        };

        // Depths by walking up with memoization; a walk longer than n is a cycle.
        let mut depth: Vec<Option<usize>> = vec![None; n];
        depth[root] = Some(0);
        for start in 0..n {
            let mut chain = Vec::new();
            let mut cur = start;
            while depth[cur].is_none() {
                chain.push(cur);
                if chain.len() > n {
                    return Err(Error::Tree(format!(
                        "cycle through token {}",
                        start + 1
                    )));
                }
                cur = heads[cur].expect("only the root has no head");
            }
            let mut d = depth[cur].unwrap();
            for &node in chain.iter().rev() {
                d += 1;
                depth[node] = Some(d);
            }
        }

        let mut children = vec![Vec::new(); n];
        for (i, head) in heads.iter().enumerate() {
            if let Some(h) = head {
                children[*h].push(i);
            }
        }

        Ok(DependencyTree {
            heads,
            labels,
            root,
            depth: depth.into_iter().map(Option::unwrap).collect(),
            children,
        })
    }

    /// Builds a tree from CoNLL-style heads: 0 is the root, otherwise a
    /// 1-based parent index.
    pub fn from_conll_heads(heads: &[usize], labels: Vec<String>) -> Result<Self> {
        let n = heads.len();
        let heads = heads
            .iter()
            .enumerate()
            .map(|(i, &h)| match h {
                0 => Ok(None),
                h if h <= n => Ok(Some(h - 1)),
                h => Err(Error::Tree(format!(
                    "token {} has head {} outside the sentence",
                    i + 1,
                    h
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(heads, labels)
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn head(&self, i: usize) -> Option<usize> {
        self.heads[i]
    }

    pub fn heads(&self) -> &[Option<usize>] {
        &self.heads
    }

    /// Heads in CoNLL convention (0 = root, else 1-based).
    pub fn conll_heads(&self) -> Vec<usize> {
        self.heads.iter().map(|h| h.map_or(0, |h| h + 1)).collect()
    }

    /// Relation label between token `i` and its head.
    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Number of arcs between `i` and the root.
    pub fn depth(&self, i: usize) -> usize {
        self.depth[i]
    }

    /// Children of `i` in surface order.
    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// A children-before-parents ordering of all tokens.
    pub fn bottom_up_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.depth[b].cmp(&self.depth[a]).then(a.cmp(&b)));
        order
    }

    /// A parents-before-children ordering of all tokens.
    pub fn top_down_order(&self) -> Vec<usize> {
        let mut order = self.bottom_up_order();
        order.reverse();
        order
    }

    /// Lowest common ancestor of `i` and `j`. A node is its own ancestor.
    pub fn lca(&self, mut i: usize, mut j: usize) -> usize {
        while self.depth[i] > self.depth[j] {
            i = self.heads[i].unwrap();
        }
        while self.depth[j] > self.depth[i] {
            j = self.heads[j].unwrap();
        }
        while i != j {
            i = self.heads[i].unwrap();
            j = self.heads[j].unwrap();
        }
        i
    }

    /// Whether `a` lies on the path from `i` to the root (inclusive).
    pub fn is_ancestor_or_self(&self, a: usize, i: usize) -> bool {
        self.depth[a] <= self.depth[i] && self.lca(a, i) == a
    }

    /// The nodes from `i` up to its ancestor `a`, both endpoints included.
    pub fn path_to_ancestor(&self, i: usize, a: usize) -> Result<Vec<usize>> {
        if i >= self.len() || a >= self.len() || !self.is_ancestor_or_self(a, i) {
            return Err(Error::Tree(format!(
                "token {} is not an ancestor of token {}",
                a + 1,
                i + 1
            )));
        }
        let mut path = vec![i];
        let mut cur = i;
        while cur != a {
            cur = self.heads[cur].unwrap();
            path.push(cur);
        }
        Ok(path)
    }

    /// Number of arcs on the tree path between `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> usize {
        let a = self.lca(i, j);
        self.depth[i] + self.depth[j] - 2 * self.depth[a]
    }

    /// Copy of the tree with one relation label replaced.
    pub fn with_label(&self, i: usize, label: impl Into<String>) -> Self {
        let mut tree = self.clone();
        tree.labels[i] = label.into();
        tree
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabeledSpan {
    pub role: String,
    /// First token, 0-based.
    pub start: usize,
    /// Last token, 0-based and inclusive.
    pub end: usize,
}

impl LabeledSpan {
    pub fn new(role: impl Into<String>, start: usize, end: usize) -> Self {
        LabeledSpan {
            role: role.into(),
            start,
            end,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn overlaps(&self, other: &LabeledSpan) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }

    pub fn same_bounds(&self, other: &LabeledSpan) -> bool {
        self.start == other.start && self.end == other.end
    }
}

impl fmt::Display for LabeledSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:[{},{}]", self.role, self.start + 1, self.end + 1)
    }
}

/// One predicate and its labeled argument spans. The predicate's own `V`
/// span is implied by `predicate` and never stored in `spans`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateFrame {
    pub predicate: usize,
    pub spans: Vec<LabeledSpan>,
}

impl PredicateFrame {
    /// Validates and sorts the spans by position.
    pub fn new(predicate: usize, mut spans: Vec<LabeledSpan>) -> Result<Self> {
        spans.sort_by_key(|s| (s.start, s.end));
        check_spans(&spans)?;
        if spans.iter().any(|s| s.role == "V") {
            return Err(Error::Span("V spans are implied by the predicate".into()));
        }
        Ok(PredicateFrame { predicate, spans })
    }

    /// Validates against a sentence length.
    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.predicate >= n {
            return Err(Error::Span(format!(
                "predicate {} outside sentence of length {}",
                self.predicate + 1,
                n
            )));
        }
        if let Some(s) = self.spans.iter().find(|s| s.end >= n) {
            return Err(Error::Span(format!(
                "span {s} outside sentence of length {n}"
            )));
        }
        Ok(())
    }
}

/// Checks that sorted spans are well formed and pairwise disjoint.
pub(crate) fn check_spans(spans: &[LabeledSpan]) -> Result<()> {
    for s in spans {
        if s.start > s.end {
            return Err(Error::Span(format!("span {s} ends before it starts")));
        }
        if s.role.is_empty() || s.role.chars().any(|c| c.is_whitespace() || "()*".contains(c))
        {
            return Err(Error::Span(format!("invalid role {:?}", s.role)));
        }
    }
    for w in spans.windows(2) {
        if w[0].overlaps(&w[1]) {
            return Err(Error::Span(format!("spans {} and {} overlap", w[0], w[1])));
        }
    }
    Ok(())
}
