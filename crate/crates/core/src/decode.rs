//! Constrained Viterbi decoding over BIO tag lattices.
//!
//! Tags are indexed `O, B-r0, I-r0, B-r1, I-r1, ...` in role order. Ties
//! are broken towards the lowest tag index at every DP cell and at the
//! final position, so among equally scoring paths the one that is smallest
//! when read from the last position backwards wins.
//! [`brute_force_decode`] enumerates with the same rule.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::treebank::{Tag, TagSequence};

/// The tag inventory R' = ({B, I} × R) ∪ {O}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct TagSet {
    roles: Vec<String>,
    tags: Vec<Tag>,
    index: HashMap<Tag, usize>,
}

impl From<Vec<String>> for TagSet {
    fn from(roles: Vec<String>) -> Self {
        let mut tags = vec![Tag::O];
        for r in &roles {
            tags.push(Tag::B(r.clone()));
            tags.push(Tag::I(r.clone()));
        }
        let index = tags.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        TagSet { roles, tags, index }
    }
}

impl From<TagSet> for Vec<String> {
    fn from(set: TagSet) -> Self {
        set.roles
    }
}

impl TagSet {
    pub fn new(roles: Vec<String>) -> Result<Self> {
        if roles.is_empty() {
            return Err(Error::Decode("empty role list".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for r in &roles {
            if r.is_empty() || !seen.insert(r) {
                return Err(Error::Decode(format!("invalid or duplicate role {r:?}")));
            }
        }
        Ok(roles.into())
    }

    pub fn roles(&self) -> &[String] {
        &self.roles
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn index(&self, tag: &Tag) -> Option<usize> {
        self.index.get(tag).copied()
    }

    pub fn tag(&self, i: usize) -> &Tag {
        &self.tags[i]
    }

    /// Tag sequence for indices produced by a decoder over this set.
    pub fn sequence(&self, indices: &[usize]) -> Result<TagSequence> {
        TagSequence::new(indices.iter().map(|&i| self.tags[i].clone()).collect())
    }
}

/// Which tag may follow which, and which may start a sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionMask {
    tagset: TagSet,
    allowed: Vec<bool>,
    start: Vec<bool>,
}

impl TransitionMask {
    pub fn tagset(&self) -> &TagSet {
        &self.tagset
    }

    pub fn len(&self) -> usize {
        self.start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.start.is_empty()
    }

    pub fn allowed(&self, prev: usize, next: usize) -> bool {
        self.allowed[prev * self.len() + next]
    }

    pub fn can_start(&self, tag: usize) -> bool {
        self.start[tag]
    }

    pub fn is_legal(&self, tags: &[usize]) -> bool {
        match tags.first() {
            None => true,
            Some(&t) => {
                self.can_start(t) && tags.windows(2).all(|w| self.allowed(w[0], w[1]))
            }
        }
    }
}

pub fn build_transition_mask(roles: &[String]) -> Result<TransitionMask> {
    let tagset = TagSet::new(roles.to_vec())?;
    let k = tagset.len();
    let mut allowed = vec![false; k * k];
    for (i, prev) in tagset.tags().iter().enumerate() {
        for (j, next) in tagset.tags().iter().enumerate() {
            allowed[i * k + j] = Tag::may_precede(Some(prev), next);
        }
    }
    let start = tagset
        .tags()
        .iter()
        .map(|t| Tag::may_precede(None, t))
        .collect();
    Ok(TransitionMask {
        tagset,
        allowed,
        start,
    })
}

/// Sum of per-position log-probabilities of `tags`, left to right.
pub fn sequence_score(log_dists: &[Vec<f64>], tags: &[usize]) -> f64 {
    let mut score = 0.0;
    for (i, (row, &t)) in log_dists.iter().zip(tags).enumerate() {
        score = if i == 0 { row[t] } else { score + row[t] };
    }
    score
}

fn check_lattice(log_dists: &[Vec<f64>], mask: &TransitionMask) -> Result<()> {
    if log_dists.is_empty() {
        return Err(Error::Decode("empty lattice".into()));
    }
    if let Some(row) = log_dists.iter().find(|r| r.len() != mask.len()) {
        return Err(Error::Decode(format!(
            "lattice row has {} scores, tag set has {}",
            row.len(),
            mask.len()
        )));
    }
    Ok(())
}

/// Highest-scoring legal path as tag indices plus its score.
pub fn viterbi_indices(log_dists: &[Vec<f64>], mask: &TransitionMask) -> Result<(Vec<usize>, f64)> {
    check_lattice(log_dists, mask)?;
    let n = log_dists.len();
    let k = mask.len();
    let mut best: Vec<Option<f64>> = (0..k)
        .map(|t| mask.can_start(t).then(|| log_dists[0][t]))
        .collect();
    let mut back = vec![vec![0usize; k]; n];
    for i in 1..n {
        let mut next = vec![None; k];
        for t in 0..k {
            let mut cell: Option<(f64, usize)> = None;
            for (p, score) in best.iter().enumerate() {
                let Some(score) = *score else { continue };
                if !mask.allowed(p, t) {
                    continue;
                }
                if cell.is_none_or(|(s, _)| score > s) {
                    cell = Some((score, p));
                }
            }
            if let Some((s, p)) = cell {
                next[t] = Some(s + log_dists[i][t]);
                back[i][t] = p;
            }
        }
        best = next;
    }
    let mut end: Option<(f64, usize)> = None;
    for (t, score) in best.iter().enumerate() {
        if let Some(s) = *score {
            if end.is_none_or(|(b, _)| s > b) {
                end = Some((s, t));
            }
        }
    }
    let (score, mut t) = end.ok_or_else(|| Error::Decode("no legal tag sequence".into()))?;
    let mut path = vec![t; n];
    for i in (1..n).rev() {
        t = back[i][t];
        path[i - 1] = t;
    }
    Ok((path, score))
}

pub fn viterbi(log_dists: &[Vec<f64>], mask: &TransitionMask) -> Result<(TagSequence, f64)> {
    let (path, score) = viterbi_indices(log_dists, mask)?;
    Ok((mask.tagset().sequence(&path)?, score))
}

/// Largest lattice [`brute_force_decode`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u64 = 20_000_000;

/// Exact argmax by enumerating every sequence. Sequences are visited with
/// the last position as the most significant digit so the first maximum
/// found follows the same tie rule as [`viterbi_indices`].
pub fn brute_force_indices(log_dists: &[Vec<f64>], mask: &TransitionMask) -> Result<(Vec<usize>, f64)> {
    check_lattice(log_dists, mask)?;
    let n = log_dists.len();
    let k = mask.len();
    let total = (k as u64)
        .checked_pow(n as u32)
        .filter(|&t| t <= BRUTE_FORCE_LIMIT)
        .ok_or_else(|| Error::Decode(format!("{k}^{n} sequences is too many to enumerate")))?;
    let mut digits = vec![0usize; n];
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..total {
        if mask.is_legal(&digits) {
            let s = sequence_score(log_dists, &digits);
            if best.as_ref().is_none_or(|(_, b)| s > *b) {
                best = Some((digits.clone(), s));
            }
        }
        for d in digits.iter_mut() {
            *d += 1;
            if *d < k {
                break;
            }
            *d = 0;
        }
    }
    best.ok_or_else(|| Error::Decode("no legal tag sequence".into()))
}

pub fn brute_force_decode(log_dists: &[Vec<f64>], mask: &TransitionMask) -> Result<(TagSequence, f64)> {
    let (path, score) = brute_force_indices(log_dists, mask)?;
    Ok((mask.tagset().sequence(&path)?, score))
}
