use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::treebank::{parse_conllx, parse_props, DependencyTree, PredicateFrame, PropsBlock, Sentence};

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_conllx(path: &Path) -> Result<Vec<(Sentence, DependencyTree)>> {
    parse_conllx(&read(path)?).map_err(|e| e.in_file(path))
}

pub fn read_props(path: &Path) -> Result<Vec<PropsBlock>> {
    parse_props(&read(path)?).map_err(|e| e.in_file(path))
}

/// First column of a props file, one lemma list per sentence; any
/// further columns are ignored.
pub fn read_predicates(path: &Path) -> Result<Vec<Vec<String>>> {
    Ok(parse_predicate_column(&read(path)?))
}

pub fn parse_predicate_column(text: &str) -> Vec<Vec<String>> {
    let mut blocks = Vec::new();
    let mut current = Vec::new();
    for line in text.lines() {
        match line.split_whitespace().next() {
            Some(lemma) => current.push(lemma.to_string()),
            None if !current.is_empty() => blocks.push(std::mem::take(&mut current)),
            None => {}
        }
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    blocks
}

pub fn predicate_positions(lemmas: &[String]) -> Vec<usize> {
    lemmas
        .iter()
        .enumerate()
        .filter(|(_, l)| l.as_str() != "-")
        .map(|(i, _)| i)
        .collect()
}

fn check_counts(what: &str, a: usize, b: usize, deps: &Path, other: &Path) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::Input(format!(
            "{} has {a} sentences but {} has {b} {what}",
            deps.display(),
            other.display()
        )))
    }
}

fn check_len(k: usize, n: usize, m: usize, other: &Path) -> Result<()> {
    if n == m {
        Ok(())
    } else {
        Err(Error::Input(format!(
            "{}: sentence {} has {m} rows but the tree has {n} tokens",
            other.display(),
            k + 1
        )))
    }
}

/// Sentences, trees and gold frames from a CoNLL-X file and its props file.
pub fn load_corpus(deps: &Path, props: &Path) -> Result<Vec<Instance>> {
    let trees = read_conllx(deps)?;
    let blocks = read_props(props)?;
    check_counts("blocks", trees.len(), blocks.len(), deps, props)?;
    trees
        .into_iter()
        .zip(blocks)
        .enumerate()
        .map(|(k, ((sentence, tree), block))| {
            check_len(k, sentence.len(), block.len(), props)?;
            Instance::new(sentence, Some(tree), block.frames)
        })
        .collect()
}

/// Like [`load_corpus`] but only the predicate column of the props file is
/// read; frames have no arguments. Returns the lemma columns too.
pub fn load_unlabeled(deps: &Path, props: &Path) -> Result<(Vec<Instance>, Vec<Vec<String>>)> {
    let trees = read_conllx(deps)?;
    let lemmas = read_predicates(props)?;
    check_counts("blocks", trees.len(), lemmas.len(), deps, props)?;
    let corpus = unlabeled_instances(trees, &lemmas).map_err(|e| match e {
        Error::Input(m) => Error::Input(format!("{}: {m}", props.display())),
        other => other,
    })?;
    Ok((corpus, lemmas))
}

/// Instances with empty frames for the predicates marked in `lemmas`.
pub fn unlabeled_instances(trees: Vec<(Sentence, DependencyTree)>, lemmas: &[Vec<String>]) -> Result<Vec<Instance>> {
    if trees.len() != lemmas.len() {
        return Err(Error::Input(format!(
            "{} trees but {} predicate blocks",
            trees.len(),
            lemmas.len()
        )));
    }
    let mut out = Vec::with_capacity(trees.len());
    for (k, ((sentence, tree), lem)) in trees.into_iter().zip(lemmas).enumerate() {
        if sentence.len() != lem.len() {
            return Err(Error::Input(format!(
                "sentence {} has {} predicate rows but the tree has {} tokens",
                k + 1,
                lem.len(),
                sentence.len()
            )));
        }
        let frames = predicate_positions(lem)
            .into_iter()
            .map(|p| PredicateFrame::new(p, Vec::new()))
            .collect::<Result<Vec<_>>>()?;
        out.push(Instance::new(sentence, Some(tree), frames)?);
    }
    Ok(out)
}

/// One line of an external-vector file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalRecord {
    /// 0-based position of the sentence in the corpus.
    pub sentence_id: usize,
    /// One vector per token.
    pub vectors: Vec<Vec<f64>>,
}

/// Reads per-token vectors from JSON lines and attaches them to `corpus`.
/// Every sentence must be covered exactly once, with vectors of width `dim`.
pub fn attach_external(corpus: &mut [Instance], path: &Path, dim: usize) -> Result<()> {
    let text = read(path)?;
    let mut by_id = BTreeMap::new();
    for (line, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let rec: ExternalRecord = serde_json::from_str(raw).map_err(|e| {
            Error::Input(format!("{}: line {}: {e}", path.display(), line + 1))
        })?;
        let bad = |msg: String| Error::Input(format!("{}: line {}: {msg}", path.display(), line + 1));
        if rec.sentence_id >= corpus.len() {
            return Err(bad(format!("sentence_id {} out of range", rec.sentence_id)));
        }
        if rec.vectors.iter().any(|v| v.len() != dim) {
            return Err(bad(format!("vectors must have width {dim}")));
        }
        if by_id.insert(rec.sentence_id, rec.vectors).is_some() {
            return Err(bad(format!("sentence_id {} repeated", rec.sentence_id)));
        }
    }
    for (k, inst) in corpus.iter_mut().enumerate() {
        let vectors = by_id.remove(&k).ok_or_else(|| {
            Error::Input(format!("{}: no vectors for sentence_id {k}", path.display()))
        })?;
        if vectors.len() != inst.len() {
            return Err(Error::Input(format!(
                "{}: sentence_id {k} has {} vectors for {} tokens",
                path.display(),
                vectors.len(),
                inst.len()
            )));
        }
        inst.external = Some(vectors);
    }
    Ok(())
}
