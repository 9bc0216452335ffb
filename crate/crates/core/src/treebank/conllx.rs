use std::fmt::Write as _;

use super::{DependencyTree, Sentence};
use crate::error::{Error, Result};

/// Reads blank-line separated CoNLL-X blocks. Columns used: 1 (id),
/// 2 (form), 7 (head) and 8 (deprel); the rest pass through unread.
pub fn parse_conllx(text: &str) -> Result<Vec<(Sentence, DependencyTree)>> {
    let mut out = Vec::new();
    let mut forms = Vec::new();
    let mut heads = Vec::new();
    let mut labels = Vec::new();
    let mut block_start = 0;

    let mut flush = |forms: &mut Vec<String>,
                     heads: &mut Vec<usize>,
                     labels: &mut Vec<String>,
                     line: usize|
     -> Result<()> {
        if forms.is_empty() {
            return Ok(());
        }
        let sentence = Sentence::new(forms.drain(..))
            .map_err(|e| Error::Conllx { line, message: e.to_string() })?;
        let tree = DependencyTree::from_conll_heads(heads, std::mem::take(labels))
            .map_err(|e| Error::Conllx { line, message: e.to_string() })?;
        heads.clear();
        out.push((sentence, tree));
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut forms, &mut heads, &mut labels, block_start)?;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if forms.is_empty() {
            block_start = line_no;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 8 {
            return Err(Error::Conllx {
                line: line_no,
                message: format!("expected at least 8 tab-separated columns, found {}", cols.len()),
            });
        }
        let id: usize = cols[0].parse().map_err(|_| Error::Conllx {
            line: line_no,
            message: format!("bad token id {:?}", cols[0]),
        })?;
        if id != forms.len() + 1 {
            return Err(Error::Conllx {
                line: line_no,
                message: format!("token id {} out of sequence, expected {}", id, forms.len() + 1),
            });
        }
        let head: usize = cols[6].parse().map_err(|_| Error::Conllx {
            line: line_no,
            message: format!("bad head {:?}", cols[6]),
        })?;
        let label = cols[7].trim();
        if label.is_empty() || label == "_" {
            return Err(Error::Conllx {
                line: line_no,
                message: "missing dependency relation".into(),
            });
        }
        forms.push(cols[1].to_string());
        heads.push(head);
        labels.push(label.to_string());
    }
    flush(&mut forms, &mut heads, &mut labels, block_start)?;
    Ok(out)
}

/// Writes trees in 10-column CoNLL-X form with unused columns as `_`.
pub fn write_conllx(sentences: &[(Sentence, DependencyTree)]) -> String {
    let mut out = String::new();
    for (sentence, tree) in sentences {
        for (i, (form, head)) in sentence.tokens().iter().zip(tree.conll_heads()).enumerate() {
            writeln!(
                out,
                "{}\t{}\t_\t_\t_\t_\t{}\t{}\t_\t_",
                i + 1,
                form,
                head,
                tree.label(i)
            )
            .unwrap();
        }
        out.push('\n');
    }
    out
}
