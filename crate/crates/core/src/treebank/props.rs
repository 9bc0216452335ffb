use super::{check_spans, LabeledSpan, PredicateFrame, Sentence};
use crate::error::{Error, Result};

/// One sentence of a props file: the first column (predicate lemma or
/// `-`) and one frame per predicate row, in row order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropsBlock {
    pub lemmas: Vec<String>,
    pub frames: Vec<PredicateFrame>,
}

impl PropsBlock {
    pub fn new(lemmas: Vec<String>, mut frames: Vec<PredicateFrame>) -> Result<Self> {
        frames.sort_by_key(|f| f.predicate);
        let n = lemmas.len();
        if n == 0 {
            return Err(Error::Span("props block without tokens".into()));
        }
        let rows: Vec<usize> = (0..n).filter(|&i| lemmas[i] != "-").collect();
        let preds: Vec<usize> = frames.iter().map(|f| f.predicate).collect();
        if rows != preds {
            return Err(Error::Span(format!(
                "predicate rows {:?} do not match frames {:?}",
                rows.iter().map(|i| i + 1).collect::<Vec<_>>(),
                preds.iter().map(|i| i + 1).collect::<Vec<_>>()
            )));
        }
        for frame in &frames {
            frame.check_len(n)?;
            check_spans(&frame.spans)?;
        }
        Ok(PropsBlock { lemmas, frames })
    }

    /// Block whose predicate rows carry the token forms.
    pub fn from_sentence(sentence: &Sentence, frames: Vec<PredicateFrame>) -> Result<Self> {
        let mut lemmas = vec!["-".to_string(); sentence.len()];
        for f in &frames {
            if f.predicate >= sentence.len() {
                return Err(Error::Span(format!(
                    "predicate {} outside sentence of length {}",
                    f.predicate + 1,
                    sentence.len()
                )));
            }
            lemmas[f.predicate] = sentence.tokens()[f.predicate].clone();
        }
        Self::new(lemmas, frames)
    }

    pub fn len(&self) -> usize {
        self.lemmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lemmas.is_empty()
    }
}

enum Cell<'a> {
    Star,
    Open(&'a str),
    Close,
    OpenClose(&'a str),
}

fn parse_cell(cell: &str) -> Option<Cell<'_>> {
    let (open, rest) = match cell.strip_prefix('(') {
        Some(rest) => {
            let star = rest.find('*')?;
            (Some(&rest[..star]), &rest[star..])
        }
        None => (None, cell),
    };
    let rest = rest.strip_prefix('*')?;
    let close = match rest {
        "" => false,
        r if r.ends_with(')') && !r[..r.len() - 1].contains(['(', ')', '*']) => true,
        _ => return None,
    };
    match (open, close) {
        (Some(""), _) => None,
        (Some(label), _) if label.contains([')', '(']) => None,
        (Some(label), false) => Some(Cell::Open(label)),
        (Some(label), true) => Some(Cell::OpenClose(label)),
        (None, false) => Some(Cell::Star),
        (None, true) => Some(Cell::Close),
    }
}

/// Reads a CoNLL-2005 props file: whitespace-separated columns, blank
/// lines between sentences, one bracket column per predicate row.
pub fn parse_props(text: &str) -> Result<Vec<PropsBlock>> {
    let mut blocks = Vec::new();
    let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            if !rows.is_empty() {
                blocks.push(parse_block(&rows)?);
                rows.clear();
            }
            continue;
        }
        rows.push((idx + 1, raw.split_whitespace().collect()));
    }
    if !rows.is_empty() {
        blocks.push(parse_block(&rows)?);
    }
    Ok(blocks)
}

fn parse_block(rows: &[(usize, Vec<&str>)]) -> Result<PropsBlock> {
    let first_line = rows[0].0;
    let width = rows[0].1.len();
    for (line, cols) in rows {
        if cols.len() != width {
            return Err(Error::Props {
                line: *line,
                message: format!("expected {} columns, found {}", width, cols.len()),
            });
        }
    }
    let lemmas: Vec<String> = rows.iter().map(|(_, c)| c[0].to_string()).collect();
    let predicates: Vec<usize> = (0..rows.len()).filter(|&i| lemmas[i] != "-").collect();
    if predicates.len() != width - 1 {
        return Err(Error::Props {
            line: first_line,
            message: format!(
                "{} predicate rows but {} argument columns",
                predicates.len(),
                width - 1
            ),
        });
    }

    let mut frames = Vec::with_capacity(predicates.len());
    for (col, &predicate) in predicates.iter().enumerate() {
        let mut spans = Vec::new();
        let mut open: Option<(String, usize)> = None;
        for (i, (line, cols)) in rows.iter().enumerate() {
            let cell = cols[col + 1];
            let err = |message: String| Error::Props { line: *line, message };
            let parsed =
                parse_cell(cell).ok_or_else(|| err(format!("malformed bracket cell {cell:?}")))?;
            match parsed {
                Cell::Star => {}
                Cell::Open(label) => {
                    if let Some((other, _)) = &open {
                        return Err(err(format!("span {label} overlaps open span {other}")));
                    }
                    open = Some((label.to_string(), i));
                }
                Cell::OpenClose(label) => {
                    if let Some((other, _)) = &open {
                        return Err(err(format!("span {label} overlaps open span {other}")));
                    }
                    spans.push(LabeledSpan::new(label, i, i));
                }
                Cell::Close => {
                    let (label, start) = open
                        .take()
                        .ok_or_else(|| err("closing bracket without an open span".into()))?;
                    spans.push(LabeledSpan::new(label, start, i));
                }
            }
        }
        if let Some((label, start)) = open {
            return Err(Error::Props {
                line: rows[start].0,
                message: format!("span {label} is never closed"),
            });
        }
        spans.retain(|s| s.role != "V");
        let frame = PredicateFrame::new(predicate, spans).map_err(|e| Error::Props {
            line: first_line,
            message: e.to_string(),
        })?;
        frames.push(frame);
    }
    PropsBlock::new(lemmas, frames).map_err(|e| Error::Props {
        line: first_line,
        message: e.to_string(),
    })
}

fn frame_cells(frame: &PredicateFrame, n: usize) -> Vec<String> {
    let mut cells = vec!["*".to_string(); n];
    let mut spans = frame.spans.clone();
    if !spans.iter().any(|s| s.contains(frame.predicate)) {
        spans.push(LabeledSpan::new("V", frame.predicate, frame.predicate));
    }
    for s in &spans {
        if s.start == s.end {
            cells[s.start] = format!("({}*)", s.role);
        } else {
            cells[s.start] = format!("({}*", s.role);
            cells[s.end] = "*)".to_string();
        }
    }
    cells
}

/// Writes blocks in canonical form: each column left-aligned to its
/// widest cell, columns joined by one space, trailing blanks trimmed.
pub fn write_props(blocks: &[PropsBlock]) -> Result<String> {
    let mut out = String::new();
    for block in blocks {
        let n = block.len();
        let mut columns = vec![block.lemmas.clone()];
        for frame in &block.frames {
            frame.check_len(n)?;
            check_spans(&frame.spans)?;
            columns.push(frame_cells(frame, n));
        }
        let widths: Vec<usize> = columns
            .iter()
            .map(|c| c.iter().map(|s| s.chars().count()).max().unwrap_or(0))
            .collect();
        for i in 0..n {
            let mut line = String::new();
            for (col, width) in columns.iter().zip(&widths) {
                if !line.is_empty() {
                    line.push(' ');
                }
                line.push_str(&format!("{:<width$}", col[i], width = width));
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "-     (A0*\n-     *)\nplays (V*)\n-     (A1*)\n-     *\n\n";

    #[test]
    fn reads_example_frame() {
        let blocks = parse_props(EXAMPLE).unwrap();
        assert_eq!(blocks.len(), 1);
        let frame = &blocks[0].frames[0];
        assert_eq!(frame.predicate, 2);
        assert_eq!(
            frame.spans,
            vec![LabeledSpan::new("A0", 0, 1), LabeledSpan::new("A1", 3, 3)]
        );
    }

    #[test]
    fn example_canonical_bytes() {
        let blocks = parse_props(EXAMPLE).unwrap();
        assert_eq!(write_props(&blocks).unwrap(), EXAMPLE);
    }

    #[test]
    fn no_predicates() {
        let blocks = parse_props("-\n-\n-\n").unwrap();
        assert_eq!(blocks.len(), 1);
        assert!(blocks[0].frames.is_empty());
        assert_eq!(blocks[0].len(), 3);
    }

    #[test]
    fn unbalanced_brackets() {
        assert!(parse_props("run (A0*\n-   *\n").is_err());
        assert!(parse_props("run *)\n-   *\n").is_err());
        assert!(parse_props("run (A0*\n- (A1*)\n-  *)\n").is_err());
    }

    #[test]
    fn column_count_mismatch() {
        let err = parse_props("run (V*)\n- * *\n").unwrap_err();
        assert!(matches!(err, Error::Props { line: 2, .. }));
    }

    #[test]
    fn two_predicates() {
        let text = "-    (A0*   (A0*\n-    *)     *)\nsaid (V*)    *\nrun  (A1*)  (V*)\n\n";
        let blocks = parse_props(text).unwrap();
        assert_eq!(blocks[0].frames.len(), 2);
        assert_eq!(blocks[0].frames[1].predicate, 3);
        // the A1 span of the first predicate covers token 4 but never closes
        assert!(parse_props("-    (A0*   (A0*\n-    *)     *)\nsaid (V*)    *\nrun  (A1*   (V*)\n").is_err());
    }

    #[test]
    fn writer_rejects_overlap() {
        let frame = PredicateFrame {
            predicate: 0,
            spans: vec![LabeledSpan::new("A0", 1, 2), LabeledSpan::new("A1", 2, 2)],
        };
        let block = PropsBlock {
            lemmas: vec!["go".into(), "-".into(), "-".into()],
            frames: vec![frame],
        };
        assert!(write_props(&[block]).is_err());
    }
}
