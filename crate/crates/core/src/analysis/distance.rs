use serde::{Deserialize, Serialize};

use super::{evaluate, EvalReport};
use crate::error::Result;
use crate::treebank::{LabeledSpan, PredicateFrame};

/// A closed range of surface distances; `hi = None` is unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceBin {
    pub lo: usize,
    pub hi: Option<usize>,
}

impl DistanceBin {
    pub const fn new(lo: usize, hi: Option<usize>) -> Self {
        DistanceBin { lo, hi }
    }

    pub fn contains(&self, d: usize) -> bool {
        d >= self.lo && self.hi.is_none_or(|hi| d <= hi)
    }

    pub fn label(&self) -> String {
        match self.hi {
            Some(hi) if hi == self.lo => format!("{}", self.lo),
            Some(hi) => format!("{}-{}", self.lo, hi),
            None => format!("{}+", self.lo),
        }
    }
}

pub const DEFAULT_BINS: [DistanceBin; 4] = [
    DistanceBin::new(0, Some(0)),
    DistanceBin::new(1, Some(2)),
    DistanceBin::new(3, Some(6)),
    DistanceBin::new(7, None),
];

/// Number of tokens between the predicate and the nearest edge of the
/// span: 0 when the span contains the predicate, 1 when adjacent.
pub fn span_distance(span: &LabeledSpan, predicate: usize) -> usize {
    if span.contains(predicate) {
        0
    } else if predicate < span.start {
        span.start - predicate
    } else {
        predicate - span.end
    }
}

fn restrict(frames: &[Vec<PredicateFrame>], bin: &DistanceBin) -> Vec<Vec<PredicateFrame>> {
    frames
        .iter()
        .map(|sent| {
            sent.iter()
                .map(|f| PredicateFrame {
                    predicate: f.predicate,
                    spans: f
                        .spans
                        .iter()
                        .filter(|s| bin.contains(span_distance(s, f.predicate)))
                        .cloned()
                        .collect(),
                })
                .collect()
        })
        .collect()
}

/// Scores only the spans (gold and predicted) whose distance to their
/// predicate falls in each bin.
pub fn f1_by_distance(
    gold: &[Vec<PredicateFrame>],
    pred: &[Vec<PredicateFrame>],
    bins: &[DistanceBin],
) -> Result<Vec<(DistanceBin, EvalReport)>> {
    bins.iter()
        .map(|b| Ok((*b, evaluate(&restrict(gold, b), &restrict(pred, b))?)))
        .collect()
}
