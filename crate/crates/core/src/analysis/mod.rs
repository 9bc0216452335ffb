//! Span-level scoring in the style of the CoNLL-2005 scorer, F1 by
//! predicate distance, and gold-informed oracle transformations that
//! break the remaining error down by type.

mod distance;
mod oracle;
mod report;

pub use distance::{f1_by_distance, span_distance, DistanceBin, DEFAULT_BINS};
pub use oracle::{oracle_curve, oracle_transform, transform_frame, CurvePoint, OracleKind};
pub use report::{format_curve, format_distance_table, format_report, AnalysisReport};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::treebank::{LabeledSpan, PredicateFrame};

/// Correct, predicted and gold span counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Counts {
    /// Precision in percent; 0 when nothing was predicted.
    pub fn precision(&self) -> f64 {
        ratio(self.correct, self.predicted)
    }

    /// Recall in percent; 0 when there is no gold span.
    pub fn recall(&self) -> f64 {
        ratio(self.correct, self.gold)
    }

    pub fn f1(&self) -> f64 {
        f1(self.precision(), self.recall())
    }

    fn add(&mut self, other: Counts) {
        self.correct += other.correct;
        self.predicted += other.predicted;
        self.gold += other.gold;
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// Harmonic mean `2PR / (P + R)`, with 0/0 taken as 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelScore {
    #[serde(flatten)]
    pub counts: Counts,
    #[serde(rename = "P")]
    pub precision: f64,
    #[serde(rename = "R")]
    pub recall: f64,
    #[serde(rename = "F1")]
    pub f1: f64,
}

impl From<Counts> for LabelScore {
    fn from(counts: Counts) -> Self {
        LabelScore {
            counts,
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
        }
    }
}

/// Span-level scores over a corpus. Precision, recall and F1 are
/// percentages; `comp` is the fraction of predicates whose argument set
/// is exactly right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(rename = "P")]
    pub precision: f64,
    #[serde(rename = "R")]
    pub recall: f64,
    #[serde(rename = "F1")]
    pub f1: f64,
    #[serde(rename = "Comp")]
    pub comp: f64,
    pub counts: Counts,
    pub sentences: usize,
    pub predicates: usize,
    pub perfect_predicates: usize,
    pub per_label: BTreeMap<String, LabelScore>,
}

fn span_set(frame: &PredicateFrame) -> BTreeSet<&LabeledSpan> {
    frame.spans.iter().filter(|s| s.role != "V").collect()
}

/// Scores predicted frames against gold ones. A predicted span is
/// correct iff a gold span of the same predicate has the same role, start
/// and end. Both sides must list the same predicates per sentence.
pub fn evaluate(gold: &[Vec<PredicateFrame>], pred: &[Vec<PredicateFrame>]) -> Result<EvalReport> {
    check_aligned(gold, pred)?;
    let mut total = Counts::default();
    let mut labels: BTreeMap<String, Counts> = BTreeMap::new();
    let mut predicates = 0;
    let mut perfect = 0;
    for (gs, ps) in gold.iter().zip(pred) {
        for (g, p) in gs.iter().zip(ps) {
            let gset = span_set(g);
            let pset = span_set(p);
            predicates += 1;
            if gset == pset {
                perfect += 1;
            }
            for s in &gset {
                labels.entry(s.role.clone()).or_default().gold += 1;
            }
            for s in &pset {
                let c = labels.entry(s.role.clone()).or_default();
                c.predicted += 1;
                if gset.contains(s) {
                    c.correct += 1;
                }
            }
        }
    }
    for c in labels.values() {
        total.add(*c);
    }
    Ok(EvalReport {
        precision: total.precision(),
        recall: total.recall(),
        f1: total.f1(),
        comp: if predicates == 0 {
            0.0
        } else {
            perfect as f64 / predicates as f64
        },
        counts: total,
        sentences: gold.len(),
        predicates,
        perfect_predicates: perfect,
        per_label: labels.into_iter().map(|(k, v)| (k, v.into())).collect(),
    })
}

pub(crate) fn check_aligned(gold: &[Vec<PredicateFrame>], pred: &[Vec<PredicateFrame>]) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(Error::Eval(format!(
            "{} gold sentences but {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    for (k, (g, p)) in gold.iter().zip(pred).enumerate() {
        let gp: Vec<usize> = g.iter().map(|f| f.predicate).collect();
        let pp: Vec<usize> = p.iter().map(|f| f.predicate).collect();
        if gp != pp {
            return Err(Error::Eval(format!(
                "sentence {}: gold predicates {:?} but predicted {:?}",
                k + 1,
                gp.iter().map(|i| i + 1).collect::<Vec<_>>(),
                pp.iter().map(|i| i + 1).collect::<Vec<_>>()
            )));
        }
    }
    Ok(())
}
