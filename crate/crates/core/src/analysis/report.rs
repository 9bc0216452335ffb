use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{evaluate, f1_by_distance, oracle_curve, CurvePoint, DistanceBin, EvalReport, LabelScore};
use crate::error::Result;
use crate::treebank::PredicateFrame;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinScore {
    pub bin: String,
    #[serde(flatten)]
    pub score: LabelScore,
}

/// Everything `analyze` reports, in the shape written as JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    #[serde(rename = "P")]
    pub precision: f64,
    #[serde(rename = "R")]
    pub recall: f64,
    #[serde(rename = "F1")]
    pub f1: f64,
    #[serde(rename = "Comp")]
    pub comp: f64,
    pub per_label: BTreeMap<String, LabelScore>,
    pub per_bin: Vec<BinScore>,
    pub oracle_curve: Vec<CurvePoint>,
}

impl AnalysisReport {
    pub fn build(
        gold: &[Vec<PredicateFrame>],
        pred: &[Vec<PredicateFrame>],
        bins: &[DistanceBin],
    ) -> Result<Self> {
        let overall = evaluate(gold, pred)?;
        let per_bin = f1_by_distance(gold, pred, bins)?
            .into_iter()
            .map(|(b, r)| BinScore {
                bin: b.label(),
                score: r.counts.into(),
            })
            .collect();
        Ok(AnalysisReport {
            precision: overall.precision,
            recall: overall.recall,
            f1: overall.f1,
            comp: overall.comp,
            per_label: overall.per_label,
            per_bin,
            oracle_curve: oracle_curve(pred, gold)?,
        })
    }
}

/// Plain-text table with overall and per-label scores.
pub fn format_report(r: &EvalReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Number of sentences    : {:>8}", r.sentences);
    let _ = writeln!(s, "Number of predicates   : {:>8}", r.predicates);
    let _ = writeln!(s, "Complete predicates (%): {:>8.2}", 100.0 * r.comp);
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:>12} {:>7} {:>7} {:>7} {:>8} {:>8} {:>8}",
        "", "corr.", "excess", "missed", "prec.", "rec.", "F1"
    );
    let _ = writeln!(s, "{}", "-".repeat(63));
    let row = |s: &mut String, name: &str, c: &super::Counts| {
        let _ = writeln!(
            s,
            "{:>12} {:>7} {:>7} {:>7} {:>8.2} {:>8.2} {:>8.2}",
            name,
            c.correct,
            c.predicted - c.correct,
            c.gold - c.correct,
            c.precision(),
            c.recall(),
            c.f1()
        );
    };
    row(&mut s, "Overall", &r.counts);
    let _ = writeln!(s, "{}", "-".repeat(63));
    for (label, score) in &r.per_label {
        row(&mut s, label, &score.counts);
    }
    s
}

pub fn format_distance_table(rows: &[(DistanceBin, EvalReport)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>8} {:>7} {:>7} {:>8}", "dist.", "gold", "pred", "F1");
    for (bin, r) in rows {
        let _ = writeln!(
            s,
            "{:>8} {:>7} {:>7} {:>8.2}",
            bin.label(),
            r.counts.gold,
            r.counts.predicted,
            r.f1
        );
    }
    s
}

pub fn format_curve(curve: &[CurvePoint]) -> String {
    let mut s = String::new();
    for p in curve {
        let _ = writeln!(s, "{:<18} {:>8.2}", p.stage, p.f1);
    }
    s
}
