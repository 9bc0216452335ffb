use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_aligned, evaluate};
use crate::error::{Error, Result};
use crate::treebank::{LabeledSpan, PredicateFrame};

/// Gold-informed corrections, applied cumulatively in the order of
/// [`OracleKind::ALL`]. Each one only ever turns wrong spans into right
/// ones or deletes wrong spans, so F1 never goes down along the curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OracleKind {
    FixLabels,
    MoveCoreArg,
    MergeSpans,
    SplitSpans,
    FixSpanBoundary,
    DropArg,
    AddArg,
}

impl OracleKind {
    pub const ALL: [OracleKind; 7] = [
        OracleKind::FixLabels,
        OracleKind::MoveCoreArg,
        OracleKind::MergeSpans,
        OracleKind::SplitSpans,
        OracleKind::FixSpanBoundary,
        OracleKind::DropArg,
        OracleKind::AddArg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OracleKind::FixLabels => "fix-labels",
            OracleKind::MoveCoreArg => "move-core-arg",
            OracleKind::MergeSpans => "merge-spans",
            OracleKind::SplitSpans => "split-spans",
            OracleKind::FixSpanBoundary => "fix-span-boundary",
            OracleKind::DropArg => "drop-arg",
            OracleKind::AddArg => "add-arg",
        }
    }

    /// Label used in curve tables.
    pub fn title(self) -> &'static str {
        match self {
            OracleKind::FixLabels => "Fix Labels",
            OracleKind::MoveCoreArg => "Move Core Arg.",
            OracleKind::MergeSpans => "Merge Spans",
            OracleKind::SplitSpans => "Split Spans",
            OracleKind::FixSpanBoundary => "Fix Span Boundary",
            OracleKind::DropArg => "Drop Arg.",
            OracleKind::AddArg => "Add Arg.",
        }
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OracleKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown oracle transformation {s:?}")))
    }
}

fn is_core(role: &str) -> bool {
    matches!(role, "A0" | "A1" | "A2" | "A3" | "A4" | "A5")
}

/// Keeps every span that matches gold, drops wrong spans that now overlap
/// a right one, removes duplicates and restores position order.
fn normalize(mut spans: Vec<LabeledSpan>, gold: &[LabeledSpan]) -> Vec<LabeledSpan> {
    spans.sort_by_key(|s| (s.start, s.end));
    spans.dedup();
    let (right, wrong): (Vec<_>, Vec<_>) = spans.into_iter().partition(|s| gold.contains(s));
    let mut out: Vec<LabeledSpan> = wrong
        .into_iter()
        .filter(|w| !right.iter().any(|r| r.overlaps(w)))
        .collect();
    out.extend(right);
    out.sort_by_key(|s| (s.start, s.end));
    out
}

fn fix_labels(pred: &[LabeledSpan], gold: &[LabeledSpan]) -> Vec<LabeledSpan> {
    pred.iter()
        .map(|p| match gold.iter().find(|g| g.same_bounds(p)) {
            Some(g) => g.clone(),
            None => p.clone(),
        })
        .collect()
}

fn move_core_arg(pred: &[LabeledSpan], gold: &[LabeledSpan]) -> Vec<LabeledSpan> {
    let mut claimed: Vec<bool> = gold.iter().map(|g| pred.contains(g)).collect();
    pred.iter()
        .map(|p| {
            if !is_core(&p.role) || gold.contains(p) {
                return p.clone();
            }
            let target = gold
                .iter()
                .enumerate()
                .filter(|(k, g)| !claimed[*k] && g.role == p.role)
                .min_by_key(|(k, g)| (g.start.abs_diff(p.start), *k));
            match target {
                Some((k, g)) => {
                    claimed[k] = true;
                    g.clone()
                }
                None => p.clone(),
            }
        })
        .collect()
}

fn merge_spans(pred: &[LabeledSpan], gold: &[LabeledSpan]) -> Vec<LabeledSpan> {
    let mut out = Vec::with_capacity(pred.len());
    let mut k = 0;
    while k < pred.len() {
        if k + 1 < pred.len() {
            let (a, b) = (&pred[k], &pred[k + 1]);
            if let Some(g) = gold.iter().find(|g| g.start == a.start && g.end == b.end) {
                out.push(g.clone());
                k += 2;
                continue;
            }
        }
        out.push(pred[k].clone());
        k += 1;
    }
    out
}

/// Gold spans that tile `span` exactly, if there are at least two.
fn tiling<'g>(span: &LabeledSpan, gold: &'g [LabeledSpan]) -> Option<Vec<&'g LabeledSpan>> {
    let mut parts = Vec::new();
    let mut next = span.start;
    while next <= span.end {
        let g = gold.iter().find(|g| g.start == next && g.end <= span.end)?;
        parts.push(g);
        next = g.end + 1;
    }
    (parts.len() >= 2).then_some(parts)
}

fn split_spans(pred: &[LabeledSpan], gold: &[LabeledSpan]) -> Vec<LabeledSpan> {
    let mut out = Vec::with_capacity(pred.len());
    for p in pred {
        match tiling(p, gold).filter(|_| !gold.contains(p)) {
            Some(parts) => out.extend(parts.into_iter().cloned()),
            None => out.push(p.clone()),
        }
    }
    out
}

fn overlap(a: &LabeledSpan, b: &LabeledSpan) -> usize {
    (a.end.min(b.end) + 1).saturating_sub(a.start.max(b.start))
}

fn fix_span_boundary(pred: &[LabeledSpan], gold: &[LabeledSpan]) -> Vec<LabeledSpan> {
    pred.iter()
        .map(|p| {
            if gold.contains(p) {
                return p.clone();
            }
            gold.iter()
                .enumerate()
                .filter(|(_, g)| g.role == p.role && g.overlaps(p))
                .max_by_key(|(k, g)| (overlap(g, p), std::cmp::Reverse(*k)))
                .map_or_else(|| p.clone(), |(_, g)| g.clone())
        })
        .collect()
}

/// Deletes every span that is still wrong. Spans that overlap no gold
/// argument are the common case; what remains are spans whose label and
/// boundaries are both wrong, which no earlier stage could repair.
fn drop_arg(pred: &[LabeledSpan], gold: &[LabeledSpan]) -> Vec<LabeledSpan> {
    pred.iter().filter(|p| gold.contains(p)).cloned().collect()
}

fn add_arg(pred: &[LabeledSpan], gold: &[LabeledSpan]) -> Vec<LabeledSpan> {
    let mut out = pred.to_vec();
    out.extend(
        gold.iter()
            .filter(|g| !pred.iter().any(|p| p.overlaps(g)))
            .cloned(),
    );
    out
}

/// Applies one correction to the spans of a single predicate.
pub fn transform_frame(pred: &PredicateFrame, gold: &PredicateFrame, kind: OracleKind) -> PredicateFrame {
    let gold = &gold.spans[..];
    let p = &pred.spans[..];
    let spans = match kind {
        OracleKind::FixLabels => fix_labels(p, gold),
        OracleKind::MoveCoreArg => move_core_arg(p, gold),
        OracleKind::MergeSpans => merge_spans(p, gold),
        OracleKind::SplitSpans => split_spans(p, gold),
        OracleKind::FixSpanBoundary => fix_span_boundary(p, gold),
        OracleKind::DropArg => drop_arg(p, gold),
        OracleKind::AddArg => add_arg(p, gold),
    };
    PredicateFrame {
        predicate: pred.predicate,
        spans: normalize(spans, gold),
    }
}

/// Applies one correction to every predicate of a corpus.
pub fn oracle_transform(
    pred: &[Vec<PredicateFrame>],
    gold: &[Vec<PredicateFrame>],
    kind: OracleKind,
) -> Result<Vec<Vec<PredicateFrame>>> {
    check_aligned(gold, pred)?;
    Ok(pred
        .iter()
        .zip(gold)
        .map(|(ps, gs)| {
            ps.iter()
                .zip(gs)
                .map(|(p, g)| transform_frame(p, g, kind))
                .collect()
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub stage: String,
    #[serde(rename = "P")]
    pub precision: f64,
    #[serde(rename = "R")]
    pub recall: f64,
    #[serde(rename = "F1")]
    pub f1: f64,
}

/// Scores after each cumulative correction, starting from the original
/// predictions ("Orig").
pub fn oracle_curve(pred: &[Vec<PredicateFrame>], gold: &[Vec<PredicateFrame>]) -> Result<Vec<CurvePoint>> {
    let point = |stage: &str, frames: &[Vec<PredicateFrame>]| -> Result<CurvePoint> {
        let r = evaluate(gold, frames)?;
        Ok(CurvePoint {
            stage: stage.to_string(),
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
        })
    };
    let mut current = pred.to_vec();
    let mut curve = vec![point("Orig", &current)?];
    for kind in OracleKind::ALL {
        current = oracle_transform(&current, gold, kind)?;
        curve.push(point(kind.title(), &current)?);
    }
    Ok(curve)
}
