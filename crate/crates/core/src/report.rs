//! Corpus-level reports combining the per-document routines: agreement
//! tables and evaluation blocks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agreement::{
    best_binarized_alpha, krippendorff_alpha, likert_matrix, normalize_overlapping_spans,
    token_matrix, two_agree_counts, unit_matrix, Metric, RatingMatrix,
};
use crate::annotation::{aggregate_annotators, AnnotationSet};
use crate::document::{SummaryDocument, SCHEMA_VERSION};
use crate::error::{Result, SnacError};
use crate::eval::{
    binary_metrics, finegrained_metrics, gold_sentences, recall_at_precision,
    reconstruct_eval_subset, roc_curve, Averaging, BinaryMetrics, Decision, FineMetrics,
    GoldSentence, PredictionRecord, RecallAtPrecision, RocCurve,
};
use crate::projection::Level;
use crate::scalar::Scalar;
use crate::taxonomy::{CategorySelector, ErrorCategory, ErrorGroup, Scope};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgreementLevel {
    Token,
    Sentence,
    Segment,
    Likert,
}

impl FromStr for AgreementLevel {
    type Err = SnacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "token" => Ok(AgreementLevel::Token),
            "sentence" => Ok(AgreementLevel::Sentence),
            "segment" => Ok(AgreementLevel::Segment),
            "likert" => Ok(AgreementLevel::Likert),
            other => Err(SnacError::InvalidArgument(format!("unknown agreement level {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct AgreementRow<T> {
    pub label: String,
    pub alpha: Option<T>,
    pub two_agree: Option<T>,
    pub units: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct AgreementReport<T> {
    pub schema_version: &'static str,
    pub level: AgreementLevel,
    pub normalized: Vec<ErrorCategory>,
    pub summaries: usize,
    pub raters: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
    pub rows: Vec<AgreementRow<T>>,
}

/// Groups annotation sets by summary, keeping only summaries present in
/// `docs`.
pub fn sets_by_doc<'a>(
    docs: &'a [SummaryDocument],
    sets: &[AnnotationSet],
) -> Result<Vec<(&'a SummaryDocument, Vec<AnnotationSet>)>> {
    let known: BTreeSet<&str> = docs.iter().map(|d| d.doc_id()).collect();
    if let Some(orphan) = sets.iter().find(|s| !known.contains(s.doc_id.as_str())) {
        return Err(SnacError::InvalidArgument(format!(
            "annotations reference unknown summary {}",
            orphan.doc_id
        )));
    }
    let mut ordered: Vec<&SummaryDocument> = docs.iter().collect();
    ordered.sort_by(|a, b| a.doc_id().cmp(b.doc_id()));
    Ok(ordered
        .into_iter()
        .map(|d| {
            let mut doc_sets: Vec<AnnotationSet> = sets
                .iter()
                .filter(|s| s.doc_id == d.doc_id())
                .flat_map(AnnotationSet::split_by_annotator)
                .collect();
            doc_sets.sort_by(|a, b| a.annotator_ids.cmp(&b.annotator_ids));
            (d, doc_sets)
        })
        .collect())
}

fn row_from_matrix<T: Scalar>(label: String, m: &RatingMatrix, metric: Metric) -> AgreementRow<T> {
    let (alpha, notes) = match krippendorff_alpha::<T>(m, metric) {
        Ok(a) => (Some(a), Vec::new()),
        Err(e) => (None, vec![e.to_string()]),
    };
    AgreementRow {
        label,
        alpha,
        two_agree: None,
        units: m.units.len(),
        notes,
    }
}

fn selector_rows() -> Vec<CategorySelector> {
    let mut rows: Vec<CategorySelector> = ErrorCategory::ALL.into_iter().map(CategorySelector::Category).collect();
    rows.push(CategorySelector::Group(ErrorGroup::Coherence));
    rows.push(CategorySelector::Group(ErrorGroup::Language));
    rows.push(CategorySelector::All);
    rows
}

pub fn agreement_report<T: Scalar>(
    docs: &[SummaryDocument],
    sets: &[AnnotationSet],
    level: AgreementLevel,
    normalize: &[ErrorCategory],
) -> Result<AgreementReport<T>> {
    let mut grouped = sets_by_doc(docs, sets)?;
    let mut skipped = Vec::new();
    grouped.retain(|(d, s)| {
        let raters: BTreeSet<&String> = s.iter().flat_map(|x| &x.annotator_ids).collect();
        let keep = level == AgreementLevel::Likert || raters.len() >= 2;
        if !keep {
            skipped.push(format!("{}: fewer than 2 annotators", d.doc_id()));
        }
        keep
    });
    if !normalize.is_empty() {
        for (d, s) in &mut grouped {
            *s = normalize_overlapping_spans(s, d, normalize);
        }
    }
    let raters: Vec<String> = grouped
        .iter()
        .flat_map(|(_, s)| s.iter().flat_map(|x| x.annotator_ids.iter().cloned()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let rows = match level {
        AgreementLevel::Token => selector_rows()
            .into_iter()
            .map(|sel| {
                let parts = grouped
                    .iter()
                    .map(|(d, s)| token_matrix(s, d, sel))
                    .collect::<Result<Vec<_>>>()?;
                let mut row = row_from_matrix::<T>(sel.label(), &RatingMatrix::concat(&parts), Metric::Nominal);
                let (mut agree, mut marked) = (0, 0);
                for (d, s) in &grouped {
                    let (a, m) = two_agree_counts(s, d, sel)?;
                    agree += a;
                    marked += m;
                }
                match T::ratio(agree, marked) {
                    Some(r) => row.two_agree = Some(T::lit(100.0) * r),
                    None => row.notes.push(SnacError::UndefinedTwoAgree.to_string()),
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?,
        AgreementLevel::Sentence | AgreementLevel::Segment => {
            let unit = if level == AgreementLevel::Sentence {
                Level::Sentence
            } else {
                Level::Segment
            };
            [Scope::Coherence, Scope::Language, Scope::All]
                .into_iter()
                .map(|scope| {
                    let parts = grouped
                        .iter()
                        .map(|(d, s)| unit_matrix(s, d, unit, scope))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(row_from_matrix::<T>(
                        scope.as_str().to_string(),
                        &RatingMatrix::concat(&parts),
                        Metric::Nominal,
                    ))
                })
                .collect::<Result<Vec<_>>>()?
        }
        AgreementLevel::Likert => {
            let all: Vec<AnnotationSet> = grouped.iter().flat_map(|(_, s)| s.iter().cloned()).collect();
            let m = likert_matrix(&all);
            let interval = row_from_matrix::<T>("likert (interval)".into(), &m, Metric::Interval);
            let binarized = match best_binarized_alpha::<T>(&m) {
                Ok(b) => AgreementRow {
                    label: "likert (binarized)".into(),
                    alpha: Some(b.alpha),
                    two_agree: None,
                    units: m.units.len(),
                    notes: vec![format!("rating > {}", b.threshold)],
                },
                Err(e) => AgreementRow {
                    label: "likert (binarized)".into(),
                    alpha: None,
                    two_agree: None,
                    units: m.units.len(),
                    notes: vec![e.to_string()],
                },
            };
            vec![interval, binarized]
        }
    };
    Ok(AgreementReport {
        schema_version: SCHEMA_VERSION,
        level,
        normalized: normalize.to_vec(),
        summaries: grouped.len(),
        raters,
        skipped,
        rows,
    })
}

impl<T: Scalar> AgreementReport<T> {
    /// Aligned plain-text table, one row per category or scope.
    pub fn to_table(&self) -> String {
        let cell = |v: Option<T>, pct: bool| match v {
            Some(x) if pct => format!("{:.1}", x.to_f64().unwrap_or(f64::NAN)),
            Some(x) => format!("{:.3}", x.to_f64().unwrap_or(f64::NAN)),
            None => "-".to_string(),
        };
        let header = ["", "alpha", "two-agree %"];
        let body: Vec<[String; 3]> = self
            .rows
            .iter()
            .map(|r| [r.label.clone(), cell(r.alpha, false), cell(r.two_agree, true)])
            .collect();
        let widths: Vec<usize> = (0..3)
            .map(|c| body.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let _ = writeln!(out, "{:<w0$}  {:>w1$}  {:>w2$}", header[0], header[1], header[2], w0 = widths[0], w1 = widths[1], w2 = widths[2]);
        for r in &body {
            let _ = writeln!(out, "{:<w0$}  {:>w1$}  {:>w2$}", r[0], r[1], r[2], w0 = widths[0], w1 = widths[1], w2 = widths[2]);
        }
        out
    }
}

/// Gold sentences for every summary, aggregated over all annotators or over
/// `k` sampled annotators.
pub fn build_gold(
    docs: &[SummaryDocument],
    sets: &[AnnotationSet],
    subset: Option<(usize, u64)>,
) -> Result<Vec<GoldSentence>> {
    let grouped = sets_by_doc(docs, sets)?;
    let mut gold = Vec::new();
    match subset {
        Some((k, seed)) => {
            let ordered: Vec<SummaryDocument> = grouped.iter().map(|(d, _)| (*d).clone()).collect();
            for (agg, doc) in reconstruct_eval_subset(&ordered, sets, k, seed)?.iter().zip(&ordered) {
                gold.extend(gold_sentences(agg, doc));
            }
        }
        None => {
            for (doc, s) in &grouped {
                gold.extend(gold_sentences(&aggregate_annotators(s, doc)?, doc));
            }
        }
    }
    Ok(gold)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalTask {
    Binary,
    Roc,
    Fine,
    Rap,
}

impl EvalTask {
    pub const ALL: [EvalTask; 4] = [EvalTask::Binary, EvalTask::Roc, EvalTask::Fine, EvalTask::Rap];
}

impl FromStr for EvalTask {
    type Err = SnacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(EvalTask::Binary),
            "roc" => Ok(EvalTask::Roc),
            "fine" => Ok(EvalTask::Fine),
            "rap" => Ok(EvalTask::Rap),
            other => Err(SnacError::InvalidArgument(format!("unknown eval task {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct EvalConfig<T> {
    pub tasks: Vec<EvalTask>,
    /// `score >= threshold` means error; hard labels are used when absent.
    pub threshold: Option<T>,
    pub target_precision: T,
    pub averaging: Averaging,
    pub categories: Vec<ErrorCategory>,
    pub annotator_subset: Option<usize>,
    pub seed: u64,
}

impl<T: Scalar> Default for EvalConfig<T> {
    fn default() -> Self {
        Self {
            tasks: EvalTask::ALL.to_vec(),
            threshold: None,
            target_precision: T::lit(0.7),
            averaging: Averaging::Micro,
            categories: ErrorCategory::ALL.to_vec(),
            annotator_subset: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct EvalReport<T> {
    pub schema_version: &'static str,
    pub config: EvalConfig<T>,
    pub sentences: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binary: Option<BinaryMetrics<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roc: Option<RocCurve<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finegrained: Option<BTreeMap<ErrorCategory, FineMetrics<T>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall_at_precision: Option<RecallAtPrecision<T>>,
}

pub fn eval_report<T: Scalar>(
    preds: &[PredictionRecord<T>],
    gold: &[GoldSentence],
    docs: &[SummaryDocument],
    config: EvalConfig<T>,
) -> Result<EvalReport<T>> {
    let mut report = EvalReport {
        schema_version: SCHEMA_VERSION,
        config,
        sentences: gold.len(),
        binary: None,
        roc: None,
        finegrained: None,
        recall_at_precision: None,
    };
    let tasks: BTreeSet<EvalTask> = report.config.tasks.iter().copied().collect();
    if tasks.contains(&EvalTask::Binary) {
        let decision = match report.config.threshold {
            Some(t) => Decision::Threshold(t),
            None => Decision::HardLabels,
        };
        report.binary = Some(binary_metrics(preds, gold, decision)?);
    }
    if tasks.contains(&EvalTask::Roc) {
        report.roc = Some(roc_curve(preds, gold)?);
    }
    if tasks.contains(&EvalTask::Fine) {
        report.finegrained = Some(
            report
                .config
                .categories
                .iter()
                .map(|&c| Ok((c, finegrained_metrics(preds, gold, docs, c, report.config.averaging)?)))
                .collect::<Result<_>>()?,
        );
    }
    if tasks.contains(&EvalTask::Rap) {
        report.recall_at_precision = Some(recall_at_precision(preds, gold, report.config.target_precision)?);
    }
    Ok(report)
}
