//! Scoring detector predictions against gold annotations.
//!
//! Sentence-level tasks: binary P/R/F1, ROC/AUC, fine-grained category
//! P/R/F1 with span overlap, and per-category recall at a fixed binary
//! precision. Detector scores follow "higher means more likely erroneous".

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::annotation::{aggregate_annotators, AggregatedSet, AnnotationSet};
use crate::corruption::doc_rng;
use crate::document::SummaryDocument;
use crate::error::{Result, SnacError};
use crate::lm::{key_label, SentenceKey};
use crate::scalar::{f1, Scalar};
use crate::taxonomy::ErrorCategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FinePrediction {
    pub category: ErrorCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<usize>,
}

impl FinePrediction {
    pub fn span(&self) -> Option<(usize, usize)> {
        match (self.start, self.end) {
            (Some(s), Some(e)) if s < e => Some((s, e)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord<T> {
    pub doc_id: String,
    pub sentence_index: usize,
    pub score: Option<T>,
    pub has_error: Option<bool>,
    pub fine: Option<Vec<FinePrediction>>,
}

impl<T> PredictionRecord<T> {
    pub fn key(&self) -> SentenceKey {
        (self.doc_id.clone(), self.sentence_index)
    }
}

/// JSON-lines form; `label` uses 0 = has error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PredictionLine<T> {
    pub doc_id: String,
    pub sentence_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fine: Option<Vec<FinePrediction>>,
}

impl<T: Scalar> From<&PredictionRecord<T>> for PredictionLine<T> {
    fn from(p: &PredictionRecord<T>) -> Self {
        Self {
            doc_id: p.doc_id.clone(),
            sentence_index: p.sentence_index,
            score: p.score,
            label: p.has_error.map(|e| if e { 0 } else { 1 }),
            fine: p.fine.clone(),
        }
    }
}

pub fn parse_predictions<T: Scalar>(source_name: &str, jsonl: &str) -> Result<Vec<PredictionRecord<T>>> {
    let mut out = Vec::new();
    for (n, line) in jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| SnacError::Parse {
            source_name: source_name.to_string(),
            line: n + 1,
            message,
        };
        let rec: PredictionLine<T> = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let has_error = match rec.label {
            None => None,
            Some(0) => Some(true),
            Some(1) => Some(false),
            Some(other) => return Err(err(format!("label must be 0 or 1, got {other}"))),
        };
        if rec.score.is_none() && has_error.is_none() {
            return Err(err("a prediction needs a score or a label".into()));
        }
        out.push(PredictionRecord {
            doc_id: rec.doc_id,
            sentence_index: rec.sentence_index,
            score: rec.score,
            has_error,
            fine: rec.fine,
        });
    }
    Ok(out)
}

pub fn predictions_to_jsonl<T: Scalar>(preds: &[PredictionRecord<T>]) -> Result<String> {
    let mut out = String::new();
    for p in preds {
        out.push_str(&serde_json::to_string(&PredictionLine::from(p))?);
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldSentence {
    pub doc_id: String,
    pub sentence_index: usize,
    /// Coherence-scope label.
    pub has_error: bool,
    /// Gold errors, spans clipped to the sentence.
    pub errors: BTreeSet<(ErrorCategory, usize, usize)>,
}

impl GoldSentence {
    pub fn key(&self) -> SentenceKey {
        (self.doc_id.clone(), self.sentence_index)
    }

    pub fn categories(&self) -> BTreeSet<ErrorCategory> {
        self.errors.iter().map(|e| e.0).collect()
    }
}

pub fn gold_sentences(set: &AggregatedSet, doc: &SummaryDocument) -> Vec<GoldSentence> {
    doc.sentences()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let errors: BTreeSet<_> = set
                .annotations
                .iter()
                .filter(|a| s.intersects(a.span.start, a.span.end))
                .map(|a| (a.category, a.span.start.max(s.start), a.span.end.min(s.end)))
                .collect();
            GoldSentence {
                doc_id: doc.doc_id().to_string(),
                sentence_index: i,
                has_error: errors.iter().any(|e| e.0.is_coherence()),
                errors,
            }
        })
        .collect()
}

fn index_predictions<'a, T>(
    preds: &'a [PredictionRecord<T>],
    gold: &[GoldSentence],
) -> Result<BTreeMap<SentenceKey, &'a PredictionRecord<T>>> {
    let mut map = BTreeMap::new();
    for p in preds {
        if map.insert(p.key(), p).is_some() {
            return Err(SnacError::DuplicateId(key_label(&p.key())));
        }
    }
    let missing: Vec<String> = gold
        .iter()
        .map(GoldSentence::key)
        .filter(|k| !map.contains_key(k))
        .map(|k| key_label(&k))
        .collect();
    if missing.is_empty() {
        Ok(map)
    } else {
        Err(SnacError::MissingPredictions(missing))
    }
}

fn require_score<T: Scalar>(p: &PredictionRecord<T>) -> Result<T> {
    match p.score {
        Some(s) if s.is_finite() => Ok(s),
        Some(_) => Err(SnacError::InvalidArgument(format!(
            "non-finite score for {}",
            key_label(&p.key())
        ))),
        None => Err(SnacError::InvalidArgument(format!(
            "prediction {} has no score",
            key_label(&p.key())
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision<T> {
    /// `score >= threshold` means error.
    Threshold(T),
    HardLabels,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn merge(self, o: Confusion) -> Confusion {
        Confusion {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }

    pub fn metrics<T: Scalar>(&self) -> Prf<T> {
        let precision = T::ratio(self.tp, self.tp + self.fp);
        let recall = T::ratio(self.tp, self.tp + self.fn_).unwrap_or_else(T::zero);
        let p = precision.unwrap_or_else(T::zero);
        Prf {
            precision: p,
            recall,
            f1: f1(p, recall),
            precision_undefined: precision.is_none(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Prf<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
    /// No positive predictions; precision reported as 0.
    pub precision_undefined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BinaryMetrics<T> {
    #[serde(flatten)]
    pub prf: Prf<T>,
    pub confusion: Confusion,
}

pub fn predicted_error<T: Scalar>(p: &PredictionRecord<T>, decision: Decision<T>) -> Result<bool> {
    match decision {
        Decision::Threshold(t) => Ok(require_score(p)? >= t),
        Decision::HardLabels => p.has_error.ok_or_else(|| {
            SnacError::InvalidArgument(format!("prediction {} has no label", key_label(&p.key())))
        }),
    }
}

pub fn binary_metrics<T: Scalar>(
    preds: &[PredictionRecord<T>],
    gold: &[GoldSentence],
    decision: Decision<T>,
) -> Result<BinaryMetrics<T>> {
    let index = index_predictions(preds, gold)?;
    let mut confusion = Confusion::default();
    for g in gold {
        confusion.add(predicted_error(index[&g.key()], decision)?, g.has_error);
    }
    Ok(BinaryMetrics {
        prf: confusion.metrics(),
        confusion,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RocPoint<T> {
    /// `None` for the initial point where nothing is predicted positive.
    pub threshold: Option<T>,
    pub fpr: T,
    pub tpr: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RocCurve<T> {
    pub points: Vec<RocPoint<T>>,
    pub auc: T,
}

/// ROC over `(score, has_error)` pairs, one point per distinct score.
pub fn roc_from_scores<T: Scalar>(scored: &[(T, bool)]) -> Result<RocCurve<T>> {
    let pos = scored.iter().filter(|s| s.1).count();
    let neg = scored.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(SnacError::SingleClass(
            "ROC needs both error and non-error gold sentences".into(),
        ));
    }
    let mut sorted: Vec<(T, bool)> = scored.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite scores"));
    let mut points = vec![RocPoint {
        threshold: None,
        fpr: T::zero(),
        tpr: T::zero(),
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = T::zero();
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == v {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let prev = *points.last().expect("non-empty");
        let point = RocPoint {
            threshold: Some(v),
            fpr: T::from_count(fp) / T::from_count(neg),
            tpr: T::from_count(tp) / T::from_count(pos),
        };
        auc = auc + (point.fpr - prev.fpr) * (point.tpr + prev.tpr) / T::lit(2.0);
        points.push(point);
    }
    Ok(RocCurve { points, auc })
}

pub fn roc_curve<T: Scalar>(preds: &[PredictionRecord<T>], gold: &[GoldSentence]) -> Result<RocCurve<T>> {
    let index = index_predictions(preds, gold)?;
    let scored = gold
        .iter()
        .map(|g| Ok((require_score(index[&g.key()])?, g.has_error)))
        .collect::<Result<Vec<_>>>()?;
    roc_from_scores(&scored)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Pool counts over all summaries.
    Micro,
    /// Average per-summary scores.
    Macro,
}

impl FromStr for Averaging {
    type Err = SnacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro" => Ok(Averaging::Micro),
            "macro" => Ok(Averaging::Macro),
            other => Err(SnacError::InvalidArgument(format!("unknown averaging {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FineMetrics<T> {
    pub category: ErrorCategory,
    #[serde(flatten)]
    pub prf: Prf<T>,
    pub confusion: Confusion,
    /// Among true positives with a predicted span, the share overlapping a
    /// gold span of the category by at least one token.
    pub overlap_fraction: T,
    pub overlap_hits: usize,
    pub overlap_total: usize,
    pub overlap_undefined: bool,
}

fn tokens_overlap(doc: &SummaryDocument, a: (usize, usize), b: (usize, usize)) -> bool {
    let ta = doc.covered_tokens(a.0, a.1);
    let tb = doc.covered_tokens(b.0, b.1);
    !ta.is_empty() && !tb.is_empty() && ta.start < tb.end && tb.start < ta.end
}

#[derive(Default, Clone, Copy)]
struct FineCounts {
    confusion: Confusion,
    overlap_hits: usize,
    overlap_total: usize,
}

/// Matching at (sentence, category) granularity.
pub fn finegrained_metrics<T: Scalar>(
    preds: &[PredictionRecord<T>],
    gold: &[GoldSentence],
    docs: &[SummaryDocument],
    category: ErrorCategory,
    averaging: Averaging,
) -> Result<FineMetrics<T>> {
    let index = index_predictions(preds, gold)?;
    let docs: BTreeMap<&str, &SummaryDocument> = docs.iter().map(|d| (d.doc_id(), d)).collect();
    let mut per_doc: BTreeMap<&str, FineCounts> = BTreeMap::new();
    for g in gold {
        let doc = docs.get(g.doc_id.as_str()).ok_or_else(|| {
            SnacError::InvalidArgument(format!("no summary for {}", g.doc_id))
        })?;
        let p = index[&g.key()];
        let predicted: Vec<&FinePrediction> = p
            .fine
            .iter()
            .flatten()
            .filter(|f| f.category == category)
            .collect();
        let gold_spans: Vec<(usize, usize)> = g
            .errors
            .iter()
            .filter(|e| e.0 == category)
            .map(|e| (e.1, e.2))
            .collect();
        let counts = per_doc.entry(g.doc_id.as_str()).or_default();
        let (is_pred, is_gold) = (!predicted.is_empty(), !gold_spans.is_empty());
        counts.confusion.add(is_pred, is_gold);
        if is_pred && is_gold {
            if category == ErrorCategory::SceneE {
                counts.overlap_total += 1;
                counts.overlap_hits += 1;
            } else {
                let spans: Vec<(usize, usize)> = predicted.iter().filter_map(|f| f.span()).collect();
                if !spans.is_empty() {
                    counts.overlap_total += 1;
                    let hit = spans
                        .iter()
                        .any(|&s| gold_spans.iter().any(|&gs| tokens_overlap(doc, s, gs)));
                    counts.overlap_hits += hit as usize;
                }
            }
        }
    }
    let pooled = per_doc.values().fold(FineCounts::default(), |a, b| FineCounts {
        confusion: a.confusion.merge(b.confusion),
        overlap_hits: a.overlap_hits + b.overlap_hits,
        overlap_total: a.overlap_total + b.overlap_total,
    });
    let prf = match averaging {
        Averaging::Micro => pooled.confusion.metrics(),
        Averaging::Macro => {
            let mean = |vals: Vec<T>| -> Option<T> {
                (!vals.is_empty()).then(|| {
                    let n = T::from_count(vals.len());
                    vals.into_iter().sum::<T>() / n
                })
            };
            let ps = mean(
                per_doc
                    .values()
                    .filter_map(|c| T::ratio(c.confusion.tp, c.confusion.tp + c.confusion.fp))
                    .collect(),
            );
            let rs = mean(
                per_doc
                    .values()
                    .filter_map(|c| T::ratio(c.confusion.tp, c.confusion.tp + c.confusion.fn_))
                    .collect(),
            );
            let p = ps.unwrap_or_else(T::zero);
            let r = rs.unwrap_or_else(T::zero);
            Prf {
                precision: p,
                recall: r,
                f1: f1(p, r),
                precision_undefined: ps.is_none(),
            }
        }
    };
    let overlap = T::ratio(pooled.overlap_hits, pooled.overlap_total);
    Ok(FineMetrics {
        category,
        prf,
        confusion: pooled.confusion,
        overlap_fraction: overlap.unwrap_or_else(T::zero),
        overlap_hits: pooled.overlap_hits,
        overlap_total: pooled.overlap_total,
        overlap_undefined: overlap.is_none(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RecallAtPrecision<T> {
    pub target_precision: T,
    pub threshold: T,
    pub precision: T,
    pub overall_recall: T,
    /// Recall per gold category; a positive binary prediction recalls every
    /// category present in the sentence.
    pub per_category: BTreeMap<ErrorCategory, T>,
    pub support: BTreeMap<ErrorCategory, usize>,
}

/// Per-category recall when sentences with `score >= threshold` count as
/// detecting every gold category they contain.
pub fn category_recall_at<T: Scalar>(
    scored: &[(T, &GoldSentence)],
    threshold: T,
) -> (BTreeMap<ErrorCategory, T>, BTreeMap<ErrorCategory, usize>) {
    let mut hits: BTreeMap<ErrorCategory, usize> = BTreeMap::new();
    let mut support: BTreeMap<ErrorCategory, usize> = BTreeMap::new();
    for (s, g) in scored {
        for c in g.categories() {
            *support.entry(c).or_default() += 1;
            if *s >= threshold {
                *hits.entry(c).or_default() += 1;
            }
        }
    }
    let recall = support
        .iter()
        .map(|(c, &n)| (*c, T::from_count(hits.get(c).copied().unwrap_or(0)) / T::from_count(n)))
        .collect();
    (recall, support)
}

/// Per-category recall using the predicted fine categories instead of the
/// expansion rule.
pub fn fine_recall_at<T: Scalar>(
    preds: &[PredictionRecord<T>],
    gold: &[GoldSentence],
    threshold: T,
) -> Result<BTreeMap<ErrorCategory, T>> {
    let index = index_predictions(preds, gold)?;
    let mut hits: BTreeMap<ErrorCategory, usize> = BTreeMap::new();
    let mut support: BTreeMap<ErrorCategory, usize> = BTreeMap::new();
    for g in gold {
        let p = index[&g.key()];
        let positive = require_score(p)? >= threshold;
        let predicted: BTreeSet<ErrorCategory> = p.fine.iter().flatten().map(|f| f.category).collect();
        for c in g.categories() {
            *support.entry(c).or_default() += 1;
            if positive && predicted.contains(&c) {
                *hits.entry(c).or_default() += 1;
            }
        }
    }
    Ok(support
        .iter()
        .map(|(c, &n)| (*c, T::from_count(hits.get(c).copied().unwrap_or(0)) / T::from_count(n)))
        .collect())
}

/// Picks the threshold whose binary precision is the smallest value at or
/// above `target` (lowest threshold on ties) and reports recall there.
pub fn recall_at_precision<T: Scalar>(
    preds: &[PredictionRecord<T>],
    gold: &[GoldSentence],
    target: T,
) -> Result<RecallAtPrecision<T>> {
    let index = index_predictions(preds, gold)?;
    let scored = gold
        .iter()
        .map(|g| Ok((require_score(index[&g.key()])?, g)))
        .collect::<Result<Vec<_>>>()?;
    let mut thresholds: Vec<T> = scored.iter().map(|s| s.0).collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    thresholds.dedup();

    let mut best: Option<(T, T, T)> = None;
    let mut max_precision: Option<T> = None;
    for &t in &thresholds {
        let mut c = Confusion::default();
        for (s, g) in &scored {
            c.add(*s >= t, g.has_error);
        }
        let Some(p) = T::ratio(c.tp, c.tp + c.fp) else {
            continue;
        };
        max_precision = Some(max_precision.map_or(p, |m: T| m.max(p)));
        if p >= target && best.is_none_or(|(_, bp, _)| p < bp) {
            let r = T::ratio(c.tp, c.tp + c.fn_).unwrap_or_else(T::zero);
            best = Some((t, p, r));
        }
    }
    let Some((threshold, precision, overall_recall)) = best else {
        return Err(SnacError::UnachievablePrecision {
            target: target.to_f64().unwrap_or(f64::NAN),
            max_achievable: max_precision.and_then(|m| m.to_f64()).unwrap_or(0.0),
        });
    };
    let (per_category, support) = category_recall_at(&scored, threshold);
    Ok(RecallAtPrecision {
        target_precision: target,
        threshold,
        precision,
        overall_recall,
        per_category,
        support,
    })
}

/// Gold built from `k` annotators per summary, drawn uniformly under `seed`.
pub fn reconstruct_eval_subset(
    docs: &[SummaryDocument],
    sets: &[AnnotationSet],
    k: usize,
    seed: u64,
) -> Result<Vec<AggregatedSet>> {
    if k == 0 {
        return Err(SnacError::InvalidArgument("k must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(docs.len());
    for doc in docs {
        let doc_sets: Vec<AnnotationSet> = sets
            .iter()
            .filter(|s| s.doc_id == doc.doc_id())
            .cloned()
            .collect();
        let ids: Vec<String> = doc_sets
            .iter()
            .flat_map(|s| s.annotator_ids.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if ids.len() < k {
            return Err(SnacError::TooFewAnnotators {
                doc_id: doc.doc_id().to_string(),
                available: ids.len(),
                required: k,
            });
        }
        let mut rng = doc_rng(seed, doc.doc_id());
        let chosen: BTreeSet<&String> = index::sample(&mut rng, ids.len(), k)
            .into_iter()
            .map(|i| &ids[i])
            .collect();
        let subset: Vec<AnnotationSet> = doc_sets
            .iter()
            .flat_map(AnnotationSet::split_by_annotator)
            .filter(|s| s.annotator_ids.iter().all(|id| chosen.contains(id)))
            .collect();
        out.push(aggregate_annotators(&subset, doc)?);
    }
    Ok(out)
}

/// Turns one annotator's spans into hard-label predictions so humans are
/// scored through the same path as models.
pub fn human_as_predictor<T: Scalar>(
    annotator: &AnnotationSet,
    gold: &AggregatedSet,
    doc: &SummaryDocument,
) -> Result<Vec<PredictionRecord<T>>> {
    if let Some(id) = annotator.annotator_ids.iter().find(|id| gold.annotator_ids.contains(*id)) {
        return Err(SnacError::Leakage(id.clone()));
    }
    if annotator.doc_id != doc.doc_id() {
        return Err(SnacError::InvalidArgument(format!(
            "annotations for {} do not match summary {}",
            annotator.doc_id,
            doc.doc_id()
        )));
    }
    Ok(doc
        .sentences()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let fine: Vec<FinePrediction> = annotator
                .annotations
                .iter()
                .filter(|a| s.intersects(a.span.start, a.span.end))
                .map(|a| {
                    let span = (a.category != ErrorCategory::SceneE)
                        .then(|| (a.span.start.max(s.start), a.span.end.min(s.end)));
                    FinePrediction {
                        category: a.category,
                        start: span.map(|x| x.0),
                        end: span.map(|x| x.1),
                    }
                })
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let has_error = fine.iter().any(|f| f.category.is_coherence());
            PredictionRecord {
                doc_id: doc.doc_id().to_string(),
                sentence_index: i,
                score: Some(if has_error { T::one() } else { T::zero() }),
                has_error: Some(has_error),
                fine: Some(fine),
            }
        })
        .collect())
}
