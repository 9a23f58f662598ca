//! Inter-annotator agreement: Krippendorff's alpha, two-agree percentage and
//! union normalization of overlapping spans.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotation::{AnnotationSet, Span};
use crate::document::SummaryDocument;
use crate::error::{Result, SnacError};
use crate::projection::{project_labels, Level};
use crate::scalar::Scalar;
use crate::taxonomy::{CategorySelector, ErrorCategory, Scope};

/// Units × raters table of optional integer labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingMatrix {
    pub units: Vec<String>,
    pub raters: Vec<String>,
    /// `values[unit][rater]`
    pub values: Vec<Vec<Option<i64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Nominal,
    Interval,
}

impl FromStr for Metric {
    type Err = SnacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nominal" => Ok(Metric::Nominal),
            "interval" => Ok(Metric::Interval),
            other => Err(SnacError::InvalidArgument(format!("unknown metric {other:?}"))),
        }
    }
}

impl RatingMatrix {
    pub fn new(raters: Vec<String>) -> Self {
        Self {
            units: Vec::new(),
            raters,
            values: Vec::new(),
        }
    }

    pub fn push_unit(&mut self, id: impl Into<String>, row: Vec<Option<i64>>) {
        assert_eq!(row.len(), self.raters.len(), "row width must match rater count");
        self.units.push(id.into());
        self.values.push(row);
    }

    /// Stacks matrices unit-wise; raters are aligned by id and missing
    /// entries become `None`.
    pub fn concat(parts: &[RatingMatrix]) -> RatingMatrix {
        let raters: Vec<String> = parts
            .iter()
            .flat_map(|m| m.raters.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: BTreeMap<&str, usize> =
            raters.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
        let mut out = RatingMatrix::new(raters.clone());
        for m in parts {
            let cols: Vec<usize> = m.raters.iter().map(|r| index[r.as_str()]).collect();
            for (unit, row) in m.units.iter().zip(&m.values) {
                let mut full = vec![None; raters.len()];
                for (&c, v) in cols.iter().zip(row) {
                    full[c] = *v;
                }
                out.push_unit(unit.clone(), full);
            }
        }
        out
    }

    pub fn map_values(&self, f: impl Fn(i64) -> i64) -> RatingMatrix {
        RatingMatrix {
            units: self.units.clone(),
            raters: self.raters.clone(),
            values: self
                .values
                .iter()
                .map(|row| row.iter().map(|v| v.map(&f)).collect())
                .collect(),
        }
    }
}

/// Sum of `delta(a, b)` over ordered pairs of distinct positions in a value
/// multiset given as counts. Exact in integers.
fn pair_disagreement(counts: &BTreeMap<i64, i128>, metric: Metric) -> i128 {
    let m: i128 = counts.values().sum();
    match metric {
        Metric::Nominal => m * m - counts.values().map(|c| c * c).sum::<i128>(),
        Metric::Interval => {
            let s1: i128 = counts.iter().map(|(&v, &c)| c * v as i128).sum();
            let s2: i128 = counts.iter().map(|(&v, &c)| c * (v as i128) * (v as i128)).sum();
            2 * (m * s2 - s1 * s1)
        }
    }
}

/// Krippendorff's alpha, `1 - D_o / D_e`.
///
/// Units with fewer than two values are dropped. Observed disagreement is
/// averaged over within-unit value pairs, expected disagreement over pairs
/// drawn without replacement from the pooled values of the remaining units.
pub fn krippendorff_alpha<T: Scalar>(m: &RatingMatrix, metric: Metric) -> Result<T> {
    let mut pooled: BTreeMap<i64, i128> = BTreeMap::new();
    let mut observed = T::zero();
    let mut n: usize = 0;
    for row in &m.values {
        let mut counts: BTreeMap<i64, i128> = BTreeMap::new();
        for v in row.iter().flatten() {
            *counts.entry(*v).or_default() += 1;
        }
        let m_u: i128 = counts.values().sum();
        if m_u < 2 {
            continue;
        }
        for (v, c) in &counts {
            *pooled.entry(*v).or_default() += c;
        }
        n += m_u as usize;
        let within = pair_disagreement(&counts, metric);
        observed = observed + T::lit(within as f64) / T::lit((m_u - 1) as f64);
    }
    if n == 0 {
        return Err(SnacError::UndefinedAgreement(
            "no unit has two or more ratings".into(),
        ));
    }
    let expected = pair_disagreement(&pooled, metric);
    if expected == 0 {
        return Err(SnacError::UndefinedAgreement(
            "all pooled values are identical".into(),
        ));
    }
    Ok(T::one() - T::from_count(n - 1) * observed / T::lit(expected as f64))
}

fn rater_sets(sets: &[AnnotationSet], doc: &SummaryDocument) -> Result<Vec<AnnotationSet>> {
    if let Some(bad) = sets.iter().find(|s| s.doc_id != doc.doc_id()) {
        return Err(SnacError::InvalidArgument(format!(
            "annotation set for {} does not match document {}",
            bad.doc_id,
            doc.doc_id()
        )));
    }
    let mut by_rater: BTreeMap<String, AnnotationSet> = BTreeMap::new();
    for set in sets {
        for single in set.split_by_annotator() {
            let id = single.annotator_ids.iter().next().cloned().unwrap_or_default();
            by_rater
                .entry(id.clone())
                .or_insert_with(|| AnnotationSet::for_annotator(doc.doc_id(), id))
                .annotations
                .extend(single.annotations);
        }
    }
    if by_rater.len() < 2 {
        return Err(SnacError::InvalidArgument(format!(
            "agreement on {} needs at least 2 annotators, found {}",
            doc.doc_id(),
            by_rater.len()
        )));
    }
    Ok(by_rater.into_values().collect())
}

fn token_marks(set: &AnnotationSet, doc: &SummaryDocument, selector: CategorySelector) -> Vec<bool> {
    let mut marks = vec![false; doc.token_count()];
    for a in set.annotations.iter().filter(|a| selector.matches(a.category)) {
        for t in doc.covered_tokens(a.span.start, a.span.end) {
            marks[t] = true;
        }
    }
    marks
}

/// One unit per token; 1 where the rater has a span of `selector` covering
/// the token, else 0.
pub fn token_matrix(
    sets: &[AnnotationSet],
    doc: &SummaryDocument,
    selector: CategorySelector,
) -> Result<RatingMatrix> {
    let raters = rater_sets(sets, doc)?;
    let marks: Vec<Vec<bool>> = raters.iter().map(|s| token_marks(s, doc, selector)).collect();
    let mut m = RatingMatrix::new(raters.iter().map(rater_id).collect());
    for t in 0..doc.token_count() {
        let row = marks.iter().map(|mk| Some(mk[t] as i64)).collect();
        m.push_unit(format!("{}#t{t}", doc.doc_id()), row);
    }
    Ok(m)
}

fn rater_id(set: &AnnotationSet) -> String {
    set.annotator_ids.iter().next().cloned().unwrap_or_default()
}

/// Binary has-error matrix at sentence or segment level.
pub fn unit_matrix(
    sets: &[AnnotationSet],
    doc: &SummaryDocument,
    level: Level,
    scope: Scope,
) -> Result<RatingMatrix> {
    let raters = rater_sets(sets, doc)?;
    let projections = raters
        .iter()
        .map(|s| project_labels(&s.annotations, doc, level, scope))
        .collect::<Result<Vec<_>>>()?;
    let mut m = RatingMatrix::new(raters.iter().map(rater_id).collect());
    let prefix = match level {
        Level::Sentence => "s",
        Level::Segment => "g",
    };
    for u in 0..projections[0].labels.len() {
        let row = projections.iter().map(|p| Some(p.labels[u] as i64)).collect();
        m.push_unit(format!("{}#{prefix}{u}", doc.doc_id()), row);
    }
    Ok(m)
}

/// Summaries × annotators matrix of Likert scores.
pub fn likert_matrix(sets: &[AnnotationSet]) -> RatingMatrix {
    let mut by_doc: BTreeMap<&str, BTreeMap<&str, u8>> = BTreeMap::new();
    for set in sets {
        let row = by_doc.entry(set.doc_id.as_str()).or_default();
        for (id, &score) in &set.likert {
            row.insert(id.as_str(), score);
        }
    }
    let raters: Vec<String> = by_doc
        .values()
        .flat_map(|r| r.keys().map(|k| k.to_string()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut m = RatingMatrix::new(raters.clone());
    for (doc, row) in by_doc {
        let values = raters.iter().map(|r| row.get(r.as_str()).map(|&v| v as i64)).collect();
        m.push_unit(doc, values);
    }
    m
}

pub const LIKERT_THRESHOLDS: [f64; 4] = [1.5, 2.5, 3.5, 4.5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinarizedAlpha<T> {
    pub threshold: f64,
    pub alpha: T,
}

/// Binarizes 1-5 ratings at each of [`LIKERT_THRESHOLDS`] and keeps the
/// threshold with the highest nominal alpha (lowest threshold on ties).
pub fn best_binarized_alpha<T: Scalar>(m: &RatingMatrix) -> Result<BinarizedAlpha<T>> {
    let mut best: Option<BinarizedAlpha<T>> = None;
    for threshold in LIKERT_THRESHOLDS {
        let binary = m.map_values(|v| ((v as f64) > threshold) as i64);
        let Ok(alpha) = krippendorff_alpha::<T>(&binary, Metric::Nominal) else {
            continue;
        };
        if best.is_none_or(|b| alpha > b.alpha) {
            best = Some(BinarizedAlpha { threshold, alpha });
        }
    }
    best.ok_or_else(|| {
        SnacError::UndefinedAgreement("no Likert threshold yields a defined alpha".into())
    })
}

/// Percentage of tokens marked by at least one rater that at least one more
/// rater also marked.
pub fn two_agree<T: Scalar>(
    sets: &[AnnotationSet],
    doc: &SummaryDocument,
    selector: CategorySelector,
) -> Result<T> {
    let (agree, marked) = two_agree_counts(sets, doc, selector)?;
    T::ratio(agree, marked)
        .map(|r| T::lit(100.0) * r)
        .ok_or(SnacError::UndefinedTwoAgree)
}

/// `(tokens marked by >= 2 raters, tokens marked by >= 1 rater)`, for
/// pooling across documents.
pub fn two_agree_counts(
    sets: &[AnnotationSet],
    doc: &SummaryDocument,
    selector: CategorySelector,
) -> Result<(usize, usize)> {
    let raters = rater_sets(sets, doc)?;
    let marks: Vec<Vec<bool>> = raters.iter().map(|s| token_marks(s, doc, selector)).collect();
    let mut agree = 0;
    let mut marked = 0;
    for t in 0..doc.token_count() {
        let k = marks.iter().filter(|m| m[t]).count();
        marked += (k >= 1) as usize;
        agree += (k >= 2) as usize;
    }
    Ok((agree, marked))
}

/// Replaces every span of a listed category by the union of its connected
/// component, where spans are connected when their token sets overlap
/// (transitively, across all raters).
pub fn normalize_overlapping_spans(
    sets: &[AnnotationSet],
    doc: &SummaryDocument,
    categories: &[ErrorCategory],
) -> Vec<AnnotationSet> {
    let mut out: Vec<AnnotationSet> = sets.to_vec();
    for &category in categories {
        let members: Vec<(usize, usize)> = out
            .iter()
            .enumerate()
            .flat_map(|(si, s)| {
                s.annotations
                    .iter()
                    .enumerate()
                    .filter(move |(_, a)| a.category == category)
                    .map(move |(ai, _)| (si, ai))
            })
            .collect();
        let tokens: Vec<_> = members
            .iter()
            .map(|&(si, ai)| {
                let sp = out[si].annotations[ai].span;
                doc.covered_tokens(sp.start, sp.end)
            })
            .collect();

        let mut parent: Vec<usize> = (0..members.len()).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                let (a, b) = (&tokens[i], &tokens[j]);
                if !a.is_empty() && !b.is_empty() && a.start < b.end && b.start < a.end {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }
        let mut unions: BTreeMap<usize, Span> = BTreeMap::new();
        for (k, &(si, ai)) in members.iter().enumerate() {
            let root = find(&mut parent, k);
            let sp = out[si].annotations[ai].span;
            unions
                .entry(root)
                .and_modify(|u| {
                    u.start = u.start.min(sp.start);
                    u.end = u.end.max(sp.end);
                    u.segment = u.segment.min(sp.segment);
                })
                .or_insert(sp);
        }
        for (k, &(si, ai)) in members.iter().enumerate() {
            let root = find(&mut parent, k);
            out[si].annotations[ai].span = unions[&root];
        }
    }
    for set in &mut out {
        let mut seen = BTreeSet::new();
        set.annotations.retain(|a| seen.insert(a.clone()));
    }
    out
}
