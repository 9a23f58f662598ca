//! Error annotations, validation and annotator aggregation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::document::{SummaryDocument, SCHEMA_VERSION};
use crate::error::{Result, SnacError};
use crate::taxonomy::ErrorCategory;

/// A character range `[start, end)` inside segment `segment`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub segment: usize,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(segment: usize, start: usize, end: usize) -> Self {
        Self {
            segment,
            start,
            end,
        }
    }

    pub fn intersects(&self, start: usize, end: usize) -> bool {
        self.start < end && start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ErrorAnnotation {
    pub span: Span,
    pub category: ErrorCategory,
    pub antecedent: Option<Span>,
    pub annotator_id: String,
}

/// Anything that carries a categorized span.
pub trait Annotated {
    fn category(&self) -> ErrorCategory;
    fn span(&self) -> Span;
}

impl Annotated for ErrorAnnotation {
    fn category(&self) -> ErrorCategory {
        self.category
    }
    fn span(&self) -> Span {
        self.span
    }
}

impl<A: Annotated> Annotated for &A {
    fn category(&self) -> ErrorCategory {
        (*self).category()
    }
    fn span(&self) -> Span {
        (*self).span()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    EmptySpan,
    SpanOutsideDocument,
    SegmentOutOfRange,
    SpanOutsideSegment,
    SceneWholeSentences,
    AntecedentRequired,
    AntecedentNotAllowed,
    AntecedentAfterSpan,
    AntecedentOutOfBounds,
    UnknownAnnotator,
    DocumentMismatch,
    LikertOutOfRange,
}

impl Rule {
    pub fn message(self) -> &'static str {
        match self {
            Rule::EmptySpan => "span must be non-empty (start < end)",
            Rule::SpanOutsideDocument => "span lies outside the document text",
            Rule::SegmentOutOfRange => "segment index out of range",
            Rule::SpanOutsideSegment => "span must lie inside its segment",
            Rule::SceneWholeSentences => "SceneE must be whole sentences",
            Rule::AntecedentRequired => "antecedent required",
            Rule::AntecedentNotAllowed => "antecedent only allowed for InconE and RepE",
            Rule::AntecedentAfterSpan => "antecedent must come from the context or the same segment",
            Rule::AntecedentOutOfBounds => "antecedent span is malformed or outside its segment",
            Rule::UnknownAnnotator => "annotator id not listed in the annotation set",
            Rule::DocumentMismatch => "annotation set refers to a different document",
            Rule::LikertOutOfRange => "Likert score must be in 1..=5",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annotation_index: Option<usize>,
}

impl Violation {
    fn new(rule: Rule, annotation_index: Option<usize>) -> Self {
        Self {
            rule,
            message: rule.message().to_string(),
            annotation_index,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.annotation_index {
            Some(i) => write!(f, "annotation {i}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn check_span(span: &Span, doc: &SummaryDocument) -> Option<Rule> {
    if span.start >= span.end {
        return Some(Rule::EmptySpan);
    }
    if span.end > doc.char_len() {
        return Some(Rule::SpanOutsideDocument);
    }
    if span.segment >= doc.segment_count() {
        return Some(Rule::SegmentOutOfRange);
    }
    if !doc.segment_range(span.segment).contains_range(span.start, span.end) {
        return Some(Rule::SpanOutsideSegment);
    }
    None
}

/// Every rule `a` breaks against `doc`; empty means valid.
pub fn validate_annotation(a: &ErrorAnnotation, doc: &SummaryDocument) -> Vec<Rule> {
    let mut out = Vec::new();
    if !doc.is_segmented() {
        out.push(Rule::SegmentOutOfRange);
        return out;
    }
    let structural = check_span(&a.span, doc);
    if let Some(rule) = structural {
        out.push(rule);
    }

    if a.category == ErrorCategory::SceneE && structural.is_none() {
        let (start, end) = doc.trim_range(a.span.start, a.span.end);
        let sentences = doc.sentences();
        let starts_ok = sentences.iter().any(|s| s.start == start);
        let ends_ok = sentences.iter().any(|s| s.end == end);
        if !(starts_ok && ends_ok) {
            out.push(Rule::SceneWholeSentences);
        }
    }

    match (&a.antecedent, a.category.requires_antecedent()) {
        (None, true) => out.push(Rule::AntecedentRequired),
        (Some(_), false) => out.push(Rule::AntecedentNotAllowed),
        (Some(ante), true) => {
            if check_span(ante, doc).is_some() {
                out.push(Rule::AntecedentOutOfBounds);
            }
            if ante.segment > a.span.segment {
                out.push(Rule::AntecedentAfterSpan);
            }
        }
        (None, false) => {}
    }
    out
}

/// A summary's annotations from one or more annotators.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotationSet {
    pub doc_id: String,
    pub annotations: Vec<ErrorAnnotation>,
    pub annotator_ids: BTreeSet<String>,
    pub likert: BTreeMap<String, u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationEntry {
    pub category: ErrorCategory,
    pub segment: usize,
    pub start: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antecedent: Option<Span>,
}

/// On-disk form: one annotator, one summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationFile {
    pub schema_version: String,
    pub doc_id: String,
    pub annotator_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub likert: Option<u8>,
    pub annotations: Vec<AnnotationEntry>,
}

impl AnnotationFile {
    pub fn from_json(json: &str) -> Result<Self> {
        let file: AnnotationFile = serde_json::from_str(json)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(SnacError::SchemaVersion(file.schema_version));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn into_set(self) -> AnnotationSet {
        let annotations = self
            .annotations
            .into_iter()
            .map(|e| ErrorAnnotation {
                span: Span::new(e.segment, e.start, e.end),
                category: e.category,
                antecedent: e.antecedent,
                annotator_id: self.annotator_id.clone(),
            })
            .collect();
        let mut likert = BTreeMap::new();
        if let Some(l) = self.likert {
            likert.insert(self.annotator_id.clone(), l);
        }
        AnnotationSet {
            doc_id: self.doc_id,
            annotations,
            annotator_ids: BTreeSet::from([self.annotator_id]),
            likert,
        }
    }
}

impl AnnotationSet {
    pub fn new(doc_id: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            ..Default::default()
        }
    }

    pub fn for_annotator(doc_id: impl Into<String>, annotator_id: impl Into<String>) -> Self {
        let mut set = Self::new(doc_id);
        set.annotator_ids.insert(annotator_id.into());
        set
    }

    pub fn push(&mut self, annotation: ErrorAnnotation) {
        self.annotator_ids.insert(annotation.annotator_id.clone());
        self.annotations.push(annotation);
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(AnnotationFile::from_json(json)?.into_set())
    }

    /// Splits the set into one file per annotator.
    pub fn to_files(&self) -> Vec<AnnotationFile> {
        self.annotator_ids
            .iter()
            .map(|id| AnnotationFile {
                schema_version: SCHEMA_VERSION.to_string(),
                doc_id: self.doc_id.clone(),
                annotator_id: id.clone(),
                likert: self.likert.get(id).copied(),
                annotations: self
                    .annotations
                    .iter()
                    .filter(|a| &a.annotator_id == id)
                    .map(|a| AnnotationEntry {
                        category: a.category,
                        segment: a.span.segment,
                        start: a.span.start,
                        end: a.span.end,
                        antecedent: a.antecedent,
                    })
                    .collect(),
            })
            .collect()
    }

    /// Annotations of a single annotator as their own set.
    pub fn annotator(&self, id: &str) -> AnnotationSet {
        let mut set = AnnotationSet::for_annotator(self.doc_id.clone(), id);
        set.annotations = self
            .annotations
            .iter()
            .filter(|a| a.annotator_id == id)
            .cloned()
            .collect();
        if let Some(&l) = self.likert.get(id) {
            set.likert.insert(id.to_string(), l);
        }
        set
    }

    /// Splits a multi-annotator set into single-annotator sets.
    pub fn split_by_annotator(&self) -> Vec<AnnotationSet> {
        self.annotator_ids.iter().map(|id| self.annotator(id)).collect()
    }

    pub fn validate(&self, doc: &SummaryDocument) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.doc_id != doc.doc_id() {
            out.push(Violation::new(Rule::DocumentMismatch, None));
        }
        for (id, &score) in &self.likert {
            if !(1..=5).contains(&score) || !self.annotator_ids.contains(id) {
                out.push(Violation::new(Rule::LikertOutOfRange, None));
            }
        }
        for (i, a) in self.annotations.iter().enumerate() {
            if !self.annotator_ids.contains(&a.annotator_id) {
                out.push(Violation::new(Rule::UnknownAnnotator, Some(i)));
            }
            out.extend(
                validate_annotation(a, doc)
                    .into_iter()
                    .map(|r| Violation::new(r, Some(i))),
            );
        }
        out
    }

    pub fn ensure_valid(&self, doc: &SummaryDocument) -> Result<()> {
        let v = self.validate(doc);
        if v.is_empty() {
            Ok(())
        } else {
            Err(SnacError::Validation(v))
        }
    }
}

/// One aggregated error with the annotators that marked it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregatedAnnotation {
    pub category: ErrorCategory,
    pub span: Span,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antecedent: Option<Span>,
    pub annotators: BTreeSet<String>,
    /// Number of annotators that marked this exact span.
    pub support: usize,
}

impl Annotated for AggregatedAnnotation {
    fn category(&self) -> ErrorCategory {
        self.category
    }
    fn span(&self) -> Span {
        self.span
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregatedSet {
    pub doc_id: String,
    pub annotator_ids: BTreeSet<String>,
    pub likert: BTreeMap<String, u8>,
    pub annotations: Vec<AggregatedAnnotation>,
}

impl AggregatedSet {
    /// True if every record here also appears in `other` with a subset of its
    /// annotators.
    pub fn is_subset_of(&self, other: &AggregatedSet) -> bool {
        self.annotations.iter().all(|a| {
            other.annotations.iter().any(|b| {
                a.category == b.category && a.span == b.span && a.annotators.is_subset(&b.annotators)
            })
        })
    }
}

/// Union of all annotators' errors. Records with the same category and
/// whitespace-trimmed character range collapse into one, with `support`
/// equal to the number of distinct annotators that marked it.
pub fn aggregate_annotators(sets: &[AnnotationSet], doc: &SummaryDocument) -> Result<AggregatedSet> {
    let doc_id = doc.doc_id().to_string();
    if let Some(bad) = sets.iter().find(|s| s.doc_id != doc_id) {
        return Err(SnacError::InvalidArgument(format!(
            "cannot aggregate annotations for {} with {}",
            bad.doc_id, doc_id
        )));
    }
    type Key = (usize, usize, ErrorCategory);
    let mut merged: BTreeMap<Key, (Span, BTreeMap<String, Option<Span>>)> = BTreeMap::new();
    let mut annotator_ids = BTreeSet::new();
    let mut likert = BTreeMap::new();
    for set in sets {
        annotator_ids.extend(set.annotator_ids.iter().cloned());
        likert.extend(set.likert.iter().map(|(k, v)| (k.clone(), *v)));
        for a in &set.annotations {
            let (start, end) = doc.trim_range(a.span.start, a.span.end);
            let span = Span::new(a.span.segment, start, end);
            let entry = merged
                .entry((start, end, a.category))
                .or_insert_with(|| (span, BTreeMap::new()));
            // keep the first antecedent seen per annotator, ordered below
            entry
                .1
                .entry(a.annotator_id.clone())
                .or_insert(a.antecedent);
        }
    }
    let annotations = merged
        .into_iter()
        .map(|((_, _, category), (span, by_annotator))| {
            // antecedent of the lexicographically first annotator
            let antecedent = by_annotator.values().find_map(|a| *a);
            let annotators: BTreeSet<String> = by_annotator.into_keys().collect();
            AggregatedAnnotation {
                category,
                span,
                antecedent,
                support: annotators.len(),
                annotators,
            }
        })
        .collect();
    Ok(AggregatedSet {
        doc_id,
        annotator_ids,
        likert,
        annotations,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::document::CharRange;

    /// Six sentences in two segments of three.
    pub(crate) fn fixture_doc() -> SummaryDocument {
        let sentences = [
            "Gabriel Oak farms sheep.",
            "Bathsheba arrives at the farm.",
            "The storm destroys everything.",
            "Troy leaves the army.",
            "Gabriel saves the ricks.",
            "Later they marry.",
        ];
        let mut text = String::new();
        let mut ranges = Vec::new();
        for s in sentences {
            if !text.is_empty() {
                text.push(' ');
            }
            let start = text.chars().count();
            text.push_str(s);
            ranges.push(CharRange::new(start, text.chars().count()));
        }
        SummaryDocument::new("doc1", "sys", text, ranges, vec![], vec![3, 6]).unwrap()
    }

    pub(crate) fn ann(
        annotator: &str,
        category: ErrorCategory,
        segment: usize,
        start: usize,
        end: usize,
    ) -> ErrorAnnotation {
        ErrorAnnotation {
            span: Span::new(segment, start, end),
            category,
            antecedent: None,
            annotator_id: annotator.to_string(),
        }
    }

    #[test]
    fn well_formed_chare_is_ok() {
        let doc = fixture_doc();
        // "Bathsheba"
        assert!(validate_annotation(&ann("a", ErrorCategory::CharE, 0, 25, 34), &doc).is_empty());
    }

    #[test]
    fn scene_half_sentence() {
        let doc = fixture_doc();
        let s = doc.sentences()[2];
        let a = ann("a", ErrorCategory::SceneE, 0, s.start, s.start + 9);
        let v = validate_annotation(&a, &doc);
        assert_eq!(v, vec![Rule::SceneWholeSentences]);
        assert_eq!(v[0].message(), "SceneE must be whole sentences");

        let whole = ann("a", ErrorCategory::SceneE, 0, doc.sentences()[1].start, s.end);
        assert!(validate_annotation(&whole, &doc).is_empty());
    }

    #[test]
    fn incone_needs_antecedent() {
        let doc = fixture_doc();
        let s = doc.sentences()[4];
        let mut a = ann("a", ErrorCategory::InconE, 1, s.start, s.start + 7);
        assert_eq!(validate_annotation(&a, &doc), vec![Rule::AntecedentRequired]);
        assert_eq!(Rule::AntecedentRequired.message(), "antecedent required");
        a.antecedent = Some(Span::new(0, 0, 7));
        assert!(validate_annotation(&a, &doc).is_empty());

        let mut later = ann("a", ErrorCategory::RepE, 0, 0, 7);
        later.antecedent = Some(Span::new(1, s.start, s.start + 7));
        assert_eq!(validate_annotation(&later, &doc), vec![Rule::AntecedentAfterSpan]);
    }

    #[test]
    fn structural_violations() {
        let doc = fixture_doc();
        let n = doc.char_len();
        assert_eq!(
            validate_annotation(&ann("a", ErrorCategory::GramE, 1, n, n + 4), &doc),
            vec![Rule::SpanOutsideDocument]
        );
        assert_eq!(
            validate_annotation(&ann("a", ErrorCategory::GramE, 1, 0, 4), &doc),
            vec![Rule::SpanOutsideSegment]
        );
        assert_eq!(
            validate_annotation(&ann("a", ErrorCategory::GramE, 0, 4, 4), &doc),
            vec![Rule::EmptySpan]
        );
        let mut c = ann("a", ErrorCategory::CharE, 0, 0, 4);
        c.antecedent = Some(Span::new(0, 0, 2));
        assert_eq!(validate_annotation(&c, &doc), vec![Rule::AntecedentNotAllowed]);
    }

    #[test]
    fn set_validation_checks_annotators() {
        let doc = fixture_doc();
        let mut set = AnnotationSet::for_annotator("doc1", "a");
        set.annotations.push(ann("b", ErrorCategory::CharE, 0, 0, 7));
        set.likert.insert("a".into(), 9);
        let rules: Vec<Rule> = set.validate(&doc).into_iter().map(|v| v.rule).collect();
        assert_eq!(rules, vec![Rule::LikertOutOfRange, Rule::UnknownAnnotator]);
    }

    fn single(annotator: &str, anns: Vec<ErrorAnnotation>) -> AnnotationSet {
        let mut s = AnnotationSet::for_annotator("doc1", annotator);
        for a in anns {
            s.push(a);
        }
        s
    }

    #[test]
    fn disjoint_union() {
        let doc = fixture_doc();
        let sets = vec![
            single("a", vec![ann("a", ErrorCategory::CharE, 0, 0, 7)]),
            single("b", vec![ann("b", ErrorCategory::CharE, 0, 25, 34)]),
            single("c", vec![ann("c", ErrorCategory::GramE, 0, 40, 45)]),
        ];
        let agg = aggregate_annotators(&sets, &doc).unwrap();
        assert_eq!(agg.annotations.len(), 3);
        assert!(agg.annotations.iter().all(|a| a.support == 1));
    }

    #[test]
    fn identical_spans_collapse() {
        let doc = fixture_doc();
        let sets = vec![
            single("a", vec![ann("a", ErrorCategory::CharE, 0, 25, 34)]),
            // same span with a trailing space trims to the same range
            single("b", vec![ann("b", ErrorCategory::CharE, 0, 25, 35)]),
        ];
        assert_eq!(doc.text().chars().nth(34), Some(' '));
        let agg = aggregate_annotators(&sets, &doc).unwrap();
        assert_eq!(agg.annotations.len(), 1);
        assert_eq!(agg.annotations[0].support, 2);
        assert_eq!(agg.annotations[0].span, Span::new(0, 25, 34));
    }

    #[test]
    fn near_duplicates_stay_distinct() {
        let doc = fixture_doc();
        let sets = vec![
            single("a", vec![ann("a", ErrorCategory::CharE, 0, 25, 34)]),
            single("b", vec![ann("b", ErrorCategory::CharE, 0, 25, 33)]),
        ];
        assert_eq!(aggregate_annotators(&sets, &doc).unwrap().annotations.len(), 2);
    }

    #[test]
    fn empty_and_mixed_docs() {
        let doc = fixture_doc();
        let agg = aggregate_annotators(&[single("a", vec![]), single("b", vec![])], &doc).unwrap();
        assert!(agg.annotations.is_empty());
        let other = AnnotationSet::for_annotator("doc2", "c");
        assert!(aggregate_annotators(&[single("a", vec![]), other], &doc).is_err());
    }

    #[test]
    fn file_round_trip() {
        let mut set = single("a", vec![ann("a", ErrorCategory::CharE, 0, 25, 34)]);
        let mut inc = ann("a", ErrorCategory::InconE, 1, 90, 95);
        inc.antecedent = Some(Span::new(0, 0, 7));
        set.push(inc);
        set.likert.insert("a".into(), 3);
        let files = set.to_files();
        assert_eq!(files.len(), 1);
        let back = AnnotationSet::from_json(&files[0].to_json().unwrap()).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn unknown_category_rejected_at_parse() {
        let json = r#"{"schema_version":"1","doc_id":"d","annotator_id":"a",
            "annotations":[{"category":"FactE","segment":0,"start":0,"end":3}]}"#;
        assert!(AnnotationFile::from_json(json).is_err());
    }
}
