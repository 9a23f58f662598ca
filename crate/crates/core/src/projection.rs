//! Projection of span annotations onto sentence or segment labels.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotation::Annotated;
use crate::document::{CharRange, SummaryDocument};
use crate::error::{Result, SnacError};
use crate::taxonomy::Scope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Sentence,
    Segment,
}

impl FromStr for Level {
    type Err = SnacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sentence" => Ok(Level::Sentence),
            "segment" => Ok(Level::Segment),
            other => Err(SnacError::InvalidArgument(format!("unknown level {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectedLabels {
    pub level: Level,
    pub scope: Scope,
    /// `has_error` per unit.
    pub labels: Vec<bool>,
}

impl ProjectedLabels {
    pub fn flagged(&self) -> usize {
        self.labels.iter().filter(|&&b| b).count()
    }
}

pub fn unit_ranges(doc: &SummaryDocument, level: Level) -> Result<Vec<CharRange>> {
    Ok(match level {
        Level::Sentence => doc.sentences().to_vec(),
        Level::Segment => {
            doc.require_segmented()?;
            (0..doc.segment_count()).map(|s| doc.segment_range(s)).collect()
        }
    })
}

/// A unit has an error iff some annotation in `scope` intersects it.
pub fn project_labels<A: Annotated>(
    annotations: &[A],
    doc: &SummaryDocument,
    level: Level,
    scope: Scope,
) -> Result<ProjectedLabels> {
    let units = unit_ranges(doc, level)?;
    let mut labels = vec![false; units.len()];
    for a in annotations.iter().filter(|a| scope.matches(a.category())) {
        let span = a.span();
        for (flag, unit) in labels.iter_mut().zip(&units) {
            if unit.intersects(span.start, span.end) {
                *flag = true;
            }
        }
    }
    Ok(ProjectedLabels {
        level,
        scope,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::tests::{ann, fixture_doc};
    use crate::annotation::ErrorAnnotation;
    use crate::taxonomy::ErrorCategory;
    use proptest::prelude::*;

    #[test]
    fn chare_flags_sentence() {
        let doc = fixture_doc();
        let p = project_labels(
            &[ann("a", ErrorCategory::CharE, 0, 25, 34)],
            &doc,
            Level::Sentence,
            Scope::Coherence,
        )
        .unwrap();
        assert_eq!(p.labels, vec![false, true, false, false, false, false]);
    }

    #[test]
    fn corefe_is_not_coherence() {
        let doc = fixture_doc();
        let anns = [ann("a", ErrorCategory::CorefE, 0, 25, 34)];
        let p = project_labels(&anns, &doc, Level::Sentence, Scope::Coherence).unwrap();
        assert_eq!(p.flagged(), 0);
        let p = project_labels(&anns, &doc, Level::Sentence, Scope::Language).unwrap();
        assert_eq!(p.flagged(), 1);
    }

    #[test]
    fn empty_annotations() {
        let doc = fixture_doc();
        for scope in [Scope::Coherence, Scope::Language, Scope::All] {
            for level in [Level::Sentence, Level::Segment] {
                let p = project_labels::<ErrorAnnotation>(&[], &doc, level, scope).unwrap();
                assert_eq!(p.flagged(), 0);
            }
        }
        let p = project_labels::<ErrorAnnotation>(&[], &doc, Level::Segment, Scope::All).unwrap();
        assert_eq!(p.labels.len(), 2);
    }

    #[test]
    fn segment_level() {
        let doc = fixture_doc();
        let s = doc.sentences()[4];
        let p = project_labels(
            &[ann("a", ErrorCategory::RefE, 1, s.start, s.end)],
            &doc,
            Level::Segment,
            Scope::All,
        )
        .unwrap();
        assert_eq!(p.labels, vec![false, true]);
    }

    fn arb_annotation() -> impl Strategy<Value = ErrorAnnotation> {
        (0usize..7, 0usize..140, 1usize..30).prop_map(|(c, start, len)| {
            let doc = fixture_doc();
            let end = (start + len).min(doc.char_len());
            let start = start.min(end - 1);
            ann("a", ErrorCategory::ALL[c], 0, start, end)
        })
    }

    proptest! {
        #[test]
        fn all_scope_is_union(anns in proptest::collection::vec(arb_annotation(), 0..8)) {
            let doc = fixture_doc();
            for level in [Level::Sentence, Level::Segment] {
                let all = project_labels(&anns, &doc, level, Scope::All).unwrap();
                let coh = project_labels(&anns, &doc, level, Scope::Coherence).unwrap();
                let lang = project_labels(&anns, &doc, level, Scope::Language).unwrap();
                for i in 0..all.labels.len() {
                    prop_assert_eq!(all.labels[i], coh.labels[i] || lang.labels[i]);
                }
            }
        }
    }
}
