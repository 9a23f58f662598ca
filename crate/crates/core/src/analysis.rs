//! Error-type distributions and error-count vs Likert correlations.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::annotation::{AggregatedSet, AnnotationSet};
use crate::document::SummaryDocument;
use crate::error::{Result, SnacError};
use crate::scalar::Scalar;
use crate::taxonomy::{ErrorCategory, ErrorGroup};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct ErrorDistribution<T> {
    pub dataset_id: String,
    pub summaries: usize,
    pub unique_errors: BTreeMap<ErrorCategory, usize>,
    /// Share of unique errors per category present in the data.
    pub unique_fraction: BTreeMap<ErrorCategory, T>,
    /// Per-summary fraction of tokens covered by each category, averaged
    /// over summaries.
    pub token_fraction: BTreeMap<ErrorCategory, T>,
}

pub fn error_type_distribution<T: Scalar>(
    dataset_id: &str,
    sets: &[AggregatedSet],
    docs: &[SummaryDocument],
) -> Result<ErrorDistribution<T>> {
    if sets.is_empty() {
        return Err(SnacError::UndefinedDistribution("no annotation sets".into()));
    }
    let by_id: BTreeMap<&str, &SummaryDocument> = docs.iter().map(|d| (d.doc_id(), d)).collect();
    let mut unique: BTreeMap<ErrorCategory, usize> = BTreeMap::new();
    let mut token_sum: BTreeMap<ErrorCategory, T> =
        ErrorCategory::ALL.iter().map(|&c| (c, T::zero())).collect();
    let mut summaries = 0;
    for set in sets {
        let doc = by_id.get(set.doc_id.as_str()).ok_or_else(|| {
            SnacError::InvalidArgument(format!("no summary for {}", set.doc_id))
        })?;
        for a in &set.annotations {
            *unique.entry(a.category).or_default() += 1;
        }
        let total = doc.token_count();
        if total == 0 {
            continue;
        }
        summaries += 1;
        for category in ErrorCategory::ALL {
            let mut covered = vec![false; total];
            for a in set.annotations.iter().filter(|a| a.category == category) {
                for t in doc.covered_tokens(a.span.start, a.span.end) {
                    covered[t] = true;
                }
            }
            let n = covered.iter().filter(|&&c| c).count();
            let frac = T::from_count(n) / T::from_count(total);
            let acc = token_sum.get_mut(&category).expect("all categories seeded");
            *acc = *acc + frac;
        }
    }
    let total_unique: usize = unique.values().sum();
    if total_unique == 0 || summaries == 0 {
        return Err(SnacError::UndefinedDistribution(
            "no annotated errors in the input".into(),
        ));
    }
    let unique_fraction = unique
        .iter()
        .map(|(&c, &n)| (c, T::from_count(n) / T::from_count(total_unique)))
        .collect();
    let token_fraction = token_sum
        .into_iter()
        .map(|(c, s)| (c, s / T::from_count(summaries)))
        .collect();
    Ok(ErrorDistribution {
        dataset_id: dataset_id.to_string(),
        summaries,
        unique_errors: unique,
        unique_fraction,
        token_fraction,
    })
}

/// What an error count is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CountKey {
    Category(ErrorCategory),
    Group(ErrorGroup),
    Total,
}

impl CountKey {
    pub fn all() -> Vec<CountKey> {
        let mut keys: Vec<CountKey> = ErrorCategory::ALL.into_iter().map(CountKey::Category).collect();
        keys.push(CountKey::Group(ErrorGroup::Coherence));
        keys.push(CountKey::Group(ErrorGroup::Language));
        keys.push(CountKey::Total);
        keys
    }
}

impl fmt::Display for CountKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CountKey::Category(c) => write!(f, "{c}"),
            CountKey::Group(g) => write!(f, "{g}"),
            CountKey::Total => f.write_str("total"),
        }
    }
}

impl Serialize for CountKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

pub fn error_counts(set: &AnnotationSet) -> BTreeMap<CountKey, usize> {
    let mut counts: BTreeMap<CountKey, usize> = CountKey::all().into_iter().map(|k| (k, 0)).collect();
    for a in &set.annotations {
        for key in [
            CountKey::Category(a.category),
            CountKey::Group(a.category.group()),
            CountKey::Total,
        ] {
            *counts.get_mut(&key).expect("seeded") += 1;
        }
    }
    counts
}

/// One observation per (summary, annotator) that has a Likert score:
/// the annotator's own error counts paired with their own rating.
pub fn likert_observations(sets: &[AnnotationSet]) -> Vec<(BTreeMap<CountKey, usize>, u8)> {
    sets.iter()
        .flat_map(|set| set.split_by_annotator())
        .filter_map(|single| {
            let id = single.annotator_ids.iter().next()?;
            let score = *single.likert.get(id)?;
            Some((error_counts(&single), score))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct Correlation<T> {
    pub r: T,
    /// Two-tailed p-value from Student's t with `n - 2` degrees of freedom.
    pub p: T,
    pub n: usize,
}

pub fn pearson<T: Scalar>(xs: &[T], ys: &[T]) -> Result<Correlation<T>> {
    if xs.len() != ys.len() {
        return Err(SnacError::InvalidArgument("vectors differ in length".into()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(SnacError::UndefinedCorrelation(format!(
            "need at least 3 observations, got {n}"
        )));
    }
    let nt = T::from_count(n);
    let mx = xs.iter().copied().sum::<T>() / nt;
    let my = ys.iter().copied().sum::<T>() / nt;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(SnacError::UndefinedCorrelation("zero variance".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).max(-T::one()).min(T::one());
    let df = (n - 2) as f64;
    let rf = r.to_f64().unwrap_or(0.0);
    let p = if rf.abs() >= 1.0 {
        0.0
    } else {
        let t = rf * (df / (1.0 - rf * rf)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        2.0 * (1.0 - dist.cdf(t.abs()))
    };
    Ok(Correlation {
        r,
        p: T::lit(p),
        n,
    })
}

/// Pearson correlation between each count key and the Likert score.
pub fn likert_error_correlation<T: Scalar>(
    observations: &[(BTreeMap<CountKey, usize>, u8)],
) -> Vec<(CountKey, Result<Correlation<T>>)> {
    let scores: Vec<T> = observations.iter().map(|(_, s)| T::from_count(*s as usize)).collect();
    CountKey::all()
        .into_iter()
        .map(|key| {
            let counts: Vec<T> = observations
                .iter()
                .map(|(c, _)| T::from_count(c.get(&key).copied().unwrap_or(0)))
                .collect();
            (key, pearson(&counts, &scores))
        })
        .collect()
}
