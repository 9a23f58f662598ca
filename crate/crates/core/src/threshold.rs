//! Dev-set threshold selection for "score below threshold means error"
//! scorers (entity grid, LM probability).

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SnacError};
use crate::scalar::{f1, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    MaxF1,
    MaxAccuracy,
}

impl FromStr for Criterion {
    type Err = SnacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max_f1" | "f1" => Ok(Criterion::MaxF1),
            "max_accuracy" | "accuracy" => Ok(Criterion::MaxAccuracy),
            other => Err(SnacError::InvalidArgument(format!("unknown criterion {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ThresholdConfig<T> {
    pub value: T,
    pub criterion: Criterion,
    pub source: String,
    /// Criterion value reached on the dev set.
    pub dev_score: T,
    /// All dev scores were equal.
    pub degenerate: bool,
}

fn criterion_value<T: Scalar>(criterion: Criterion, tp: usize, fp: usize, fn_: usize, tn: usize) -> T {
    match criterion {
        Criterion::MaxAccuracy => T::ratio(tp + tn, tp + fp + fn_ + tn).unwrap_or_else(T::zero),
        Criterion::MaxF1 => {
            let p = T::ratio(tp, tp + fp).unwrap_or_else(T::zero);
            let r = T::ratio(tp, tp + fn_).unwrap_or_else(T::zero);
            f1(p, r)
        }
    }
}

/// Criterion value of the rule `score < threshold => has_error`.
pub fn evaluate_threshold<T: Scalar>(scores: &[T], has_error: &[bool], threshold: T, criterion: Criterion) -> T {
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&s, &y) in scores.iter().zip(has_error) {
        match (s < threshold, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    criterion_value(criterion, tp, fp, fn_, tn)
}

/// Picks the midpoint between consecutive distinct dev scores that
/// maximizes `criterion`; the smallest such threshold wins ties.
pub fn select_threshold<T: Scalar>(
    scores: &[T],
    has_error: &[bool],
    criterion: Criterion,
    source: &str,
) -> Result<ThresholdConfig<T>> {
    if scores.len() != has_error.len() {
        return Err(SnacError::InvalidArgument("scores and labels differ in length".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(SnacError::InvalidArgument("dev scores must be finite".into()));
    }
    let positives = has_error.iter().filter(|&&y| y).count();
    if positives == 0 || positives == has_error.len() {
        return Err(SnacError::SingleClass(
            "dev labels must contain both error and non-error sentences".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite"));

    let total_pos = positives;
    let total_neg = has_error.len() - positives;
    let mut best: Option<(T, T)> = None;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let v = scores[order[i]];
        let mut j = i;
        while j < order.len() && scores[order[j]] == v {
            if has_error[order[j]] {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        if j == order.len() {
            break;
        }
        let next = scores[order[j]];
        let tau = v + (next - v) / T::lit(2.0);
        let value = criterion_value(criterion, tp, fp, total_pos - tp, total_neg - fp);
        if best.is_none_or(|(_, b)| value > b) {
            best = Some((tau, value));
        }
        i = j;
    }

    match best {
        Some((value, dev_score)) => Ok(ThresholdConfig {
            value,
            criterion,
            source: source.to_string(),
            dev_score,
            degenerate: false,
        }),
        None => {
            let v = scores[0];
            let eps = (v.abs() * T::epsilon()).max(T::min_positive_value()) * T::lit(16.0);
            let all = criterion_value::<T>(criterion, total_pos, total_neg, 0, 0);
            let none = criterion_value::<T>(criterion, 0, 0, total_pos, total_neg);
            let (value, dev_score) = if all >= none { (v + eps, all) } else { (v - eps, none) };
            Ok(ThresholdConfig {
                value,
                criterion,
                source: source.to_string(),
                dev_score,
                degenerate: true,
            })
        }
    }
}
