//! ROUGE-1, ROUGE-2 and summary-level ROUGE-L.
//!
//! Text is lowercased and split with the crate tokenizer; punctuation-only
//! tokens are dropped. No stemming and no stopword removal.

use std::collections::HashMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SnacError};
use crate::scalar::Scalar;
use crate::tokenize::{is_punct, words};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RougeVariant {
    R1,
    R2,
    RL,
}

impl FromStr for RougeVariant {
    type Err = SnacError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "R1" | "ROUGE-1" => Ok(RougeVariant::R1),
            "R2" | "ROUGE-2" => Ok(RougeVariant::R2),
            "RL" | "ROUGE-L" => Ok(RougeVariant::RL),
            other => Err(SnacError::InvalidArgument(format!("unknown ROUGE variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RougeScore<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
    /// Set when either side is too short for the variant; scores are zero.
    pub degenerate: bool,
}

impl<T: Scalar> RougeScore<T> {
    fn degenerate() -> Self {
        Self {
            precision: T::zero(),
            recall: T::zero(),
            f1: T::zero(),
            degenerate: true,
        }
    }

    fn from_counts(hits: usize, candidate: usize, reference: usize) -> Self {
        Self {
            precision: T::from_count(hits) / T::from_count(candidate),
            recall: T::from_count(hits) / T::from_count(reference),
            f1: T::from_count(2 * hits) / T::from_count(candidate + reference),
            degenerate: false,
        }
    }
}

/// Options recorded alongside reported scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RougeConfig {
    pub lowercase: bool,
    pub stemming: bool,
    pub stopword_removal: bool,
    pub drop_punctuation: bool,
    pub rouge_l: &'static str,
}

pub const ROUGE_CONFIG: RougeConfig = RougeConfig {
    lowercase: true,
    stemming: false,
    stopword_removal: false,
    drop_punctuation: true,
    rouge_l: "summary-level LCS over the full token sequence",
};

pub fn rouge_tokens(text: &str) -> Vec<String> {
    words(text)
        .into_iter()
        .filter(|w| !w.chars().all(is_punct))
        .map(|w| w.to_lowercase())
        .collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

fn rouge_n<T: Scalar>(cand: &[String], reference: &[String], n: usize) -> RougeScore<T> {
    if cand.len() < n || reference.len() < n {
        return RougeScore::degenerate();
    }
    let c = ngram_counts(cand, n);
    let r = ngram_counts(reference, n);
    let hits = c
        .iter()
        .map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0)))
        .sum();
    RougeScore::from_counts(hits, cand.len() + 1 - n, reference.len() + 1 - n)
}

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge<T: Scalar>(candidate: &str, reference: &str, variant: RougeVariant) -> RougeScore<T> {
    let c = rouge_tokens(candidate);
    let r = rouge_tokens(reference);
    match variant {
        RougeVariant::R1 => rouge_n(&c, &r, 1),
        RougeVariant::R2 => rouge_n(&c, &r, 2),
        RougeVariant::RL => {
            if c.is_empty() || r.is_empty() {
                RougeScore::degenerate()
            } else {
                RougeScore::from_counts(lcs_len(&c, &r), c.len(), r.len())
            }
        }
    }
}

/// Mean score over `(candidate, reference)` pairs.
pub fn corpus_rouge<T: Scalar>(pairs: &[(String, String)], variant: RougeVariant) -> RougeScore<T> {
    if pairs.is_empty() {
        return RougeScore::degenerate();
    }
    let n = T::from_count(pairs.len());
    let mut acc = RougeScore {
        precision: T::zero(),
        recall: T::zero(),
        f1: T::zero(),
        degenerate: false,
    };
    for (c, r) in pairs {
        let s: RougeScore<T> = rouge(c, r, variant);
        acc.precision = acc.precision + s.precision;
        acc.recall = acc.recall + s.recall;
        acc.f1 = acc.f1 + s.f1;
        acc.degenerate |= s.degenerate;
    }
    acc.precision = acc.precision / n;
    acc.recall = acc.recall / n;
    acc.f1 = acc.f1 / n;
    acc
}
