//! Externally computed language-model scores `P(s | c)`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use crate::error::{Result, SnacError};
use crate::scalar::Scalar;

pub type SentenceKey = (String, usize);

#[derive(Debug, Deserialize)]
struct LmLine {
    doc_id: String,
    sentence_index: usize,
    #[serde(default)]
    logprob: Option<f64>,
    #[serde(default)]
    prob: Option<f64>,
}

pub fn key_label(k: &SentenceKey) -> String {
    format!("{}#{}", k.0, k.1)
}

/// Parses `{doc_id, sentence_index, logprob}` lines (or `prob` for linear
/// probabilities) into probabilities in (0, 1].
pub fn lm_conditional_scores<T: Scalar>(source_name: &str, jsonl: &str) -> Result<BTreeMap<SentenceKey, T>> {
    let mut out = BTreeMap::new();
    for (n, line) in jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| SnacError::Parse {
            source_name: source_name.to_string(),
            line: n + 1,
            message,
        };
        let rec: LmLine = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        let p = match (rec.logprob, rec.prob) {
            (Some(lp), None) if lp <= 0.0 && lp.is_finite() => lp.exp(),
            (Some(lp), None) => return Err(parse_err(format!("log-probability {lp} must be <= 0"))),
            (None, Some(p)) if p > 0.0 && p <= 1.0 => p,
            (None, Some(p)) => return Err(parse_err(format!("probability {p} outside (0, 1]"))),
            _ => return Err(parse_err("exactly one of logprob or prob is required".into())),
        };
        let key = (rec.doc_id, rec.sentence_index);
        if out.contains_key(&key) {
            return Err(SnacError::DuplicateId(key_label(&key)));
        }
        out.insert(key, T::lit(p));
    }
    Ok(out)
}

/// Errors with the list of required keys that have no score.
pub fn check_complete<T>(scores: &BTreeMap<SentenceKey, T>, required: &BTreeSet<SentenceKey>) -> Result<()> {
    let missing: Vec<String> = required
        .iter()
        .filter(|k| !scores.contains_key(*k))
        .map(key_label)
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(SnacError::IncompleteScores(missing))
    }
}
