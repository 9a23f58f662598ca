//! Corruption baselines: sentence shuffling, sentence repetition, and
//! named entities followed by frequent corpus bigrams.

use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::document::SummaryDocument;
use crate::error::{Result, SnacError};
use crate::mentions::heuristic_named_entities;
use crate::rouge::rouge_tokens;

pub const DEFAULT_REPEAT_FRACTION: f64 = 0.5;
pub const DEFAULT_BIGRAM_K: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    Shuffle,
    Repetition,
    NeBigram,
}

impl FromStr for CorruptionKind {
    type Err = SnacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shuffle" => Ok(CorruptionKind::Shuffle),
            "repetition" => Ok(CorruptionKind::Repetition),
            "ne-bigram" | "ne_bigram" => Ok(CorruptionKind::NeBigram),
            other => Err(SnacError::InvalidArgument(format!("unknown corruption {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionRecipe {
    pub kind: CorruptionKind,
    pub seed: u64,
    pub repeat_fraction: f64,
    pub bigram_k: usize,
}

impl CorruptionRecipe {
    pub fn new(kind: CorruptionKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            repeat_fraction: DEFAULT_REPEAT_FRACTION,
            bigram_k: DEFAULT_BIGRAM_K,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.repeat_fraction > 0.0 && self.repeat_fraction <= 1.0) {
            return Err(SnacError::InvalidArgument(format!(
                "repeat_fraction must be in (0, 1], got {}",
                self.repeat_fraction
            )));
        }
        if self.bigram_k == 0 {
            return Err(SnacError::InvalidArgument("bigram_k must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corrupted {
    pub text: String,
    pub sentences: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Corrupted {
    fn from_sentences(sentences: Vec<String>, warnings: Vec<String>) -> Self {
        Self {
            text: sentences.join(" "),
            sentences,
            warnings,
        }
    }
}

/// Seed mixed with the document id so per-document streams do not depend on
/// processing order.
pub fn doc_rng(seed: u64, doc_id: &str) -> ChaCha8Rng {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in doc_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h)
}

pub fn corrupt_shuffle(doc: &SummaryDocument, seed: u64) -> Corrupted {
    let mut sentences = doc.sentence_texts();
    if sentences.len() < 2 {
        let warning = format!("{}: fewer than 2 sentences, left unchanged", doc.doc_id());
        return Corrupted::from_sentences(sentences, vec![warning]);
    }
    sentences.shuffle(&mut doc_rng(seed, doc.doc_id()));
    Corrupted::from_sentences(sentences, Vec::new())
}

/// Duplicates `floor(N * fraction)` sentences, each inserted right after
/// its original.
pub fn corrupt_repetition(doc: &SummaryDocument, seed: u64, repeat_fraction: f64) -> Result<Corrupted> {
    if !(repeat_fraction > 0.0 && repeat_fraction <= 1.0) {
        return Err(SnacError::InvalidArgument(format!(
            "repeat_fraction must be in (0, 1], got {repeat_fraction}"
        )));
    }
    let sentences = doc.sentence_texts();
    let n = sentences.len();
    let k = (n as f64 * repeat_fraction).floor() as usize;
    let mut chosen = vec![false; n];
    for i in index::sample(&mut doc_rng(seed, doc.doc_id()), n, k) {
        chosen[i] = true;
    }
    let mut out = Vec::with_capacity(n + k);
    for (s, dup) in sentences.into_iter().zip(chosen) {
        if dup {
            out.push(s.clone());
        }
        out.push(s);
    }
    Ok(Corrupted::from_sentences(out, Vec::new()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedEntitySpan {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

pub fn heuristic_ne_spans(doc: &SummaryDocument) -> Vec<NamedEntitySpan> {
    heuristic_named_entities(doc)
        .into_iter()
        .map(|m| NamedEntitySpan {
            start: m.start,
            end: m.end,
            text: m.text,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bigram {
    pub first: String,
    pub second: String,
    pub count: usize,
}

impl Bigram {
    pub fn joined(&self) -> String {
        format!("{} {}", self.first, self.second)
    }
}

/// Most frequent token bigrams across `corpus`, ties broken
/// lexicographically. Bigrams never span two texts.
pub fn top_bigrams<S: AsRef<str>>(corpus: &[S], k: usize) -> Vec<Bigram> {
    let mut counts: HashMap<(String, String), usize> = HashMap::new();
    for text in corpus {
        let toks = rouge_tokens(text.as_ref());
        for w in toks.windows(2) {
            *counts.entry((w[0].clone(), w[1].clone())).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<_> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
        .into_iter()
        .take(k)
        .map(|((first, second), count)| Bigram {
            first,
            second,
            count,
        })
        .collect()
}

/// Each named entity, repeated as often as it occurs (in order of first
/// occurrence), followed by the bigrams.
pub fn corrupt_ne_bigram(ne_spans: &[NamedEntitySpan], bigrams: &[Bigram]) -> Corrupted {
    let mut order: Vec<&str> = Vec::new();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut sorted: Vec<&NamedEntitySpan> = ne_spans.iter().collect();
    sorted.sort_by_key(|s| (s.start, s.end));
    for s in sorted {
        let c = counts.entry(s.text.as_str()).or_insert(0);
        if *c == 0 {
            order.push(s.text.as_str());
        }
        *c += 1;
    }
    let mut parts: Vec<String> = Vec::new();
    for ne in order {
        parts.extend(std::iter::repeat_n(ne.to_string(), counts[ne]));
    }
    parts.extend(bigrams.iter().map(Bigram::joined));
    Corrupted {
        text: parts.join(" "),
        sentences: Vec::new(),
        warnings: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rouge::{rouge, RougeScore, RougeVariant};

    fn doc(text: &str) -> SummaryDocument {
        SummaryDocument::from_raw_text("d1", "s", text).unwrap()
    }

    #[test]
    fn shuffle_preserves_sentences_and_is_deterministic() {
        let d = doc("One fish. Two fish. Red fish. Blue fish. Old fish.");
        let a = corrupt_shuffle(&d, 7);
        let b = corrupt_shuffle(&d, 7);
        assert_eq!(a, b);
        let mut x = a.sentences.clone();
        let mut y = d.sentence_texts();
        x.sort();
        y.sort();
        assert_eq!(x, y);
        let r1: RougeScore<f64> = rouge(&a.text, "red fish blue fish", RougeVariant::R1);
        let r0: RougeScore<f64> = rouge(d.text(), "red fish blue fish", RougeVariant::R1);
        assert_eq!(r1, r0);
    }

    #[test]
    fn shuffle_single_sentence_warns() {
        let d = doc("Only one.");
        let c = corrupt_shuffle(&d, 1);
        assert_eq!(c.text, "Only one.");
        assert_eq!(c.warnings.len(), 1);
    }

    #[test]
    fn repetition_counts() {
        let d = doc("A one. B two. C three. D four.");
        let c = corrupt_repetition(&d, 3, 0.5).unwrap();
        assert_eq!(c.sentences.len(), 6);
        let orig = d.sentence_texts();
        let dups = orig
            .iter()
            .filter(|s| c.sentences.iter().filter(|x| x == s).count() == 2)
            .count();
        assert_eq!(dups, 2);
        assert!(orig
            .iter()
            .all(|s| (1..=2).contains(&c.sentences.iter().filter(|x| *x == s).count())));
        assert!(corrupt_repetition(&d, 3, 0.0).is_err());
    }

    #[test]
    fn bigram_ranking() {
        let top = top_bigrams(&["a b a b", "a b"], 1);
        assert_eq!(
            top,
            vec![Bigram {
                first: "a".into(),
                second: "b".into(),
                count: 3
            }]
        );
        let all = top_bigrams(&["a b a b", "a b"], 50);
        assert_eq!(all.len(), 2);
        assert_eq!(all[1].joined(), "b a");
        assert!(top_bigrams(&["", "..."], 5).is_empty());
    }

    #[test]
    fn ne_repeated_per_occurrence() {
        let d = doc("Gabriel works. Then Gabriel rests. Bathsheba calls Gabriel.");
        let spans = heuristic_ne_spans(&d);
        let bigrams = top_bigrams(&["of the of the in the"], 2);
        let c = corrupt_ne_bigram(&spans, &bigrams);
        assert_eq!(c.text.matches("Gabriel").count(), 3);
        assert!(c.text.ends_with("of the in the"));
    }

    #[test]
    fn no_entities_gives_bigrams_only() {
        let bigrams = top_bigrams(&["of the of the that he"], 3);
        let c = corrupt_ne_bigram(&[], &bigrams);
        assert_eq!(c.text, "of the that he the of");
    }
}
