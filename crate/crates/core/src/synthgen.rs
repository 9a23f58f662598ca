//! Synthetic training triples `(label, context, sentence)` built from gold
//! summaries.
//!
//! * coreference-based: drop the sentence holding an entity's first mention
//!   from the context of the sentence holding its second mention;
//! * next-sentence: replace the true continuation with a later sentence of
//!   the same summary.
//!
//! Every generator emits one negative per positive.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::corruption::doc_rng;
use crate::document::SummaryDocument;
use crate::error::{Result, SnacError};
use crate::mentions::capitalized_mentions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MentionSpan {
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionChain {
    pub doc_id: String,
    pub mentions: Vec<MentionSpan>,
}

impl MentionChain {
    /// Sentence of the first mention and of the first later mention in a
    /// different sentence.
    pub fn sentence_pair(&self) -> Option<(usize, usize)> {
        let first = self.mentions.first()?.sentence;
        self.mentions
            .iter()
            .map(|m| m.sentence)
            .find(|&s| s > first)
            .map(|second| (first, second))
    }
}

/// On-disk chain file: `{doc_id, chains: [[{sentence, start, end}]]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainFile {
    pub doc_id: String,
    pub chains: Vec<Vec<MentionSpan>>,
}

impl ChainFile {
    pub fn into_chains(self) -> Result<Vec<MentionChain>> {
        self.chains
            .into_iter()
            .map(|mut mentions| {
                mentions.sort();
                if mentions.len() < 2 {
                    return Err(SnacError::InvalidArgument(format!(
                        "{}: chains need at least two mentions",
                        self.doc_id
                    )));
                }
                Ok(MentionChain {
                    doc_id: self.doc_id.clone(),
                    mentions,
                })
            })
            .collect()
    }
}

/// Links capitalized mentions that share a head token.
pub fn heuristic_mention_chains(doc: &SummaryDocument) -> Vec<MentionChain> {
    let mut by_head: BTreeMap<String, Vec<MentionSpan>> = BTreeMap::new();
    let mut first_seen: Vec<String> = Vec::new();
    for m in capitalized_mentions(doc) {
        let entry = by_head.entry(m.head.clone()).or_default();
        if entry.is_empty() {
            first_seen.push(m.head.clone());
        }
        entry.push(MentionSpan {
            sentence: m.sentence,
            start: m.start,
            end: m.end,
        });
    }
    first_seen
        .into_iter()
        .filter_map(|head| {
            let mentions = by_head.remove(&head)?;
            (mentions.len() >= 2).then(|| MentionChain {
                doc_id: doc.doc_id().to_string(),
                mentions,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Coref,
    Nextsent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: Generator,
    pub doc_id: String,
    /// Zero-based sentence indices: coref `[i, j]`, next-sentence
    /// `[context_len, chosen]`.
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingTriple {
    pub has_error: bool,
    pub context: Vec<String>,
    pub sentence: String,
    pub provenance: Provenance,
}

/// JSON-lines form. `label` follows the 0 = incoherent convention.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleRecord {
    pub label: u8,
    pub context: Vec<String>,
    pub sentence: String,
    pub provenance: Provenance,
}

impl From<&TrainingTriple> for TripleRecord {
    fn from(t: &TrainingTriple) -> Self {
        Self {
            label: if t.has_error { 0 } else { 1 },
            context: t.context.clone(),
            sentence: t.sentence.clone(),
            provenance: t.provenance.clone(),
        }
    }
}

impl TryFrom<TripleRecord> for TrainingTriple {
    type Error = SnacError;

    fn try_from(r: TripleRecord) -> Result<Self> {
        let has_error = match r.label {
            0 => true,
            1 => false,
            other => {
                return Err(SnacError::InvalidArgument(format!(
                    "triple label must be 0 or 1, got {other}"
                )))
            }
        };
        Ok(Self {
            has_error,
            context: r.context,
            sentence: r.sentence,
            provenance: r.provenance,
        })
    }
}

pub fn to_jsonl(triples: &[TrainingTriple]) -> Result<String> {
    let mut out = String::new();
    for t in triples {
        out.push_str(&serde_json::to_string(&TripleRecord::from(t))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn coref_triples(doc: &SummaryDocument, chains: &[MentionChain]) -> Vec<TrainingTriple> {
    let sentences = doc.sentence_texts();
    let pairs: BTreeSet<(usize, usize)> = chains
        .iter()
        .filter(|c| c.doc_id == doc.doc_id())
        .filter_map(MentionChain::sentence_pair)
        .filter(|&(_, j)| j < sentences.len())
        .collect();
    let mut out = Vec::with_capacity(pairs.len() * 2);
    for (i, j) in pairs {
        let provenance = Provenance {
            generator: Generator::Coref,
            doc_id: doc.doc_id().to_string(),
            indices: vec![i, j],
        };
        let negative: Vec<String> = (0..j).filter(|&k| k != i).map(|k| sentences[k].clone()).collect();
        out.push(TrainingTriple {
            has_error: true,
            context: negative,
            sentence: sentences[j].clone(),
            provenance: provenance.clone(),
        });
        out.push(TrainingTriple {
            has_error: false,
            context: sentences[..j].to_vec(),
            sentence: sentences[j].clone(),
            provenance,
        });
    }
    out
}

/// For each context prefix `s_0..s_{i-1}` the positive continuation is
/// `s_i` and the negative one is drawn uniformly from `s_{i+1}..`.
/// `max_per_doc` caps the number of prefixes, sampled uniformly.
pub fn next_sentence_triples(
    doc: &SummaryDocument,
    seed: u64,
    max_per_doc: Option<usize>,
) -> Vec<TrainingTriple> {
    let sentences = doc.sentence_texts();
    let n = sentences.len();
    if n < 3 {
        return Vec::new();
    }
    let mut rng = doc_rng(seed, doc.doc_id());
    let mut prefixes: Vec<usize> = (1..=n - 2).collect();
    if let Some(m) = max_per_doc {
        if m < prefixes.len() {
            let mut picked: Vec<usize> = index::sample(&mut rng, prefixes.len(), m)
                .into_iter()
                .map(|k| prefixes[k])
                .collect();
            picked.sort_unstable();
            prefixes = picked;
        }
    }
    let mut out = Vec::new();
    for i in prefixes {
        let context = &sentences[..i];
        let candidates: Vec<usize> = (i + 1..n).filter(|&j| !context.contains(&sentences[j])).collect();
        let Some(&j) = candidates.choose(&mut rng) else {
            continue;
        };
        let provenance = |chosen| Provenance {
            generator: Generator::Nextsent,
            doc_id: doc.doc_id().to_string(),
            indices: vec![i, chosen],
        };
        out.push(TrainingTriple {
            has_error: true,
            context: context.to_vec(),
            sentence: sentences[j].clone(),
            provenance: provenance(j),
        });
        out.push(TrainingTriple {
            has_error: false,
            context: context.to_vec(),
            sentence: sentences[i].clone(),
            provenance: provenance(i),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(n: usize) -> SummaryDocument {
        let text: Vec<String> = (1..=n).map(|i| format!("Sentence s{i} ends.")).collect();
        SummaryDocument::from_raw_text("d", "sys", text.join(" ")).unwrap()
    }

    fn chain(sentences: &[usize]) -> MentionChain {
        MentionChain {
            doc_id: "d".into(),
            mentions: sentences
                .iter()
                .map(|&s| MentionSpan {
                    sentence: s,
                    start: 0,
                    end: 1,
                })
                .collect(),
        }
    }

    #[test]
    fn coref_removes_first_mention_sentence() {
        let d = doc(6);
        // mentions in s2 and s5 (one-based)
        let t = coref_triples(&d, &[chain(&[1, 4])]);
        assert_eq!(t.len(), 2);
        let s = d.sentence_texts();
        assert!(t[0].has_error);
        assert_eq!(t[0].context, vec![s[0].clone(), s[2].clone(), s[3].clone()]);
        assert!(!t[1].has_error);
        assert_eq!(t[1].context, s[..4].to_vec());
        assert_eq!(t[0].sentence, s[4]);
        assert_eq!(t[1].sentence, s[4]);
    }

    #[test]
    fn coref_same_sentence_skipped() {
        assert!(coref_triples(&doc(5), &[chain(&[2, 2])]).is_empty());
    }

    #[test]
    fn coref_uses_second_distinct_sentence() {
        let c = chain(&[1, 1, 3, 4]);
        assert_eq!(c.sentence_pair(), Some((1, 3)));
    }

    #[test]
    fn next_sentence_candidates() {
        let d = doc(6);
        let s = d.sentence_texts();
        let t = next_sentence_triples(&d, 11, None);
        assert_eq!(t.len(), 8);
        let neg = t
            .iter()
            .find(|t| t.has_error && t.context.len() == 3)
            .unwrap();
        assert!(neg.sentence == s[4] || neg.sentence == s[5]);
        let pos = t
            .iter()
            .find(|t| !t.has_error && t.context.len() == 3)
            .unwrap();
        assert_eq!(pos.sentence, s[3]);
    }

    #[test]
    fn next_sentence_short_docs() {
        assert!(next_sentence_triples(&doc(2), 0, None).is_empty());
        assert_eq!(next_sentence_triples(&doc(3), 0, None).len(), 2);
    }

    #[test]
    fn next_sentence_deterministic_and_capped() {
        let d = doc(12);
        assert_eq!(next_sentence_triples(&d, 5, Some(3)), next_sentence_triples(&d, 5, Some(3)));
        assert_eq!(next_sentence_triples(&d, 5, Some(3)).len(), 6);
    }

    #[test]
    fn heuristic_chain_via_head() {
        let d = SummaryDocument::from_raw_text("d", "s", "Gabriel Oak farms. Rain falls. Gabriel leaves.")
            .unwrap();
        let chains = heuristic_mention_chains(&d);
        assert_eq!(chains.len(), 1);
        let sents: Vec<usize> = chains[0].mentions.iter().map(|m| m.sentence).collect();
        assert_eq!(sents, vec![0, 2]);
        assert_eq!(chains[0].mentions[0].end - chains[0].mentions[0].start, "Gabriel Oak".len());
    }

    #[test]
    fn heuristic_chain_none() {
        let d = SummaryDocument::from_raw_text("d", "s", "The house burns. The barn stands.").unwrap();
        assert!(heuristic_mention_chains(&d).is_empty());
        let d = SummaryDocument::from_raw_text("d", "s", "Anna sings. Boris dances.").unwrap();
        assert!(heuristic_mention_chains(&d).is_empty());
    }

    #[test]
    fn label_polarity_on_the_wire() {
        let d = doc(4);
        let t = coref_triples(&d, &[chain(&[0, 2])]);
        let lines = to_jsonl(&t).unwrap();
        let first: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
        assert_eq!(first["label"], 0);
        let keys: Vec<&str> = lines.lines().next().unwrap().split('"').skip(1).step_by(2).take(1).collect();
        assert_eq!(keys, vec!["label"]);
        let back: TrainingTriple = serde_json::from_str::<TripleRecord>(lines.lines().next().unwrap())
            .unwrap()
            .try_into()
            .unwrap();
        assert_eq!(back, t[0]);
    }
}
