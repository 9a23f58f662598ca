//! Heuristic proper-name mentions: runs of capitalized tokens.
//!
//! Shared by the named-entity fallback, the coreference-chain fallback and
//! the entity-grid role heuristic.

use std::collections::BTreeMap;

use crate::document::SummaryDocument;
use crate::tokenize::{char_slice, Token};

/// Lowercased words that never start or head a mention.
const FUNCTION_WORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "although", "an", "and", "as", "at", "because",
    "before", "both", "but", "by", "during", "each", "eventually", "finally", "for", "from",
    "he", "her", "here", "his", "however", "i", "if", "in", "it", "its", "later", "meanwhile",
    "my", "no", "not", "now", "of", "on", "once", "one", "or", "our", "she", "since", "so",
    "some", "soon", "still", "that", "the", "their", "them", "then", "there", "these", "they",
    "this", "those", "though", "to", "unfortunately", "until", "upon", "we", "what", "when",
    "where", "while", "who", "why", "with", "yet", "you", "your",
];

/// Titles kept in a mention's text but skipped when choosing its head.
const TITLES: &[&str] = &[
    "Mr", "Mrs", "Ms", "Miss", "Dr", "Sir", "Lady", "Lord", "Captain", "Professor", "Father",
    "Mother", "Aunt", "Uncle", "King", "Queen", "Prince", "Princess", "Madame", "Monsieur",
];

pub fn is_function_word(word: &str) -> bool {
    FUNCTION_WORDS.contains(&word.to_lowercase().as_str())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
    pub text: String,
    /// First non-title token of the mention.
    pub head: String,
    /// Mention starts at the sentence's first token.
    pub sentence_initial: bool,
}

fn is_capitalized(word: &str) -> bool {
    word.chars().next().is_some_and(char::is_uppercase)
}

/// All capitalized-run mentions in document order.
pub fn capitalized_mentions(doc: &SummaryDocument) -> Vec<Mention> {
    let text = doc.text();
    let mut out = Vec::new();
    for s in 0..doc.sentence_count() {
        let tokens = doc.sentence_tokens(s);
        let word = |t: &Token| char_slice(text, t.start, t.end);
        let mut i = 0;
        while i < tokens.len() {
            if !is_capitalized(word(&tokens[i])) {
                i += 1;
                continue;
            }
            let run_start = i;
            let mut j = i;
            while j < tokens.len() {
                let w = word(&tokens[j]);
                if is_capitalized(w) {
                    j += 1;
                    if TITLES.contains(&w) && j < tokens.len() && word(&tokens[j]) == "." {
                        j += 1;
                    }
                } else {
                    break;
                }
            }
            let mut k = run_start;
            while k < j && is_function_word(word(&tokens[k])) {
                k += 1;
            }
            let head = tokens[k..j]
                .iter()
                .map(word)
                .find(|w| *w != "." && !TITLES.contains(w));
            if let Some(head) = head {
                let (start, end) = (tokens[k].start, tokens[j - 1].end);
                out.push(Mention {
                    sentence: s,
                    start,
                    end,
                    text: char_slice(text, start, end).to_string(),
                    head: head.to_string(),
                    sentence_initial: k == 0,
                });
            }
            i = j.max(i + 1);
        }
    }
    out
}

/// Named entities: mentions not at sentence start, plus sentence-initial
/// mentions whose head occurs capitalized elsewhere in the document.
pub fn heuristic_named_entities(doc: &SummaryDocument) -> Vec<Mention> {
    let mentions = capitalized_mentions(doc);
    let mut head_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for m in &mentions {
        *head_counts.entry(m.head.as_str()).or_default() += 1;
    }
    mentions
        .iter()
        .filter(|m| !m.sentence_initial || head_counts[m.head.as_str()] > 1)
        .cloned()
        .collect()
}
