//! Whitespace tokenizer with leading/trailing punctuation split off.
//!
//! All offsets are character (not byte) offsets into the input.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Token {
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// True if the token range intersects `[start, end)`.
    pub fn intersects(&self, start: usize, end: usize) -> bool {
        self.start < end && start < self.end
    }
}

pub fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{2013}' | '\u{2014}' | '\u{2026}'
                | '\u{00AB}' | '\u{00BB}' | '\u{00A1}' | '\u{00BF}'
        )
}

pub fn tokenize(text: &str) -> Vec<Token> {
    tokenize_from(text, 0)
}

/// Tokenizes `text` and shifts every offset by `base`.
pub fn tokenize_from(text: &str, base: usize) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let word_start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        split_word(&chars, word_start, i, base, &mut tokens);
    }
    tokens
}

fn split_word(chars: &[char], start: usize, end: usize, base: usize, out: &mut Vec<Token>) {
    let mut lo = start;
    let mut hi = end;
    while lo < hi && is_punct(chars[lo]) {
        lo += 1;
    }
    while hi > lo && is_punct(chars[hi - 1]) {
        hi -= 1;
    }
    let single = |p: usize| Token {
        start: base + p,
        end: base + p + 1,
    };
    out.extend((start..lo).map(single));
    if lo < hi {
        out.push(Token {
            start: base + lo,
            end: base + hi,
        });
    }
    out.extend((hi..end).map(single));
}

/// Substring by character offsets, clamped to the text.
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    let byte_at = |n: usize| {
        text.char_indices()
            .nth(n)
            .map(|(b, _)| b)
            .unwrap_or(text.len())
    };
    let s = byte_at(start);
    let e = byte_at(end.max(start));
    &text[s..e]
}

/// Token strings of `text`.
pub fn words(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    tokenize(text)
        .into_iter()
        .map(|t| chars[t.start..t.end].iter().collect())
        .collect()
}
