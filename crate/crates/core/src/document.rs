//! Summary documents: sentences, segments and tokens.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SnacError};
use crate::tokenize::{char_slice, tokenize_from, Token};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CharRange {
    pub start: usize,
    pub end: usize,
}

impl CharRange {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn intersects(&self, start: usize, end: usize) -> bool {
        self.start < end && start < self.end
    }

    pub fn contains_range(&self, start: usize, end: usize) -> bool {
        self.start <= start && end <= self.end
    }
}

/// A generated summary split into sentences and (optionally) segments.
///
/// `segments` holds exclusive end indices into `sentences`; an empty list
/// means the document has not been segmented yet.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryDocument {
    doc_id: String,
    system_id: String,
    text: String,
    sentences: Vec<CharRange>,
    paragraph_breaks: Vec<usize>,
    segments: Vec<usize>,
    tokens: Vec<Vec<Token>>,
    char_len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SummaryFile {
    schema_version: String,
    doc_id: String,
    system_id: String,
    text: String,
    sentences: Vec<CharRange>,
    #[serde(default)]
    paragraph_breaks: Vec<usize>,
    #[serde(default)]
    segments: Vec<usize>,
}

impl SummaryDocument {
    pub fn new(
        doc_id: impl Into<String>,
        system_id: impl Into<String>,
        text: impl Into<String>,
        sentences: Vec<CharRange>,
        paragraph_breaks: Vec<usize>,
        segments: Vec<usize>,
    ) -> Result<Self> {
        let doc_id = doc_id.into();
        let text = text.into();
        let invalid = |reason: String| SnacError::InvalidDocument {
            doc_id: doc_id.clone(),
            reason,
        };
        let chars: Vec<char> = text.chars().collect();
        let char_len = chars.len();

        let mut cursor = 0;
        for (i, s) in sentences.iter().enumerate() {
            if s.start >= s.end {
                return Err(invalid(format!("sentence {i} is empty or reversed")));
            }
            if s.end > char_len {
                return Err(invalid(format!("sentence {i} ends past the text")));
            }
            if s.start < cursor {
                return Err(invalid(format!("sentence {i} overlaps or is out of order")));
            }
            if chars[cursor..s.start].iter().any(|c| !c.is_whitespace()) {
                return Err(invalid(format!("non-whitespace text before sentence {i}")));
            }
            cursor = s.end;
        }
        if chars[cursor..].iter().any(|c| !c.is_whitespace()) {
            return Err(invalid("non-whitespace text after the last sentence".into()));
        }
        if !strictly_increasing(&paragraph_breaks)
            || paragraph_breaks.iter().any(|&b| b > sentences.len())
        {
            return Err(invalid("paragraph breaks must be increasing sentence indices".into()));
        }
        if !segments.is_empty() {
            check_boundaries(&segments, sentences.len()).map_err(invalid)?;
        }

        let tokens = sentences
            .iter()
            .map(|s| tokenize_from(char_slice(&text, s.start, s.end), s.start))
            .collect();
        Ok(Self {
            doc_id,
            system_id: system_id.into(),
            text,
            sentences,
            paragraph_breaks,
            segments,
            tokens,
            char_len,
        })
    }

    /// Builds a document from raw text with a rule-based sentence splitter;
    /// blank lines become paragraph breaks.
    pub fn from_raw_text(
        doc_id: impl Into<String>,
        system_id: impl Into<String>,
        text: impl Into<String>,
    ) -> Result<Self> {
        let text = text.into();
        let (sentences, breaks) = split_sentences(&text);
        Self::new(doc_id, system_id, text, sentences, breaks, Vec::new())
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: SummaryFile = serde_json::from_str(json)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(SnacError::SchemaVersion(file.schema_version));
        }
        Self::new(
            file.doc_id,
            file.system_id,
            file.text,
            file.sentences,
            file.paragraph_breaks,
            file.segments,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        let file = SummaryFile {
            schema_version: SCHEMA_VERSION.to_string(),
            doc_id: self.doc_id.clone(),
            system_id: self.system_id.clone(),
            text: self.text.clone(),
            sentences: self.sentences.clone(),
            paragraph_breaks: self.paragraph_breaks.clone(),
            segments: self.segments.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn system_id(&self) -> &str {
        &self.system_id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn char_len(&self) -> usize {
        self.char_len
    }

    pub fn sentences(&self) -> &[CharRange] {
        &self.sentences
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    pub fn sentence_text(&self, i: usize) -> &str {
        let s = self.sentences[i];
        char_slice(&self.text, s.start, s.end)
    }

    pub fn sentence_texts(&self) -> Vec<String> {
        (0..self.sentences.len())
            .map(|i| self.sentence_text(i).to_string())
            .collect()
    }

    pub fn paragraph_breaks(&self) -> &[usize] {
        &self.paragraph_breaks
    }

    pub fn segment_boundaries(&self) -> &[usize] {
        &self.segments
    }

    pub fn is_segmented(&self) -> bool {
        !self.segments.is_empty()
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn segment_sentences(&self, segment: usize) -> Range<usize> {
        let start = if segment == 0 { 0 } else { self.segments[segment - 1] };
        start..self.segments[segment]
    }

    pub fn segment_range(&self, segment: usize) -> CharRange {
        let r = self.segment_sentences(segment);
        CharRange::new(self.sentences[r.start].start, self.sentences[r.end - 1].end)
    }

    pub fn segment_of_sentence(&self, sentence: usize) -> Option<usize> {
        self.segments.iter().position(|&end| sentence < end)
    }

    pub fn sentence_tokens(&self, sentence: usize) -> &[Token] {
        &self.tokens[sentence]
    }

    /// All tokens of the document in order.
    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().flatten()
    }

    pub fn token_count(&self) -> usize {
        self.tokens.iter().map(Vec::len).sum()
    }

    /// Global indices of the tokens intersecting `[start, end)`.
    pub fn covered_tokens(&self, start: usize, end: usize) -> Range<usize> {
        let mut first = None;
        let mut last = 0;
        for (i, t) in self.tokens().enumerate() {
            if t.intersects(start, end) {
                first.get_or_insert(i);
                last = i + 1;
            } else if t.start >= end {
                break;
            }
        }
        match first {
            Some(f) => f..last,
            None => 0..0,
        }
    }

    /// Sentences intersecting `[start, end)`.
    pub fn covered_sentences(&self, start: usize, end: usize) -> Range<usize> {
        let hits: Vec<usize> = self
            .sentences
            .iter()
            .enumerate()
            .filter(|(_, s)| s.intersects(start, end))
            .map(|(i, _)| i)
            .collect();
        match (hits.first(), hits.last()) {
            (Some(&a), Some(&b)) => a..b + 1,
            _ => 0..0,
        }
    }

    /// Trims whitespace at both edges of `[start, end)`.
    pub fn trim_range(&self, start: usize, end: usize) -> (usize, usize) {
        let chars: Vec<char> = char_slice(&self.text, start, end).chars().collect();
        let lead = chars.iter().take_while(|c| c.is_whitespace()).count();
        if lead == chars.len() {
            return (start, start);
        }
        let trail = chars.iter().rev().take_while(|c| c.is_whitespace()).count();
        (start + lead, start + chars.len() - trail)
    }

    pub fn with_segments(mut self, segments: Vec<usize>) -> Result<Self> {
        check_boundaries(&segments, self.sentences.len()).map_err(|reason| {
            SnacError::InvalidDocument {
                doc_id: self.doc_id.clone(),
                reason,
            }
        })?;
        self.segments = segments;
        Ok(self)
    }

    /// Error unless the document carries segment boundaries.
    pub fn require_segmented(&self) -> Result<()> {
        if self.is_segmented() {
            Ok(())
        } else {
            Err(SnacError::InvalidDocument {
                doc_id: self.doc_id.clone(),
                reason: "document has no segment boundaries".into(),
            })
        }
    }
}

fn strictly_increasing(v: &[usize]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

fn check_boundaries(segments: &[usize], sentence_count: usize) -> std::result::Result<(), String> {
    if !strictly_increasing(segments) || segments.first() == Some(&0) {
        return Err("segment boundaries must be strictly increasing and positive".into());
    }
    if segments.last() != Some(&sentence_count) {
        return Err(format!(
            "last segment boundary must equal the sentence count {sentence_count}"
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentStrategy {
    /// Chunks of `k` sentences; only the last chunk may be shorter.
    FixedK(usize),
    /// Paragraph breaks in the source text.
    NativeBoundaries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmented {
    pub doc: SummaryDocument,
    pub warnings: Vec<String>,
}

pub fn segment_summary(doc: SummaryDocument, strategy: SegmentStrategy) -> Result<Segmented> {
    let n = doc.sentence_count();
    if n == 0 {
        return Err(SnacError::InvalidDocument {
            doc_id: doc.doc_id.clone(),
            reason: "cannot segment a summary without sentences".into(),
        });
    }
    let mut warnings = Vec::new();
    let boundaries = match strategy {
        SegmentStrategy::FixedK(0) => {
            return Err(SnacError::InvalidArgument("fixed_k requires k >= 1".into()))
        }
        SegmentStrategy::FixedK(k) => {
            let mut b: Vec<usize> = (1..).map(|i| i * k).take_while(|&e| e < n).collect();
            b.push(n);
            b
        }
        SegmentStrategy::NativeBoundaries => {
            let mut b: Vec<usize> = doc
                .paragraph_breaks
                .iter()
                .copied()
                .filter(|&x| x > 0 && x < n)
                .collect();
            if b.is_empty() {
                warnings.push(format!(
                    "{}: no paragraph breaks, using a single segment",
                    doc.doc_id
                ));
            }
            b.push(n);
            b
        }
    };
    Ok(Segmented {
        doc: doc.with_segments(boundaries)?,
        warnings,
    })
}

const ABBREVIATIONS: &[&str] = &[
    "Mr", "Mrs", "Ms", "Dr", "St", "Jr", "Sr", "Prof", "Mt", "Capt", "Col", "Gen", "Lt", "Sgt",
    "vs", "etc", "e.g", "i.e",
];

/// Rule-based fallback splitter: sentence ends after `.`, `!` or `?` (plus
/// closing quotes or brackets) followed by whitespace, unless the word is a
/// known abbreviation. A line containing only whitespace starts a paragraph.
pub fn split_sentences(text: &str) -> (Vec<CharRange>, Vec<usize>) {
    let chars: Vec<char> = text.chars().collect();
    let mut sentences = Vec::new();
    let mut breaks = Vec::new();
    let mut start: Option<usize> = None;
    let mut i = 0;

    let close = |sentences: &mut Vec<CharRange>, s: usize, e: usize| {
        let mut e = e;
        while e > s && chars[e - 1].is_whitespace() {
            e -= 1;
        }
        if e > s {
            sentences.push(CharRange::new(s, e));
        }
    };

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' && is_blank_line_after(&chars, i) {
            if let Some(s) = start.take() {
                close(&mut sentences, s, i);
            }
            if !sentences.is_empty() && breaks.last() != Some(&sentences.len()) {
                breaks.push(sentences.len());
            }
            i += 1;
            continue;
        }
        if start.is_none() {
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            start = Some(i);
        }
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j], '"' | '\'' | ')' | ']' | '\u{201D}' | '\u{2019}' | '.' | '!' | '?') {
                j += 1;
            }
            let at_break = j == chars.len() || chars[j].is_whitespace();
            if at_break && !(c == '.' && ends_with_abbreviation(&chars, start.unwrap(), i)) {
                close(&mut sentences, start.take().unwrap(), j);
                i = j;
                continue;
            }
        }
        i += 1;
    }
    if let Some(s) = start {
        close(&mut sentences, s, chars.len());
    }
    breaks.retain(|&b| b < sentences.len());
    (sentences, breaks)
}

fn is_blank_line_after(chars: &[char], newline: usize) -> bool {
    let mut j = newline + 1;
    while j < chars.len() && chars[j] != '\n' && chars[j].is_whitespace() {
        j += 1;
    }
    j < chars.len() && chars[j] == '\n'
}

fn ends_with_abbreviation(chars: &[char], sentence_start: usize, dot: usize) -> bool {
    let mut w = dot;
    while w > sentence_start && !chars[w - 1].is_whitespace() {
        w -= 1;
    }
    let word: String = chars[w..dot].iter().collect();
    let word = word.trim_start_matches(|c: char| !c.is_alphanumeric());
    ABBREVIATIONS.contains(&word) || (word.chars().count() == 1 && word.chars().all(char::is_uppercase))
}
