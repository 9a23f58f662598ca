#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use snac_core::eval::FinePrediction;
use snac_core::{ErrorCategory, GoldSentence, Metric, PredictionRecord, RatingMatrix, SummaryDocument};

const WORDS: [&str; 24] = [
    "the", "farm", "storm", "river", "letter", "house", "quietly", "later", "sheep", "army", "returns", "leaves",
    "finds", "a", "of", "near", "old", "village", "market", "and", "ship", "road", "field", "night",
];
const NAMES: [&str; 8] = ["Gabriel", "Bathsheba", "Troy", "Fanny", "Boldwood", "Liddy", "Coggan", "Poorgrass"];

/// Distinct sentences: each carries its index as a word.
pub fn random_sentences(rng: &mut impl Rng, n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            let len = rng.gen_range(2..8);
            let mut words = vec![NAMES[rng.gen_range(0..NAMES.len())].to_string()];
            for _ in 0..len {
                words.push(WORDS[rng.gen_range(0..WORDS.len())].to_string());
            }
            words.push(format!("w{i}"));
            format!("{}.", words.join(" "))
        })
        .collect()
}

pub fn random_doc(rng: &mut impl Rng, doc_id: &str, n: usize) -> SummaryDocument {
    SummaryDocument::from_raw_text(doc_id, "sys", random_sentences(rng, n).join(" ")).unwrap()
}

pub fn random_text(rng: &mut impl Rng, n_words: usize) -> String {
    (0..n_words)
        .map(|_| WORDS[rng.gen_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

/// Random matrix with up to 5 raters, up to 50 units and missing values.
pub fn random_matrix(rng: &mut impl Rng, max_value: i64) -> RatingMatrix {
    let raters = rng.gen_range(2..=5);
    let units = rng.gen_range(1..=50);
    let missing = rng.gen_range(0.0..0.4);
    let mut m = RatingMatrix::new((0..raters).map(|r| format!("r{r}")).collect());
    for u in 0..units {
        let row = (0..raters)
            .map(|_| (!rng.gen_bool(missing)).then(|| rng.gen_range(0..=max_value)))
            .collect();
        m.push_unit(format!("u{u}"), row);
    }
    m
}

/// Krippendorff's alpha by explicit enumeration of ordered value pairs.
pub fn brute_alpha(m: &RatingMatrix, metric: Metric) -> Option<f64> {
    let delta = |a: i64, b: i64| -> f64 {
        match metric {
            Metric::Nominal => (a != b) as u8 as f64,
            Metric::Interval => ((a - b) * (a - b)) as f64,
        }
    };
    let units: Vec<Vec<i64>> = m
        .values
        .iter()
        .map(|row| row.iter().flatten().copied().collect::<Vec<_>>())
        .filter(|v| v.len() >= 2)
        .collect();
    let pooled: Vec<i64> = units.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    if pooled.is_empty() {
        return None;
    }
    let mut observed = 0.0;
    for vals in &units {
        let mu = vals.len() as f64;
        for i in 0..vals.len() {
            for j in 0..vals.len() {
                if i != j {
                    observed += delta(vals[i], vals[j]) / (mu - 1.0);
                }
            }
        }
    }
    let mut expected = 0.0;
    for i in 0..pooled.len() {
        for j in 0..pooled.len() {
            if i != j {
                expected += delta(pooled[i], pooled[j]);
            }
        }
    }
    if expected == 0.0 {
        return None;
    }
    let d_o = observed / n;
    let d_e = expected / (n * (n - 1.0));
    Some(1.0 - d_o / d_e)
}

pub struct FineFixture {
    pub doc: SummaryDocument,
    pub gold: Vec<GoldSentence>,
    pub preds: Vec<PredictionRecord<f64>>,
    pub categories: Vec<ErrorCategory>,
}

fn random_span(rng: &mut impl Rng, doc: &SummaryDocument, sentence: usize) -> (usize, usize) {
    let s = doc.sentences()[sentence];
    let a = rng.gen_range(s.start..s.end);
    let b = rng.gen_range(a + 1..=s.end);
    (a, b)
}

/// Up to 20 sentences and 4 categories, random gold errors and random fine
/// predictions with spans.
pub fn random_fine_fixture(rng: &mut impl Rng) -> FineFixture {
    let n = rng.gen_range(1..=20);
    let doc = random_doc(rng, "fx", n);
    let mut pool = ErrorCategory::ALL.to_vec();
    let k = rng.gen_range(1..=4);
    let mut categories = Vec::new();
    for _ in 0..k {
        categories.push(pool.remove(rng.gen_range(0..pool.len())));
    }
    let mut gold = Vec::new();
    let mut preds = Vec::new();
    for i in 0..n {
        let mut errors = BTreeSet::new();
        let mut fine = Vec::new();
        for &c in &categories {
            if rng.gen_bool(0.35) {
                for _ in 0..rng.gen_range(1..=2) {
                    let (a, b) = random_span(rng, &doc, i);
                    errors.insert((c, a, b));
                }
            }
            if rng.gen_bool(0.35) {
                let span = (c != ErrorCategory::SceneE && rng.gen_bool(0.8)).then(|| random_span(rng, &doc, i));
                fine.push(FinePrediction {
                    category: c,
                    start: span.map(|s| s.0),
                    end: span.map(|s| s.1),
                });
            }
        }
        gold.push(GoldSentence {
            doc_id: "fx".into(),
            sentence_index: i,
            has_error: errors.iter().any(|e| e.0.is_coherence()),
            errors,
        });
        preds.push(PredictionRecord {
            doc_id: "fx".into(),
            sentence_index: i,
            score: Some(rng.gen()),
            has_error: Some(!fine.is_empty()),
            fine: Some(fine),
        });
    }
    FineFixture { doc, gold, preds, categories }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineOracle {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub overlap_hits: usize,
    pub overlap_total: usize,
}

/// Enumerates every (sentence, category) pair; token overlap is checked by
/// scanning all tokens of the document.
pub fn fine_oracle(fx: &FineFixture, category: ErrorCategory) -> FineOracle {
    let tokens: Vec<(usize, usize)> = fx.doc.tokens().map(|t| (t.start, t.end)).collect();
    let touches = |tok: (usize, usize), span: (usize, usize)| tok.0 < span.1 && span.0 < tok.1;
    let mut o = FineOracle {
        tp: 0,
        fp: 0,
        fn_: 0,
        overlap_hits: 0,
        overlap_total: 0,
    };
    let preds: BTreeMap<usize, &PredictionRecord<f64>> = fx.preds.iter().map(|p| (p.sentence_index, p)).collect();
    for g in &fx.gold {
        let p = preds[&g.sentence_index];
        let predicted: Vec<&FinePrediction> =
            p.fine.iter().flatten().filter(|f| f.category == category).collect();
        let gold_spans: Vec<(usize, usize)> =
            g.errors.iter().filter(|e| e.0 == category).map(|e| (e.1, e.2)).collect();
        match (!predicted.is_empty(), !gold_spans.is_empty()) {
            (true, true) => {
                o.tp += 1;
                if category == ErrorCategory::SceneE {
                    o.overlap_total += 1;
                    o.overlap_hits += 1;
                } else {
                    let spans: Vec<(usize, usize)> = predicted.iter().filter_map(|f| f.span()).collect();
                    if !spans.is_empty() {
                        o.overlap_total += 1;
                        let hit = tokens.iter().any(|&t| {
                            spans.iter().any(|&s| touches(t, s)) && gold_spans.iter().any(|&gs| touches(t, gs))
                        });
                        o.overlap_hits += hit as usize;
                    }
                }
            }
            (true, false) => o.fp += 1,
            (false, true) => o.fn_ += 1,
            (false, false) => {}
        }
    }
    o
}

pub fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let r = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}
