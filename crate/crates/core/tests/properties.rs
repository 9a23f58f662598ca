mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snac_core::agreement::krippendorff_alpha;
use snac_core::annotation::aggregate_annotators;
use snac_core::corruption::corrupt_shuffle;
use snac_core::eval::{category_recall_at, fine_recall_at, reconstruct_eval_subset, roc_curve};
use snac_core::rouge::rouge;
use snac_core::synthgen::{next_sentence_triples, to_jsonl};
use snac_core::{
    AnnotationSet, ErrorAnnotation, ErrorCategory, Metric, RougeVariant, SegmentStrategy, Span, segment_summary,
};

use common::*;

#[test]
fn alpha_invariant_to_rater_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let m = random_matrix(&mut rng, 3);
        let mut reversed = m.clone();
        reversed.raters.reverse();
        for row in &mut reversed.values {
            row.reverse();
        }
        let a = krippendorff_alpha::<f64>(&m, Metric::Nominal);
        let b = krippendorff_alpha::<f64>(&reversed, Metric::Nominal);
        match (a, b) {
            (Ok(a), Ok(b)) => assert!((a - b).abs() < 1e-12),
            (Err(_), Err(_)) => {}
            other => panic!("inconsistent results {other:?}"),
        }
    }
}

#[test]
fn alpha_f32_close_to_f64() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..50 {
        let m = random_matrix(&mut rng, 4);
        if let (Ok(a), Ok(b)) = (
            krippendorff_alpha::<f64>(&m, Metric::Interval),
            krippendorff_alpha::<f32>(&m, Metric::Interval),
        ) {
            assert!((a - b as f64).abs() < 1e-4, "{a} vs {b}");
        }
    }
}

#[test]
fn auc_invariant_under_monotone_transform() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut checked = 0;
    while checked < 100 {
        let mut fx = random_fine_fixture(&mut rng);
        if fx.gold.iter().all(|g| g.has_error) || fx.gold.iter().all(|g| !g.has_error) {
            continue;
        }
        let before = roc_curve(&fx.preds, &fx.gold).unwrap().auc;
        for p in &mut fx.preds {
            p.score = p.score.map(|s| (3.0 * s).exp() - 7.0);
        }
        let after = roc_curve(&fx.preds, &fx.gold).unwrap().auc;
        assert!((before - after).abs() < 1e-12);
        checked += 1;
    }
}

#[test]
fn expansion_recall_bounds_fine_recall() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..200 {
        let fx = random_fine_fixture(&mut rng);
        let t: f64 = rng.gen();
        let scored: Vec<(f64, &snac_core::GoldSentence)> =
            fx.gold.iter().map(|g| (fx.preds[g.sentence_index].score.unwrap(), g)).collect();
        let (expansion, _) = category_recall_at(&scored, t);
        let fine = fine_recall_at(&fx.preds, &fx.gold, t).unwrap();
        for (c, r) in fine {
            assert!(expansion[&c] >= r, "{c}: {} < {r}", expansion[&c]);
        }
    }
}

#[test]
fn annotator_subset_is_subset_of_full_aggregate() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for d in 0..20 {
        let n = rng.gen_range(2..9);
        let doc = segment_summary(random_doc(&mut rng, &format!("d{d}"), n), SegmentStrategy::FixedK(3))
            .unwrap()
            .doc;
        let sets: Vec<AnnotationSet> = (0..5)
            .map(|a| {
                let id = format!("a{a}");
                let mut s = AnnotationSet::for_annotator(doc.doc_id(), id.clone());
                for (i, r) in doc.sentences().iter().enumerate() {
                    if rng.gen_bool(0.4) {
                        s.push(ErrorAnnotation {
                            span: Span::new(doc.segment_of_sentence(i).unwrap(), r.start, r.end),
                            category: ErrorCategory::ALL[rng.gen_range(0..3)],
                            antecedent: None,
                            annotator_id: id.clone(),
                        });
                    }
                }
                s
            })
            .collect();
        let full = aggregate_annotators(&sets, &doc).unwrap();
        let k = rng.gen_range(1..=5);
        let subset = reconstruct_eval_subset(std::slice::from_ref(&doc), &sets, k, rng.gen()).unwrap();
        assert_eq!(subset[0].annotator_ids.len(), k);
        assert!(subset[0].is_subset_of(&full));
    }
}

#[test]
fn shuffle_keeps_bag_of_words() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    for i in 0..50 {
        let n = rng.gen_range(2..12);
        let doc = random_doc(&mut rng, &format!("s{i}"), n);
        let out = corrupt_shuffle(&doc, i);
        let mut a = doc.sentence_texts();
        let mut b = out.sentences.clone();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        let self_score = rouge::<f64>(&out.text, doc.text(), RougeVariant::R1);
        assert_eq!(self_score.f1, 1.0);
    }
}

#[test]
fn next_sentence_independent_of_processing_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    let docs: Vec<_> = (0..10).map(|i| random_doc(&mut rng, &format!("n{i}"), 8)).collect();
    let forward: Vec<_> = docs.iter().map(|d| to_jsonl(&next_sentence_triples(d, 5, None)).unwrap()).collect();
    let mut backward: Vec<_> =
        docs.iter().rev().map(|d| to_jsonl(&next_sentence_triples(d, 5, None)).unwrap()).collect();
    backward.reverse();
    assert_eq!(forward, backward);
}
