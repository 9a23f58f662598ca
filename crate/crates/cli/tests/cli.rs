mod common;

use std::fs;
use std::path::Path;

use serde_json::{json, Value};
use snac_cli::commands::{execute, Cli};
use snac_cli::error::CliError;
use snac_cli::run;

use common::*;

fn snac(args: &[&str]) -> i32 {
    let mut argv = vec!["snac"];
    argv.extend_from_slice(args);
    run(argv)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn agree_sentence_level_happy_path() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let out = dir.path().join("agree.json");
    let code = snac(&["agree", "--annotations", p(dir.path()), "--level", "sentence", "--out", p(&out)]);
    assert_eq!(code, 0);
    let report = read(&out);
    assert_eq!(report["schema_version"], "1");
    assert_eq!(report["level"], "sentence");
    assert_eq!(report["summaries"], 2);
    let labels: Vec<&str> = report["rows"].as_array().unwrap().iter().map(|r| r["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["coherence", "language", "all"]);
}

#[test]
fn agree_table_and_normalize() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let out = dir.path().join("agree.txt");
    let code = snac(&[
        "agree", "--annotations", p(dir.path()), "--normalize", "RefE,InconE", "--format", "table", "--out", p(&out),
    ]);
    assert_eq!(code, 0);
    let table = fs::read_to_string(&out).unwrap();
    let header = table.lines().next().unwrap();
    assert!(header.contains("alpha") && header.contains("two-agree %"));
    assert!(table.lines().any(|l| l.starts_with("CharE") && l.contains("1.000") && l.contains("100.0")));
}

#[test]
fn validate_reports_partial_scene_span() {
    let dir = tempfile::tempdir().unwrap();
    write_json(&dir.path().join("summaries/doc1.json"), &summary_json("doc1"));
    let bad = json!([{ "category": "SceneE", "segment": 1, "start": 60, "end": 86 }]);
    write_json(&dir.path().join("ann/doc1_a.json"), &annotation_json("doc1", "a", bad, None));
    let out = dir.path().join("report.json");
    let code = snac(&["validate", p(dir.path()), "--out", p(&out)]);
    assert_eq!(code, 2);
    let report = read(&out);
    assert_eq!(report["ok"], false);
    let v = &report["annotation_files"][0]["violations"][0];
    assert_eq!(v["rule"], "scene_whole_sentences");
    assert_eq!(v["message"], "SceneE must be whole sentences");
}

#[test]
fn validate_clean_corpus() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let out = dir.path().join("report.json");
    assert_eq!(snac(&["validate", p(dir.path()), "--out", p(&out)]), 0);
    assert_eq!(read(&out)["ok"], true);
}

#[test]
fn eval_roc_single_class_is_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    write_json(&dir.path().join("summaries/doc1.json"), &summary_json("doc1"));
    // language errors only: no coherence positives
    write_json(
        &dir.path().join("ann/doc1_a.json"),
        &annotation_json("doc1", "a", json!([grame()]), None),
    );
    let preds: String = (0..6)
        .map(|i| format!("{{\"doc_id\":\"doc1\",\"sentence_index\":{i},\"score\":{}}}\n", i as f64 / 10.0))
        .collect();
    let preds_path = dir.path().join("preds.jsonl");
    fs::write(&preds_path, preds).unwrap();
    let args = ["eval", "--preds", p(&preds_path), "--gold", p(dir.path()), "--task", "roc"];
    assert_eq!(snac(&args), 2);

    use clap::Parser;
    let cli = Cli::try_parse_from(std::iter::once("snac").chain(args)).unwrap();
    let err = execute(cli).unwrap_err();
    assert!(matches!(err, CliError::Domain(_)));
    assert!(err.to_string().contains("single class"), "{err}");
    assert_eq!(err.report()["error"]["kind"], "single_class");
}

#[test]
fn eval_perfect_predictions() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    // gold coherence errors: sentence 1 (CharE) and sentence 2 (SceneE) in both docs
    let mut preds = String::new();
    for doc in ["doc1", "doc2"] {
        for i in 0..6 {
            let err = i == 1 || i == 2;
            preds.push_str(&format!(
                "{{\"doc_id\":\"{doc}\",\"sentence_index\":{i},\"score\":{},\"label\":{}}}\n",
                if err { 0.9 } else { 0.1 },
                if err { 0 } else { 1 }
            ));
        }
    }
    let preds_path = dir.path().join("preds.jsonl");
    fs::write(&preds_path, preds).unwrap();
    let out = dir.path().join("eval.json");
    let code = snac(&[
        "eval", "--preds", p(&preds_path), "--gold", p(&dir.path().join("summaries")), p(&dir.path().join("annotations")),
        "--task", "binary,roc,rap", "--out", p(&out),
    ]);
    assert_eq!(code, 0);
    let r = read(&out);
    assert_eq!(r["binary"]["f1"], 1.0);
    assert_eq!(r["roc"]["auc"], 1.0);
    assert_eq!(r["recall_at_precision"]["per_category"]["CharE"], 1.0);
    assert_eq!(r["recall_at_precision"]["per_category"]["SceneE"], 1.0);
}

#[test]
fn eval_missing_predictions_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let preds_path = dir.path().join("preds.jsonl");
    fs::write(&preds_path, "{\"doc_id\":\"doc1\",\"sentence_index\":0,\"score\":0.5}\n").unwrap();
    assert_eq!(snac(&["eval", "--preds", p(&preds_path), "--gold", p(dir.path()), "--task", "roc"]), 2);
}

#[test]
fn eval_human_with_leakage_free_gold() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let out = dir.path().join("human.json");
    let code = snac(&["eval", "--human", "c", "--gold", p(dir.path()), "--task", "fine", "--out", p(&out)]);
    assert_eq!(code, 0);
    let r = read(&out);
    assert_eq!(r["human"], "c");
    assert_eq!(r["finegrained"]["CharE"]["precision"], 1.0);
    assert_eq!(r["finegrained"]["SceneE"]["recall"], 0.0);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(snac(&["agree", "--bogus"]), 64);
    assert_eq!(snac(&["frobnicate"]), 64);
    assert_eq!(snac(&["corrupt", "--kind", "sideways", "--summaries", "x"]), 64);
    assert_eq!(snac(&["--help"]), 0);
    assert_eq!(snac(&["--version"]), 0);
}

#[test]
fn missing_input_is_io_error() {
    assert_eq!(snac(&["validate", "/nonexistent/snac/input"]), 1);
}

#[test]
fn corrupt_and_synthgen_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let summaries = dir.path().join("summaries");
    for (name, args) in [
        ("rep", vec!["corrupt", "--kind", "repetition", "--seed", "7"]),
        ("shuf", vec!["corrupt", "--kind", "shuffle", "--seed", "7"]),
        ("neb", vec!["corrupt", "--kind", "ne-bigram"]),
        ("ns", vec!["synthgen", "--method", "nextsent", "--seed", "7", "--max-per-doc", "2"]),
        ("co", vec!["synthgen", "--method", "coref"]),
    ] {
        let outs: Vec<String> = (0..2)
            .map(|i| {
                let out = dir.path().join(format!("{name}{i}.out"));
                let mut full = args.clone();
                full.extend(["--summaries", p(&summaries), "--out", p(&out)]);
                assert_eq!(snac(&full), 0, "{name}");
                fs::read_to_string(&out).unwrap()
            })
            .collect();
        assert_eq!(outs[0], outs[1], "{name}");
        assert!(!outs[0].is_empty());
    }
    let rep = read(&dir.path().join("rep0.out"));
    assert_eq!(rep["documents"][0]["corrupted"]["sentences"].as_array().unwrap().len(), 9);
    let ns = fs::read_to_string(dir.path().join("ns0.out")).unwrap();
    let labels: Vec<i64> = ns
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap()["label"].as_i64().unwrap())
        .collect();
    assert_eq!(labels.len(), 8);
    assert_eq!(labels.iter().filter(|&&l| l == 0).count(), 4);

    let meta = dir.path().join("ns.meta.json");
    let out = dir.path().join("ns.meta.out");
    let args = ["synthgen", "--method", "nextsent", "--seed", "7", "--max-per-doc", "2"];
    let mut full = args.to_vec();
    full.extend(["--summaries", p(&summaries), "--out", p(&out), "--meta", p(&meta)]);
    assert_eq!(snac(&full), 0);
    let meta = read(&meta);
    assert_eq!(meta["method"], "nextsent");
    assert_eq!(meta["triples"], 8);
    assert_eq!(meta["negatives"], 4);
    assert_eq!(meta["positives"], 4);
}

#[test]
fn rouge_hand_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c.txt");
    let r = dir.path().join("r.txt");
    fs::write(&c, "the cat sat").unwrap();
    fs::write(&r, "the cat ran").unwrap();
    let out = dir.path().join("rouge.json");
    assert_eq!(snac(&["rouge", "--candidate", p(&c), "--reference", p(&r), "--out", p(&out)]), 0);
    let report = read(&out);
    assert_eq!(report["scores"]["R1"]["f1"].as_f64().unwrap(), 2.0 / 3.0);
    assert_eq!(report["scores"]["R2"]["f1"].as_f64().unwrap(), 0.5);
    assert_eq!(report["config"]["stemming"], false);
}

#[test]
fn grid_train_score_and_threshold_selection() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let summaries = dir.path().join("summaries");
    let model = dir.path().join("model.json");
    assert_eq!(snac(&["grid", "train", "--summaries", p(&summaries), "--smoothing", "0.5", "--out", p(&model)]), 0);
    let m = read(&model);
    assert_eq!(m["smoothing"], 0.5);
    for row in m["probabilities"].as_object().unwrap().values() {
        let total: f64 = row.as_object().unwrap().values().map(|v| v.as_f64().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
    let preds = dir.path().join("preds.jsonl");
    assert_eq!(snac(&["grid", "score", "--model", p(&model), "--summaries", p(&summaries), "--out", p(&preds)]), 0);
    assert_eq!(fs::read_to_string(&preds).unwrap().lines().count(), 12);

    let out = dir.path().join("eval.json");
    let code = snac(&[
        "eval", "--preds", p(&preds), "--gold", p(dir.path()), "--dev-preds", p(&preds), "--dev-gold", p(dir.path()),
        "--task", "binary", "--out", p(&out),
    ]);
    assert_eq!(code, 0);
    let r = read(&out);
    assert_eq!(r["threshold_selection"]["criterion"], "max_f1");
    assert!(r["config"]["threshold"].is_number());
}

#[test]
fn lm_scores_feed_eval() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let mut lines = String::new();
    for doc in ["doc1", "doc2"] {
        for i in 0..6 {
            let lp = if i == 1 || i == 2 { -9.0 } else { -1.0 };
            lines.push_str(&format!("{{\"doc_id\":\"{doc}\",\"sentence_index\":{i},\"logprob\":{lp}}}\n"));
        }
    }
    let path = dir.path().join("lm.jsonl");
    fs::write(&path, &lines).unwrap();
    let out = dir.path().join("eval.json");
    assert_eq!(snac(&["eval", "--lm-scores", p(&path), "--gold", p(dir.path()), "--task", "roc", "--out", p(&out)]), 0);
    assert_eq!(read(&out)["roc"]["auc"], 1.0);

    fs::write(&path, lines.replace("\"logprob\":-9}", "\"logprob\":0.5}")).unwrap();
    assert_eq!(snac(&["eval", "--lm-scores", p(&path), "--gold", p(dir.path()), "--task", "roc"]), 2);
}

#[test]
fn stats_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let out = dir.path().join("stats.json");
    let csv = dir.path().join("dist.csv");
    assert_eq!(snac(&["stats", "--annotations", p(dir.path()), "--csv", p(&csv), "--out", p(&out)]), 0);
    let report = read(&out);
    assert_eq!(report["distribution"]["summaries"], 2);
    assert_eq!(report["likert_observations"], 6);
    let csv = fs::read_to_string(&csv).unwrap();
    assert!(csv.starts_with("category,unique_errors,unique_fraction,token_fraction"));
    assert_eq!(csv.lines().count(), 8);
}

#[test]
fn project_outputs_labels() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let out = dir.path().join("proj.json");
    assert_eq!(snac(&["project", "--annotations", p(dir.path()), "--level", "sentence", "--out", p(&out)]), 0);
    let r = read(&out);
    assert_eq!(r["summaries"][0]["labels"], json!([false, true, true, false, false, false]));
}
