#![allow(dead_code)]

use std::fs;
use std::path::Path;

use serde_json::{json, Value};

pub const SENTENCES: [&str; 6] = [
    "Gabriel Oak farms sheep.",
    "Bathsheba arrives at the farm.",
    "The storm destroys everything.",
    "Troy leaves the army.",
    "Gabriel saves the ricks.",
    "Later they marry.",
];

pub fn summary_json(doc_id: &str) -> Value {
    let text = SENTENCES.join(" ");
    let mut sentences = Vec::new();
    let mut pos = 0;
    for s in SENTENCES {
        let start = text[pos..].find(s).unwrap() + pos;
        sentences.push(json!({ "start": start, "end": start + s.len() }));
        pos = start + s.len();
    }
    json!({
        "schema_version": "1",
        "doc_id": doc_id,
        "system_id": "sys",
        "text": text,
        "sentences": sentences,
        "paragraph_breaks": [],
        "segments": [2, 4, 6],
    })
}

pub fn annotation_json(doc_id: &str, annotator: &str, entries: Value, likert: Option<u8>) -> Value {
    let mut v = json!({
        "schema_version": "1",
        "doc_id": doc_id,
        "annotator_id": annotator,
        "annotations": entries,
    });
    if let Some(l) = likert {
        v["likert"] = json!(l);
    }
    v
}

pub fn write_json(path: &Path, value: &Value) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

/// "Bathsheba" in sentence 1 (segment 0).
pub fn chare() -> Value {
    json!({ "category": "CharE", "segment": 0, "start": 25, "end": 34 })
}

/// Whole sentence 2 (segment 1).
pub fn scene() -> Value {
    json!({ "category": "SceneE", "segment": 1, "start": 56, "end": 86 })
}

/// "Troy" in sentence 3 (segment 1).
pub fn grame() -> Value {
    json!({ "category": "GramE", "segment": 1, "start": 87, "end": 91 })
}

/// Two summaries, three annotators.
pub fn corpus(dir: &Path) {
    for doc in ["doc1", "doc2"] {
        write_json(&dir.join("summaries").join(format!("{doc}.json")), &summary_json(doc));
        let sets = [
            ("a", json!([chare(), scene()]), 2),
            ("b", json!([chare(), grame()]), 3),
            ("c", json!([chare()]), 4),
        ];
        for (id, entries, likert) in sets {
            write_json(
                &dir.join("annotations").join(format!("{doc}_{id}.json")),
                &annotation_json(doc, id, entries, Some(likert)),
            );
        }
    }
}
