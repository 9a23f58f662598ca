//! Reading summaries, annotation files and auxiliary inputs from disk.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use snac_core::document::segment_summary;
use snac_core::{AnnotationFile, AnnotationSet, SegmentStrategy, SnacError, SummaryDocument};
use walkdir::WalkDir;

use crate::error::{CliError, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Writes `content` to `out`, or to stdout when `out` is `None`.
pub fn emit(out: Option<&Path>, content: &str) -> CliResult<()> {
    let mut content = content.to_string();
    if !content.ends_with('\n') {
        content.push('\n');
    }
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            }
            fs::write(path, content).map_err(|e| CliError::io(path, e))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

pub fn emit_json<S: serde::Serialize>(out: Option<&Path>, value: &S) -> CliResult<()> {
    emit(out, &serde_json::to_string_pretty(value).map_err(SnacError::from)?)
}

/// JSON files under `path` in lexicographic order; a file path is returned
/// as is.
pub fn json_files(path: &Path, extension: &str) -> CliResult<Vec<PathBuf>> {
    if !path.exists() {
        return Err(CliError::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
        ));
    }
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in WalkDir::new(path).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let p = e.path().unwrap_or(path).to_path_buf();
            CliError::io(p, e.into())
        })?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == extension) {
            files.push(entry.into_path());
        }
    }
    Ok(files)
}

#[derive(Debug, Default)]
pub struct Corpus {
    pub docs: Vec<SummaryDocument>,
    pub sets: Vec<AnnotationSet>,
    pub warnings: Vec<String>,
}

enum Kind {
    Summary,
    Annotation,
    Bundle,
    Other,
}

fn classify(v: &Value) -> Kind {
    let has = |k: &str| v.get(k).is_some();
    if has("annotator_id") && has("annotations") {
        Kind::Annotation
    } else if has("text") && has("sentences") {
        Kind::Summary
    } else if has("summaries") || (has("annotations") && v["annotations"].is_array() && !has("doc_id")) {
        Kind::Bundle
    } else {
        Kind::Other
    }
}

impl Corpus {
    /// Loads every summary and annotation file found under `paths`.
    /// Unsegmented summaries are split into chunks of `segment_k` sentences
    /// when given.
    pub fn load(paths: &[PathBuf], segment_k: Option<usize>) -> CliResult<Corpus> {
        let mut corpus = Corpus::default();
        for root in paths {
            let explicit = root.is_file();
            for file in json_files(root, "json")? {
                let text = read_text(&file)?;
                let value: Value = serde_json::from_str(&text).map_err(|e| SnacError::Parse {
                    source_name: file.display().to_string(),
                    line: e.line(),
                    message: e.to_string(),
                })?;
                let name = file.display().to_string();
                match classify(&value) {
                    Kind::Summary => corpus.push_doc(&text, &name, segment_k)?,
                    Kind::Annotation => corpus.push_annotation(&text, &name)?,
                    Kind::Bundle => {
                        for s in value.get("summaries").and_then(Value::as_array).into_iter().flatten() {
                            corpus.push_doc(&s.to_string(), &name, segment_k)?;
                        }
                        for a in value.get("annotations").and_then(Value::as_array).into_iter().flatten() {
                            corpus.push_annotation(&a.to_string(), &name)?;
                        }
                    }
                    Kind::Other if explicit => {
                        return Err(SnacError::InvalidArgument(format!(
                            "{name}: neither a summary nor an annotation file"
                        ))
                        .into())
                    }
                    Kind::Other => corpus.warnings.push(format!("skipped {name}")),
                }
            }
        }
        let mut seen = BTreeSet::new();
        for d in &corpus.docs {
            if !seen.insert(d.doc_id()) {
                return Err(SnacError::DuplicateId(d.doc_id().to_string()).into());
            }
        }
        let mut seen = BTreeSet::new();
        for s in &corpus.sets {
            for id in &s.annotator_ids {
                if !seen.insert((s.doc_id.as_str(), id.as_str())) {
                    return Err(SnacError::DuplicateId(format!("{}/{id}", s.doc_id)).into());
                }
            }
        }
        Ok(corpus)
    }

    fn push_doc(&mut self, json: &str, name: &str, segment_k: Option<usize>) -> CliResult<()> {
        let doc = SummaryDocument::from_json(json).map_err(|e| with_source(e, name))?;
        let doc = match segment_k {
            Some(k) if !doc.is_segmented() => {
                let seg = segment_summary(doc, SegmentStrategy::FixedK(k))?;
                self.warnings.extend(seg.warnings);
                seg.doc
            }
            _ => doc,
        };
        self.docs.push(doc);
        Ok(())
    }

    fn push_annotation(&mut self, json: &str, name: &str) -> CliResult<()> {
        let file = AnnotationFile::from_json(json).map_err(|e| with_source(e, name))?;
        self.sets.push(file.into_set());
        Ok(())
    }

    pub fn require_docs(&self) -> CliResult<()> {
        if self.docs.is_empty() {
            return Err(CliError::Usage("no summary files found in the given inputs".into()));
        }
        Ok(())
    }

    pub fn doc(&self, doc_id: &str) -> Option<&SummaryDocument> {
        self.docs.iter().find(|d| d.doc_id() == doc_id)
    }

    /// Fails with every violation found if any annotation file is invalid.
    pub fn ensure_valid(&self) -> CliResult<()> {
        let mut all = Vec::new();
        for set in &self.sets {
            match self.doc(&set.doc_id) {
                Some(doc) => all.extend(set.validate(doc)),
                None => {
                    return Err(SnacError::InvalidArgument(format!(
                        "annotations reference unknown summary {}",
                        set.doc_id
                    ))
                    .into())
                }
            }
        }
        if all.is_empty() {
            Ok(())
        } else {
            Err(SnacError::Validation(all).into())
        }
    }
}

fn with_source(e: SnacError, name: &str) -> SnacError {
    match e {
        SnacError::Json(j) => SnacError::Parse {
            source_name: name.to_string(),
            line: j.line(),
            message: j.to_string(),
        },
        SnacError::InvalidDocument { doc_id, reason } => SnacError::InvalidDocument {
            doc_id,
            reason: format!("{reason} ({name})"),
        },
        other => other,
    }
}
