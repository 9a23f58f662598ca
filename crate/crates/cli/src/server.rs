//! HTTP service backing the annotation interface.
//!
//! Data directory layout:
//! - `roster.json`: `{annotators: [id], assignments?: {id: [doc_id]}}`
//! - `summaries/*.json`: segmented summary files
//! - `annotations/{doc_id}/{annotator_id}.json`: annotation files
//! - `state/{doc_id}/{annotator_id}.json`: task progress and revision log
//! - `reference/{doc_id}.json`: expert reference annotations

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use snac_core::annotation::AnnotationEntry;
use snac_core::{
    validate_annotation, AnnotationFile, CharRange, ErrorAnnotation, Rule, Span, SummaryDocument, Violation,
    SCHEMA_VERSION,
};

use crate::error::{CliError, CliResult};
use crate::input::{read_text, Corpus};

#[derive(Debug, Clone, Deserialize)]
pub struct Roster {
    pub annotators: Vec<String>,
    /// Docs per annotator; every annotator gets every summary when absent.
    #[serde(default)]
    pub assignments: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Pending,
    InProgress,
    Submitted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionEntry {
    pub revision: u64,
    pub segment: usize,
    pub annotations: usize,
    #[serde(rename = "final")]
    pub is_final: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskAssignment {
    pub task_id: String,
    pub doc_id: String,
    pub annotator_id: String,
    pub status: TaskStatus,
    /// Number of segments submitted so far; segments up to and including
    /// this index are visible.
    pub current_segment: usize,
    pub segment_count: usize,
    pub revision: u64,
    #[serde(default)]
    pub log: Vec<RevisionEntry>,
}

impl TaskAssignment {
    fn fresh(doc: &SummaryDocument, annotator_id: &str) -> Self {
        Self {
            task_id: format!("{}:{annotator_id}", doc.doc_id()),
            doc_id: doc.doc_id().to_string(),
            annotator_id: annotator_id.to_string(),
            status: TaskStatus::Pending,
            current_segment: 0,
            segment_count: doc.segment_count(),
            revision: 0,
            log: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct Submission {
    pub doc_id: String,
    pub annotator_id: String,
    pub segment: usize,
    #[serde(default)]
    pub annotations: Vec<AnnotationEntry>,
    #[serde(default)]
    pub likert: Option<u8>,
    /// Closes the task; requires every segment to have been submitted.
    #[serde(default, rename = "final")]
    pub is_final: bool,
}

type KeyLocks = Mutex<HashMap<(String, String), Arc<tokio::sync::Mutex<()>>>>;

pub struct AppState {
    data_dir: PathBuf,
    docs: BTreeMap<String, SummaryDocument>,
    roster: Roster,
    locks: KeyLocks,
}

fn safe_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl AppState {
    pub fn load(data_dir: &Path) -> CliResult<Self> {
        let roster_path = data_dir.join("roster.json");
        let roster: Roster = serde_json::from_str(&read_text(&roster_path)?).map_err(|e| {
            snac_core::SnacError::Parse {
                source_name: roster_path.display().to_string(),
                line: e.line(),
                message: e.to_string(),
            }
        })?;
        let corpus = Corpus::load(&[data_dir.join("summaries")], None)?;
        corpus.require_docs()?;
        let mut docs = BTreeMap::new();
        for doc in corpus.docs {
            doc.require_segmented()?;
            if !safe_id(doc.doc_id()) {
                return Err(CliError::Usage(format!("unsupported doc_id {:?}", doc.doc_id())));
            }
            docs.insert(doc.doc_id().to_string(), doc);
        }
        if let Some(bad) = roster.annotators.iter().find(|a| !safe_id(a)) {
            return Err(CliError::Usage(format!("unsupported annotator id {bad:?}")));
        }
        Ok(Self {
            data_dir: data_dir.to_path_buf(),
            docs,
            roster,
            locks: Mutex::new(HashMap::new()),
        })
    }

    fn assigned(&self, annotator: &str) -> Option<Vec<&SummaryDocument>> {
        if !self.roster.annotators.iter().any(|a| a == annotator) {
            return None;
        }
        Some(match self.roster.assignments.get(annotator) {
            Some(ids) => ids.iter().filter_map(|id| self.docs.get(id)).collect(),
            None => self.docs.values().collect(),
        })
    }

    fn is_assigned(&self, doc_id: &str, annotator: &str) -> bool {
        self.assigned(annotator)
            .is_some_and(|docs| docs.iter().any(|d| d.doc_id() == doc_id))
    }

    fn annotation_path(&self, doc_id: &str, annotator: &str) -> PathBuf {
        self.data_dir.join("annotations").join(doc_id).join(format!("{annotator}.json"))
    }

    fn state_path(&self, doc_id: &str, annotator: &str) -> PathBuf {
        self.data_dir.join("state").join(doc_id).join(format!("{annotator}.json"))
    }

    fn task(&self, doc: &SummaryDocument, annotator: &str) -> Result<TaskAssignment, ApiError> {
        let path = self.state_path(doc.doc_id(), annotator);
        match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| ApiError::internal(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(TaskAssignment::fresh(doc, annotator)),
            Err(e) => Err(ApiError::internal(format!("{}: {e}", path.display()))),
        }
    }

    fn key_lock(&self, doc_id: &str, annotator: &str) -> Arc<tokio::sync::Mutex<()>> {
        let mut locks = self.locks.lock().expect("lock table poisoned");
        locks
            .entry((doc_id.to_string(), annotator.to_string()))
            .or_default()
            .clone()
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers see either the old or the new content.
pub fn write_atomic(path: &Path, content: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(content)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
    violations: Vec<Violation>,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            kind,
            message: message.into(),
            violations: Vec::new(),
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "conflict", message)
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }

    fn invalid(violations: Vec<Violation>) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            kind: "validation",
            message: format!("{} violation(s)", violations.len()),
            violations,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({ "kind": self.kind, "message": self.message });
        if !self.violations.is_empty() {
            error["violations"] = json!(self.violations);
        }
        (self.status, Json(json!({ "schema_version": SCHEMA_VERSION, "error": error }))).into_response()
    }
}

type Shared = Arc<AppState>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/tasks", get(list_tasks))
        .route("/api/summary/{doc_id}", get(get_summary))
        .route("/api/annotations", post(post_annotations))
        .route("/api/annotations/{doc_id}/{annotator}", get(get_annotations))
        .route("/api/reference/{doc_id}", get(get_reference))
        .with_state(Arc::new(state))
}

#[derive(Debug, Deserialize)]
struct AnnotatorQuery {
    annotator: String,
}

async fn list_tasks(State(state): State<Shared>, Query(q): Query<AnnotatorQuery>) -> Result<Json<Value>, ApiError> {
    let docs = state
        .assigned(&q.annotator)
        .ok_or_else(|| ApiError::not_found(format!("unknown annotator {}", q.annotator)))?;
    let tasks = docs
        .into_iter()
        .map(|d| state.task(d, &q.annotator))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Json(json!({
        "schema_version": SCHEMA_VERSION,
        "annotator_id": q.annotator,
        "tasks": tasks,
    })))
}

fn lookup<'a>(state: &'a AppState, doc_id: &str, annotator: &str) -> Result<&'a SummaryDocument, ApiError> {
    let doc = state
        .docs
        .get(doc_id)
        .ok_or_else(|| ApiError::not_found(format!("unknown summary {doc_id}")))?;
    if !state.is_assigned(doc_id, annotator) {
        return Err(ApiError::not_found(format!("no task for {annotator} on {doc_id}")));
    }
    Ok(doc)
}

async fn get_summary(
    State(state): State<Shared>,
    UrlPath(doc_id): UrlPath<String>,
    Query(q): Query<AnnotatorQuery>,
) -> Result<Json<Value>, ApiError> {
    let doc = lookup(&state, &doc_id, &q.annotator)?;
    let task = state.task(doc, &q.annotator)?;
    let visible = (task.current_segment + 1).min(doc.segment_count());
    let last = doc.segment_range(visible - 1);
    let sentence_end = doc.segment_boundaries()[visible - 1];
    let sentences: Vec<CharRange> = doc.sentences()[..sentence_end].to_vec();
    let text: String = doc.text().chars().take(last.end).collect();
    let breaks: Vec<usize> = doc.paragraph_breaks().iter().copied().filter(|&b| b < sentence_end).collect();
    Ok(Json(json!({
        "schema_version": SCHEMA_VERSION,
        "doc_id": doc.doc_id(),
        "system_id": doc.system_id(),
        "status": task.status,
        "current_segment": task.current_segment,
        "segment_count": doc.segment_count(),
        "revision": task.revision,
        "text": text,
        "sentences": sentences,
        "paragraph_breaks": breaks,
        "segments": &doc.segment_boundaries()[..visible],
    })))
}

async fn post_annotations(
    State(state): State<Shared>,
    Json(sub): Json<Submission>,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let doc = lookup(&state, &sub.doc_id, &sub.annotator_id)?;
    let lock = state.key_lock(&sub.doc_id, &sub.annotator_id);
    let _guard = lock.lock().await;

    let mut task = state.task(doc, &sub.annotator_id)?;
    if task.status == TaskStatus::Submitted {
        return Err(ApiError::conflict("task already submitted"));
    }
    if sub.segment >= doc.segment_count() {
        return Err(ApiError::invalid(vec![Violation {
            rule: Rule::SegmentOutOfRange,
            message: Rule::SegmentOutOfRange.message().to_string(),
            annotation_index: None,
        }]));
    }
    if sub.segment > task.current_segment {
        return Err(ApiError::conflict(format!(
            "segment {} is not revealed yet; current segment is {}",
            sub.segment, task.current_segment
        )));
    }
    if let Some(i) = sub.annotations.iter().position(|e| e.segment != sub.segment) {
        return Err(ApiError::bad_request(format!(
            "annotation {i} belongs to segment {}, not the submitted segment {}",
            sub.annotations[i].segment, sub.segment
        )));
    }

    let mut violations = Vec::new();
    if sub.likert.is_some_and(|l| !(1..=5).contains(&l)) {
        violations.push(Violation {
            rule: Rule::LikertOutOfRange,
            message: Rule::LikertOutOfRange.message().to_string(),
            annotation_index: None,
        });
    }
    for (i, e) in sub.annotations.iter().enumerate() {
        let a = ErrorAnnotation {
            span: Span::new(e.segment, e.start, e.end),
            category: e.category,
            antecedent: e.antecedent,
            annotator_id: sub.annotator_id.clone(),
        };
        violations.extend(validate_annotation(&a, doc).into_iter().map(|rule| Violation {
            rule,
            message: rule.message().to_string(),
            annotation_index: Some(i),
        }));
    }
    if !violations.is_empty() {
        return Err(ApiError::invalid(violations));
    }

    let next_segment = if sub.segment == task.current_segment {
        task.current_segment + 1
    } else {
        task.current_segment
    };
    if sub.is_final && next_segment < doc.segment_count() {
        return Err(ApiError::conflict("every segment must be submitted before the final submission"));
    }

    let path = state.annotation_path(&sub.doc_id, &sub.annotator_id);
    let mut file = match std::fs::read_to_string(&path) {
        Ok(text) => AnnotationFile::from_json(&text).map_err(|e| ApiError::internal(e.to_string()))?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => AnnotationFile {
            schema_version: SCHEMA_VERSION.to_string(),
            doc_id: sub.doc_id.clone(),
            annotator_id: sub.annotator_id.clone(),
            likert: None,
            annotations: Vec::new(),
        },
        Err(e) => return Err(ApiError::internal(e.to_string())),
    };
    file.annotations.retain(|e| e.segment != sub.segment);
    file.annotations.extend(sub.annotations.iter().cloned());
    file.annotations.sort_by_key(|e| (e.segment, e.start, e.end, e.category));
    if sub.likert.is_some() {
        file.likert = sub.likert;
    }

    task.revision += 1;
    task.current_segment = next_segment.min(doc.segment_count());
    task.status = if sub.is_final {
        TaskStatus::Submitted
    } else {
        TaskStatus::InProgress
    };
    task.log.push(RevisionEntry {
        revision: task.revision,
        segment: sub.segment,
        annotations: sub.annotations.len(),
        is_final: sub.is_final,
    });

    let file_json = file.to_json().map_err(|e| ApiError::internal(e.to_string()))?;
    let task_json = serde_json::to_string_pretty(&task).map_err(|e| ApiError::internal(e.to_string()))?;
    let state_path = state.state_path(&sub.doc_id, &sub.annotator_id);
    tokio::task::spawn_blocking(move || -> std::io::Result<()> {
        write_atomic(&path, file_json.as_bytes())?;
        write_atomic(&state_path, task_json.as_bytes())
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
    .map_err(|e| ApiError::internal(e.to_string()))?;

    Ok((
        StatusCode::CREATED,
        Json(json!({
            "schema_version": SCHEMA_VERSION,
            "doc_id": task.doc_id,
            "annotator_id": task.annotator_id,
            "revision": task.revision,
            "status": task.status,
            "current_segment": task.current_segment,
            "segment_count": task.segment_count,
        })),
    ))
}

async fn get_annotations(
    State(state): State<Shared>,
    UrlPath((doc_id, annotator)): UrlPath<(String, String)>,
) -> Result<Json<AnnotationFile>, ApiError> {
    lookup(&state, &doc_id, &annotator)?;
    match std::fs::read_to_string(state.annotation_path(&doc_id, &annotator)) {
        Ok(text) => Ok(Json(AnnotationFile::from_json(&text).map_err(|e| ApiError::internal(e.to_string()))?)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(ApiError::not_found(format!("no annotations from {annotator} on {doc_id}")))
        }
        Err(e) => Err(ApiError::internal(e.to_string())),
    }
}

async fn get_reference(State(state): State<Shared>, UrlPath(doc_id): UrlPath<String>) -> Result<Json<Value>, ApiError> {
    if !state.docs.contains_key(&doc_id) {
        return Err(ApiError::not_found(format!("unknown summary {doc_id}")));
    }
    let path = state.data_dir.join("reference").join(format!("{doc_id}.json"));
    match std::fs::read_to_string(&path) {
        Ok(text) => Ok(Json(serde_json::from_str(&text).map_err(|e| ApiError::internal(e.to_string()))?)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(ApiError::not_found(format!("no reference annotations for {doc_id}")))
        }
        Err(e) => Err(ApiError::internal(e.to_string())),
    }
}

pub fn serve_blocking(data_dir: &Path, host: &str, port: u16) -> CliResult<()> {
    let state = AppState::load(data_dir)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::io(data_dir, e))?;
    runtime.block_on(async move {
        let addr = format!("{host}:{port}");
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::io(PathBuf::from(&addr), e))?;
        eprintln!("serving {} on http://{addr}", data_dir.display());
        axum::serve(listener, router(state))
            .await
            .map_err(|e| CliError::io(PathBuf::from(&addr), e))
    })
}
