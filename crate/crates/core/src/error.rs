use thiserror::Error;

use crate::annotation::Violation;

#[derive(Debug, Error)]
pub enum SnacError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid document {doc_id}: {reason}")]
    InvalidDocument { doc_id: String, reason: String },

    #[error("annotation validation failed with {} violation(s)", .0.len())]
    Validation(Vec<Violation>),

    #[error("agreement undefined: {0}")]
    UndefinedAgreement(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("distribution undefined: {0}")]
    UndefinedDistribution(String),

    #[error("two-agree undefined: no token was marked by any annotator")]
    UndefinedTwoAgree,

    #[error("single class: {0}")]
    SingleClass(String),

    #[error("missing predictions for {} gold sentence(s): {}", .0.len(), preview(.0))]
    MissingPredictions(Vec<String>),

    #[error("incomplete scores, missing ids: {}", preview(.0))]
    IncompleteScores(Vec<String>),

    #[error("duplicate id {0}")]
    DuplicateId(String),

    #[error("target precision {target} unachievable; maximum achievable precision is {max_achievable}")]
    UnachievablePrecision { target: f64, max_achievable: f64 },

    #[error("summary {doc_id} has {available} annotator(s), {required} required")]
    TooFewAnnotators {
        doc_id: String,
        available: usize,
        required: usize,
    },

    #[error("annotator {0} is part of the gold set")]
    Leakage(String),

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("unsupported schema_version {0:?}, expected \"1\"")]
    SchemaVersion(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SnacError {
    /// Stable snake_case name for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            SnacError::InvalidArgument(_) => "invalid_argument",
            SnacError::InvalidDocument { .. } => "invalid_document",
            SnacError::Validation(_) => "validation",
            SnacError::UndefinedAgreement(_) => "undefined_agreement",
            SnacError::UndefinedCorrelation(_) => "undefined_correlation",
            SnacError::UndefinedDistribution(_) => "undefined_distribution",
            SnacError::UndefinedTwoAgree => "undefined_two_agree",
            SnacError::SingleClass(_) => "single_class",
            SnacError::MissingPredictions(_) => "missing_predictions",
            SnacError::IncompleteScores(_) => "incomplete_scores",
            SnacError::DuplicateId(_) => "duplicate_id",
            SnacError::UnachievablePrecision { .. } => "unachievable_precision",
            SnacError::TooFewAnnotators { .. } => "too_few_annotators",
            SnacError::Leakage(_) => "leakage",
            SnacError::Parse { .. } => "parse",
            SnacError::SchemaVersion(_) => "schema_version",
            SnacError::Json(_) => "json",
            SnacError::Io(_) => "io",
        }
    }
}

fn preview(ids: &[String]) -> String {
    const SHOWN: usize = 10;
    let mut out = ids.iter().take(SHOWN).cloned().collect::<Vec<_>>().join(", ");
    if ids.len() > SHOWN {
        out.push_str(&format!(", ... ({} more)", ids.len() - SHOWN));
    }
    out
}

pub type Result<T, E = SnacError> = std::result::Result<T, E>;
