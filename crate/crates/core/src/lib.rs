//! Toolkit for span-level narrative coherence error annotation: the error
//! taxonomy and annotation model, inter-annotator agreement, corruption and
//! ROUGE baselines, synthetic training data generators, unsupervised
//! coherence scorers, and an evaluation harness for error detectors.
//!
//! Numeric routines are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the bottom of this file fix them to `f64`.

pub mod agreement;
pub mod analysis;
pub mod annotation;
pub mod corruption;
pub mod document;
pub mod entity_grid;
pub mod error;
pub mod eval;
pub mod lm;
pub mod mentions;
pub mod projection;
pub mod report;
pub mod rouge;
pub mod scalar;
pub mod synthgen;
pub mod taxonomy;
pub mod threshold;
pub mod tokenize;

pub use agreement::{
    krippendorff_alpha, normalize_overlapping_spans, token_matrix, two_agree, unit_matrix, Metric,
    RatingMatrix,
};
pub use annotation::{
    aggregate_annotators, validate_annotation, AggregatedAnnotation, AggregatedSet, Annotated,
    AnnotationFile, AnnotationSet, ErrorAnnotation, Rule, Span, Violation,
};
pub use corruption::{CorruptionKind, CorruptionRecipe, Corrupted};
pub use document::{segment_summary, CharRange, SegmentStrategy, SummaryDocument, SCHEMA_VERSION};
pub use entity_grid::{EntityGrid, HeuristicRoles, Role, RoleFile, RoleProvider, TransitionModel};
pub use error::{Result, SnacError};
pub use eval::{Averaging, Decision, GoldSentence, PredictionRecord};
pub use projection::{project_labels, Level, ProjectedLabels};
pub use report::{agreement_report, build_gold, eval_report, AgreementLevel, EvalConfig, EvalTask};
pub use rouge::{RougeScore, RougeVariant};
pub use scalar::Scalar;
pub use synthgen::{Generator, MentionChain, TrainingTriple, TripleRecord};
pub use taxonomy::{CategorySelector, ErrorCategory, ErrorGroup, Scope};
pub use threshold::{Criterion, ThresholdConfig};
pub use tokenize::{tokenize, Token};

pub type ErrorDistribution = analysis::ErrorDistribution<f64>;
pub type Correlation = analysis::Correlation<f64>;
pub type BinarizedAlpha = agreement::BinarizedAlpha<f64>;
pub type Rouge = RougeScore<f64>;
pub type Transitions = TransitionModel<f64>;
pub type GridScore = entity_grid::GridScore<f64>;
pub type Threshold = ThresholdConfig<f64>;
pub type Prediction = PredictionRecord<f64>;
pub type BinaryMetrics = eval::BinaryMetrics<f64>;
pub type RocCurve = eval::RocCurve<f64>;
pub type FineMetrics = eval::FineMetrics<f64>;
pub type RecallAtPrecision = eval::RecallAtPrecision<f64>;
