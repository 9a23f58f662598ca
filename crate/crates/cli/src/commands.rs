//! Subcommand definitions and handlers.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use snac_core::analysis::{error_counts, error_type_distribution, likert_error_correlation, likert_observations};
use snac_core::corruption::{
    corrupt_ne_bigram, corrupt_repetition, corrupt_shuffle, heuristic_ne_spans, top_bigrams, NamedEntitySpan,
};
use snac_core::entity_grid::{build_entity_grid, entity_grid_score, estimate_transitions};
use snac_core::eval::{gold_sentences, human_as_predictor, parse_predictions, predictions_to_jsonl};
use snac_core::lm::{check_complete, lm_conditional_scores};
use snac_core::report::sets_by_doc;
use snac_core::rouge::{rouge, ROUGE_CONFIG};
use snac_core::synthgen::{coref_triples, heuristic_mention_chains, next_sentence_triples, to_jsonl, ChainFile};
use snac_core::threshold::select_threshold;
use snac_core::{
    aggregate_annotators, agreement_report, build_gold, eval_report, project_labels, AgreementLevel, AnnotationSet,
    Averaging, CorruptionKind, CorruptionRecipe, Criterion, ErrorCategory, EvalConfig, EvalTask, HeuristicRoles,
    Level, Prediction, RoleFile, RoleProvider, RougeVariant, Scope, SnacError, SummaryDocument, Transitions,
    SCHEMA_VERSION,
};

use crate::error::{CliError, CliResult};
use crate::input::{emit, emit_json, json_files, read_text, Corpus};
use crate::server;

#[derive(Debug, Parser)]
#[command(name = "snac", version, about = "Narrative coherence error annotation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check annotation files against their summaries.
    Validate(ValidateArgs),
    /// Project span annotations to sentence or segment labels.
    Project(ProjectArgs),
    /// Inter-annotator agreement report.
    Agree(AgreeArgs),
    /// Error-type distribution and error count vs Likert correlations.
    Stats(StatsArgs),
    /// Apply a corruption baseline to summaries.
    Corrupt(CorruptArgs),
    /// ROUGE between a candidate and a reference text file.
    Rouge(RougeArgs),
    /// Generate synthetic training triples.
    Synthgen(SynthgenArgs),
    /// Entity-grid transition model.
    #[command(subcommand)]
    Grid(GridCommand),
    /// Score predictions against gold annotations.
    Eval(EvalArgs),
    /// Run the annotation HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Annotation files or directories (summaries found there are used too).
    #[arg(long, num_args = 1.., value_name = "PATH")]
    pub annotations: Vec<PathBuf>,
    /// Summary files or directories.
    #[arg(long, num_args = 1.., value_name = "PATH")]
    pub summaries: Vec<PathBuf>,
    /// Segment unsegmented summaries into chunks of K sentences.
    #[arg(long, value_name = "K")]
    pub segment_k: Option<usize>,
}

impl InputArgs {
    fn load(&self) -> CliResult<Corpus> {
        let paths: Vec<PathBuf> = self.summaries.iter().chain(&self.annotations).cloned().collect();
        if paths.is_empty() {
            return Err(CliError::Usage("pass --annotations and/or --summaries".into()));
        }
        let corpus = Corpus::load(&paths, self.segment_k)?;
        for w in &corpus.warnings {
            eprintln!("warning: {w}");
        }
        corpus.require_docs()?;
        Ok(corpus)
    }

    fn load_valid(&self) -> CliResult<Corpus> {
        let corpus = self.load()?;
        corpus.ensure_valid()?;
        Ok(corpus)
    }
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Summary and annotation files or directories.
    #[arg(required = true, value_name = "PATH")]
    pub paths: Vec<PathBuf>,
    #[arg(long, value_name = "K")]
    pub segment_k: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "sentence")]
    pub level: Level,
    #[arg(long, default_value = "coherence")]
    pub scope: Scope,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct AgreeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "token")]
    pub level: AgreementLevel,
    /// Categories whose overlapping spans are merged to their union first,
    /// e.g. RefE,InconE.
    #[arg(long, value_delimiter = ',', value_name = "CATEGORIES")]
    pub normalize: Vec<ErrorCategory>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "dataset")]
    pub dataset_id: String,
    /// Also write the distribution as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    #[arg(long, required = true, num_args = 1.., value_name = "PATH")]
    pub summaries: Vec<PathBuf>,
    #[arg(long)]
    pub kind: CorruptionKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = snac_core::corruption::DEFAULT_REPEAT_FRACTION)]
    pub fraction: f64,
    #[arg(long, default_value_t = snac_core::corruption::DEFAULT_BIGRAM_K)]
    pub bigram_k: usize,
    /// JSON object mapping doc_id to a list of {start, end, text}.
    #[arg(long)]
    pub ne_spans: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RougeArgs {
    #[arg(long)]
    pub candidate: PathBuf,
    #[arg(long)]
    pub reference: PathBuf,
    /// Limit to one variant; all are reported by default.
    #[arg(long)]
    pub variant: Option<RougeVariant>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    Coref,
    Nextsent,
}

#[derive(Debug, Args)]
pub struct SynthgenArgs {
    #[arg(long, required = true, num_args = 1.., value_name = "PATH")]
    pub summaries: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_per_doc: Option<usize>,
    /// Mention chain files or directory; heuristic chains otherwise.
    #[arg(long)]
    pub chains: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write generation settings and triple counts as JSON.
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum GridCommand {
    /// Estimate role transition probabilities from gold summaries.
    Train(GridTrainArgs),
    /// Score each sentence against its predecessor; writes predictions
    /// with `score = -log p` so higher means more likely erroneous.
    Score(GridScoreArgs),
}

#[derive(Debug, Args)]
pub struct GridTrainArgs {
    #[arg(long, required = true, num_args = 1.., value_name = "PATH")]
    pub summaries: Vec<PathBuf>,
    /// Role files or directory; heuristic roles otherwise.
    #[arg(long)]
    pub roles: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub smoothing: f64,
    #[arg(long, default_value = "train")]
    pub corpus_id: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridScoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, required = true, num_args = 1.., value_name = "PATH")]
    pub summaries: Vec<PathBuf>,
    #[arg(long)]
    pub roles: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prediction file (JSON lines).
    #[arg(long, conflicts_with_all = ["lm_scores", "human"])]
    pub preds: Option<PathBuf>,
    /// LM score file; converted to predictions with `score = -P(s|c)`.
    #[arg(long, conflicts_with = "human")]
    pub lm_scores: Option<PathBuf>,
    /// Score this annotator against the remaining annotators.
    #[arg(long, value_name = "ANNOTATOR")]
    pub human: Option<String>,
    /// Gold summaries and annotations (files, directories or bundles).
    #[arg(long, required = true, num_args = 1.., value_name = "PATH")]
    pub gold: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "binary,roc,fine,rap")]
    pub task: Vec<EvalTask>,
    /// `score >= threshold` means error; hard labels are used otherwise.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Select the threshold on these dev predictions instead.
    #[arg(long, requires = "dev_gold", conflicts_with = "threshold")]
    pub dev_preds: Option<PathBuf>,
    #[arg(long, num_args = 1.., value_name = "PATH")]
    pub dev_gold: Vec<PathBuf>,
    #[arg(long, default_value = "max_f1")]
    pub criterion: Criterion,
    #[arg(long, default_value_t = 0.7)]
    pub target_precision: f64,
    #[arg(long, default_value = "micro")]
    pub averaging: Averaging,
    /// Build gold from K randomly chosen annotators per summary.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "K")]
    pub segment_k: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "SNAC_DATA_DIR")]
    pub data_dir: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Validate(a) => validate(a),
        Command::Project(a) => project(a),
        Command::Agree(a) => agree(a),
        Command::Stats(a) => stats(a),
        Command::Corrupt(a) => corrupt(a),
        Command::Rouge(a) => rouge_cmd(a),
        Command::Synthgen(a) => synthgen(a),
        Command::Grid(GridCommand::Train(a)) => grid_train(a),
        Command::Grid(GridCommand::Score(a)) => grid_score(a),
        Command::Eval(a) => eval(a),
        Command::Serve(a) => server::serve_blocking(&a.data_dir, &a.host, a.port),
    }
}

fn validate(args: ValidateArgs) -> CliResult<()> {
    let corpus = Corpus::load(&args.paths, args.segment_k)?;
    let mut files = Vec::new();
    let mut ok = true;
    for set in &corpus.sets {
        let violations = match corpus.doc(&set.doc_id) {
            Some(doc) => set.validate(doc),
            None => vec![snac_core::Violation {
                rule: snac_core::Rule::DocumentMismatch,
                message: format!("no summary with doc_id {}", set.doc_id),
                annotation_index: None,
            }],
        };
        ok &= violations.is_empty();
        files.push(json!({
            "doc_id": set.doc_id,
            "annotator_id": set.annotator_ids.iter().next(),
            "annotations": set.annotations.len(),
            "violations": violations,
        }));
    }
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "ok": ok,
        "summaries": corpus.docs.len(),
        "annotation_files": files,
        "warnings": corpus.warnings,
    });
    emit_json(args.out.as_deref(), &report)?;
    if ok {
        Ok(())
    } else {
        Err(CliError::Reported)
    }
}

fn project(args: ProjectArgs) -> CliResult<()> {
    let corpus = args.input.load_valid()?;
    let mut docs = Vec::new();
    for (doc, sets) in sets_by_doc(&corpus.docs, &corpus.sets)? {
        let agg = aggregate_annotators(&sets, doc)?;
        let projected = project_labels(&agg.annotations, doc, args.level, args.scope)?;
        docs.push(json!({
            "doc_id": doc.doc_id(),
            "annotators": agg.annotator_ids,
            "labels": projected.labels,
            "flagged": projected.flagged(),
        }));
    }
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "level": args.level,
        "scope": args.scope,
        "summaries": docs,
    });
    emit_json(args.out.as_deref(), &report)
}

fn agree(args: AgreeArgs) -> CliResult<()> {
    let corpus = args.input.load_valid()?;
    let report = agreement_report::<f64>(&corpus.docs, &corpus.sets, args.level, &args.normalize)?;
    match args.format {
        Format::Json => emit_json(args.out.as_deref(), &report),
        Format::Table => emit(args.out.as_deref(), &report.to_table()),
    }
}

fn stats(args: StatsArgs) -> CliResult<()> {
    let corpus = args.input.load_valid()?;
    let mut aggregated = Vec::new();
    for (doc, sets) in sets_by_doc(&corpus.docs, &corpus.sets)? {
        aggregated.push(aggregate_annotators(&sets, doc)?);
    }
    let distribution = error_type_distribution::<f64>(&args.dataset_id, &aggregated, &corpus.docs)?;
    let observations = likert_observations(&corpus.sets);
    let correlations: Vec<Value> = likert_error_correlation::<f64>(&observations)
        .into_iter()
        .map(|(key, r)| match r {
            Ok(c) => json!({ "key": key, "r": c.r, "p": c.p, "n": c.n }),
            Err(e) => json!({ "key": key, "error": e.to_string() }),
        })
        .collect();
    let totals: BTreeMap<String, usize> = corpus
        .sets
        .iter()
        .flat_map(|s| error_counts(s).into_iter())
        .fold(BTreeMap::new(), |mut acc, (k, v)| {
            *acc.entry(k.to_string()).or_default() += v;
            acc
        });
    if let Some(path) = &args.csv {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(["category", "unique_errors", "unique_fraction", "token_fraction"])
            .map_err(|e| csv_error(path, e))?;
        for c in ErrorCategory::ALL {
            w.write_record([
                c.to_string(),
                distribution.unique_errors.get(&c).copied().unwrap_or(0).to_string(),
                distribution.unique_fraction.get(&c).copied().unwrap_or(0.0).to_string(),
                distribution.token_fraction.get(&c).copied().unwrap_or(0.0).to_string(),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "distribution": distribution,
        "annotation_counts": totals,
        "likert_observations": observations.len(),
        "likert_correlations": correlations,
    });
    emit_json(args.out.as_deref(), &report)
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, std::io::Error::other(e))
}

fn load_docs(paths: &[PathBuf]) -> CliResult<Vec<SummaryDocument>> {
    let corpus = Corpus::load(paths, None)?;
    corpus.require_docs()?;
    let mut docs = corpus.docs;
    docs.sort_by(|a, b| a.doc_id().cmp(b.doc_id()));
    Ok(docs)
}

fn corrupt(args: CorruptArgs) -> CliResult<()> {
    let recipe = CorruptionRecipe {
        kind: args.kind,
        seed: args.seed,
        repeat_fraction: args.fraction,
        bigram_k: args.bigram_k,
    };
    recipe.validate()?;
    let docs = load_docs(&args.summaries)?;
    let ne_file: Option<BTreeMap<String, Vec<NamedEntitySpan>>> = match &args.ne_spans {
        Some(p) => Some(serde_json::from_str(&read_text(p)?).map_err(|e| SnacError::Parse {
            source_name: p.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })?),
        None => None,
    };
    let bigrams = match args.kind {
        CorruptionKind::NeBigram => {
            let sentences: Vec<String> = docs.iter().flat_map(|d| d.sentence_texts()).collect();
            top_bigrams(&sentences, args.bigram_k)
        }
        _ => Vec::new(),
    };
    let mut out = Vec::new();
    for doc in &docs {
        let corrupted = match args.kind {
            CorruptionKind::Shuffle => corrupt_shuffle(doc, args.seed),
            CorruptionKind::Repetition => corrupt_repetition(doc, args.seed, args.fraction)?,
            CorruptionKind::NeBigram => {
                let spans = match &ne_file {
                    Some(map) => map.get(doc.doc_id()).cloned().unwrap_or_default(),
                    None => heuristic_ne_spans(doc),
                };
                corrupt_ne_bigram(&spans, &bigrams)
            }
        };
        out.push(json!({ "doc_id": doc.doc_id(), "corrupted": corrupted }));
    }
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "recipe": recipe,
        "documents": out,
    });
    emit_json(args.out.as_deref(), &report)
}

fn rouge_cmd(args: RougeArgs) -> CliResult<()> {
    let candidate = read_text(&args.candidate)?;
    let reference = read_text(&args.reference)?;
    let variants = match args.variant {
        Some(v) => vec![v],
        None => vec![RougeVariant::R1, RougeVariant::R2, RougeVariant::RL],
    };
    let scores: BTreeMap<String, snac_core::Rouge> = variants
        .into_iter()
        .map(|v| (format!("{v:?}"), rouge(&candidate, &reference, v)))
        .collect();
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "config": ROUGE_CONFIG,
        "scores": scores,
    });
    emit_json(args.out.as_deref(), &report)
}

fn load_chains(path: &Path) -> CliResult<BTreeMap<String, Vec<snac_core::MentionChain>>> {
    let mut out = BTreeMap::new();
    for file in json_files(path, "json")? {
        let parsed: ChainFile = serde_json::from_str(&read_text(&file)?).map_err(|e| SnacError::Parse {
            source_name: file.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let doc_id = parsed.doc_id.clone();
        if out.insert(doc_id.clone(), parsed.into_chains()?).is_some() {
            return Err(SnacError::DuplicateId(doc_id).into());
        }
    }
    Ok(out)
}

fn synthgen(args: SynthgenArgs) -> CliResult<()> {
    let docs = load_docs(&args.summaries)?;
    let chains = args.chains.as_deref().map(load_chains).transpose()?;
    let mut triples = Vec::new();
    for doc in &docs {
        match args.method {
            Method::Coref => {
                let doc_chains = match &chains {
                    Some(map) => map.get(doc.doc_id()).cloned().unwrap_or_default(),
                    None => heuristic_mention_chains(doc),
                };
                let mut t = coref_triples(doc, &doc_chains);
                if let Some(m) = args.max_per_doc {
                    t.truncate(2 * m);
                }
                triples.extend(t);
            }
            Method::Nextsent => triples.extend(next_sentence_triples(doc, args.seed, args.max_per_doc)),
        }
    }
    if let Some(meta) = &args.meta {
        let negatives = triples.iter().filter(|t| t.has_error).count();
        let value = json!({
            "schema_version": SCHEMA_VERSION,
            "method": format!("{:?}", args.method).to_lowercase(),
            "seed": args.seed,
            "max_per_doc": args.max_per_doc,
            "documents": docs.len(),
            "triples": triples.len(),
            "negatives": negatives,
            "positives": triples.len() - negatives,
        });
        emit_json(Some(meta.as_path()), &value)?;
    }
    emit(args.out.as_deref(), &to_jsonl(&triples)?)
}

fn load_roles(path: &Path) -> CliResult<BTreeMap<String, RoleFile>> {
    let mut out = BTreeMap::new();
    for file in json_files(path, "json")? {
        let parsed = RoleFile::parse(&file.display().to_string(), &read_text(&file)?)?;
        let doc_id = parsed.doc_id.clone();
        if out.insert(doc_id.clone(), parsed).is_some() {
            return Err(SnacError::DuplicateId(doc_id).into());
        }
    }
    Ok(out)
}

fn provider_for<'a>(
    doc: &SummaryDocument,
    files: &'a Option<BTreeMap<String, RoleFile>>,
    heuristic: &'a HeuristicRoles,
) -> CliResult<&'a dyn RoleProvider> {
    match files {
        Some(map) => map
            .get(doc.doc_id())
            .map(|f| f as &dyn RoleProvider)
            .ok_or_else(|| SnacError::InvalidArgument(format!("no role file for {}", doc.doc_id())).into()),
        None => Ok(heuristic),
    }
}

fn grid_train(args: GridTrainArgs) -> CliResult<()> {
    let docs = load_docs(&args.summaries)?;
    let files = args.roles.as_deref().map(load_roles).transpose()?;
    let heuristic = HeuristicRoles::default();
    let grids = docs
        .iter()
        .map(|d| Ok(build_entity_grid(d, provider_for(d, &files, &heuristic)?)?))
        .collect::<CliResult<Vec<_>>>()?;
    let model = estimate_transitions::<f64>(&grids, args.smoothing, &args.corpus_id)?;
    emit(args.out.as_deref(), &model.to_json()?)
}

fn grid_score(args: GridScoreArgs) -> CliResult<()> {
    let model = Transitions::from_json(&read_text(&args.model)?)?;
    let docs = load_docs(&args.summaries)?;
    let files = args.roles.as_deref().map(load_roles).transpose()?;
    let heuristic = HeuristicRoles::default();
    let mut preds = Vec::new();
    for doc in &docs {
        let roles = provider_for(doc, &files, &heuristic)?.roles(doc)?;
        for i in 0..roles.len() {
            let score = match i {
                0 => 0.0,
                _ => -entity_grid_score(&roles[i - 1], &roles[i], &model).score,
            };
            preds.push(Prediction {
                doc_id: doc.doc_id().to_string(),
                sentence_index: i,
                score: Some(score),
                has_error: None,
                fine: None,
            });
        }
    }
    emit(args.out.as_deref(), &predictions_to_jsonl(&preds)?)
}

fn read_predictions(path: &Path) -> CliResult<Vec<Prediction>> {
    Ok(parse_predictions(&path.display().to_string(), &read_text(path)?)?)
}

fn lm_predictions(path: &Path, docs: &[SummaryDocument]) -> CliResult<Vec<Prediction>> {
    let scores = lm_conditional_scores::<f64>(&path.display().to_string(), &read_text(path)?)?;
    let required: BTreeSet<(String, usize)> = docs
        .iter()
        .flat_map(|d| (0..d.sentence_count()).map(move |i| (d.doc_id().to_string(), i)))
        .collect();
    check_complete(&scores, &required)?;
    Ok(scores
        .into_iter()
        .map(|((doc_id, sentence_index), p)| Prediction {
            doc_id,
            sentence_index,
            score: Some(-p),
            has_error: None,
            fine: None,
        })
        .collect())
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    #[serde(flatten)]
    report: &'a snac_core::report::EvalReport<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold_selection: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    human: Option<&'a str>,
}

fn eval(args: EvalArgs) -> CliResult<()> {
    let corpus = Corpus::load(&args.gold, args.segment_k)?;
    corpus.require_docs()?;
    corpus.ensure_valid()?;
    let subset = args.k.map(|k| (k, args.seed));

    let (preds, gold) = match &args.human {
        Some(id) => human_eval_inputs(&corpus, id, subset)?,
        None => {
            let gold = build_gold(&corpus.docs, &corpus.sets, subset)?;
            let preds = match (&args.preds, &args.lm_scores) {
                (Some(p), None) => read_predictions(p)?,
                (None, Some(p)) => lm_predictions(p, &corpus.docs)?,
                _ => return Err(CliError::Usage("pass one of --preds, --lm-scores or --human".into())),
            };
            (preds, gold)
        }
    };

    let mut threshold = args.threshold;
    let mut selection = None;
    if let Some(dev_path) = &args.dev_preds {
        let dev = Corpus::load(&args.dev_gold, args.segment_k)?;
        dev.require_docs()?;
        dev.ensure_valid()?;
        let dev_gold = build_gold(&dev.docs, &dev.sets, None)?;
        let dev_preds = read_predictions(dev_path)?;
        let by_key: BTreeMap<(String, usize), f64> = dev_preds
            .iter()
            .filter_map(|p| p.score.map(|s| (p.key(), s)))
            .collect();
        let missing: Vec<String> = dev_gold
            .iter()
            .filter(|g| !by_key.contains_key(&g.key()))
            .map(|g| snac_core::lm::key_label(&g.key()))
            .collect();
        if !missing.is_empty() {
            return Err(SnacError::MissingPredictions(missing).into());
        }
        // coherence scores: lower means more likely erroneous
        let scores: Vec<f64> = dev_gold.iter().map(|g| -by_key[&g.key()]).collect();
        let labels: Vec<bool> = dev_gold.iter().map(|g| g.has_error).collect();
        let config = select_threshold(&scores, &labels, args.criterion, &dev_path.display().to_string())?;
        threshold = Some(-config.value);
        selection = Some(serde_json::to_value(&config).map_err(SnacError::from)?);
    }

    let config = EvalConfig {
        tasks: args.task.clone(),
        threshold,
        target_precision: args.target_precision,
        averaging: args.averaging,
        categories: ErrorCategory::ALL.to_vec(),
        annotator_subset: args.k,
        seed: args.seed,
    };
    let report = eval_report(&preds, &gold, &corpus.docs, config)?;
    emit_json(
        args.out.as_deref(),
        &EvalOutput {
            report: &report,
            threshold_selection: selection,
            human: args.human.as_deref(),
        },
    )
}

fn human_eval_inputs(
    corpus: &Corpus,
    annotator: &str,
    subset: Option<(usize, u64)>,
) -> CliResult<(Vec<Prediction>, Vec<snac_core::GoldSentence>)> {
    let mut preds = Vec::new();
    let mut gold = Vec::new();
    for (doc, sets) in sets_by_doc(&corpus.docs, &corpus.sets)? {
        let (mine, others): (Vec<AnnotationSet>, Vec<AnnotationSet>) =
            sets.into_iter().partition(|s| s.annotator_ids.contains(annotator));
        let Some(mine) = mine.into_iter().next() else {
            continue;
        };
        let agg = match subset {
            Some((k, seed)) => snac_core::eval::reconstruct_eval_subset(std::slice::from_ref(doc), &others, k, seed)?
                .remove(0),
            None => aggregate_annotators(&others, doc)?,
        };
        preds.extend(human_as_predictor::<f64>(&mine, &agg, doc)?);
        gold.extend(gold_sentences(&agg, doc));
    }
    if gold.is_empty() {
        return Err(SnacError::InvalidArgument(format!("annotator {annotator} has no annotation files")).into());
    }
    Ok((preds, gold))
}
