//! Entity grids, role-transition models and transition scoring.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::document::{CharRange, SummaryDocument};
use crate::error::{Result, SnacError};
use crate::mentions::capitalized_mentions;
use crate::scalar::Scalar;
use crate::tokenize::char_slice;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    S,
    O,
    X,
    #[serde(rename = "-")]
    Absent,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::S, Role::O, Role::X, Role::Absent];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::S => "S",
            Role::O => "O",
            Role::X => "X",
            Role::Absent => "-",
        }
    }

    /// S outranks O outranks X when an entity is mentioned twice.
    fn rank(self) -> u8 {
        match self {
            Role::S => 3,
            Role::O => 2,
            Role::X => 1,
            Role::Absent => 0,
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Entity key -> role for one sentence. Unlisted entities are absent.
pub type SentenceRoles = BTreeMap<String, Role>;

fn merge_role(roles: &mut SentenceRoles, key: String, role: Role) {
    let slot = roles.entry(key).or_insert(role);
    if role.rank() > slot.rank() {
        *slot = role;
    }
}

pub trait RoleProvider {
    fn roles(&self, doc: &SummaryDocument) -> Result<Vec<SentenceRoles>>;
}

/// Capitalized mentions keyed by lowercased head; S before the first
/// known verb of the sentence, O after it, X if the sentence has none.
#[derive(Debug, Clone)]
pub struct HeuristicRoles {
    verbs: BTreeSet<String>,
}

const VERBS: &str = include_str!("../data/verbs.txt");

impl Default for HeuristicRoles {
    fn default() -> Self {
        Self::with_verbs(
            VERBS
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }
}

impl HeuristicRoles {
    pub fn with_verbs<I, S>(verbs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            verbs: verbs.into_iter().map(|v| v.as_ref().to_lowercase()).collect(),
        }
    }

    /// Roles for a standalone sentence.
    pub fn sentence_roles(&self, sentence: &str) -> SentenceRoles {
        let len = sentence.chars().count();
        let ranges = if sentence.trim().is_empty() {
            vec![]
        } else {
            let lead = sentence.chars().take_while(|c| c.is_whitespace()).count();
            let trail = sentence.chars().rev().take_while(|c| c.is_whitespace()).count();
            vec![CharRange::new(lead, len - trail)]
        };
        SummaryDocument::new("", "", sentence, ranges, vec![], vec![])
            .ok()
            .and_then(|d| self.roles(&d).ok())
            .and_then(|mut r| r.pop())
            .unwrap_or_default()
    }
}

impl RoleProvider for HeuristicRoles {
    fn roles(&self, doc: &SummaryDocument) -> Result<Vec<SentenceRoles>> {
        let first_verb: Vec<Option<usize>> = (0..doc.sentence_count())
            .map(|s| {
                doc.sentence_tokens(s)
                    .iter()
                    .find(|t| {
                        self.verbs
                            .contains(&char_slice(doc.text(), t.start, t.end).to_lowercase())
                    })
                    .map(|t| t.start)
            })
            .collect();
        let mut out = vec![SentenceRoles::new(); doc.sentence_count()];
        for m in capitalized_mentions(doc) {
            let role = match first_verb[m.sentence] {
                None => Role::X,
                Some(v) if m.start < v => Role::S,
                Some(_) => Role::O,
            };
            merge_role(&mut out[m.sentence], m.head.to_lowercase(), role);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRole {
    pub key: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceEntry {
    pub entities: Vec<EntityRole>,
}

/// External role file: `{doc_id, sentences: [{entities: [{key, role}]}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleFile {
    pub doc_id: String,
    pub sentences: Vec<SentenceEntry>,
}

impl RoleFile {
    pub fn parse(source_name: &str, json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| SnacError::Parse {
            source_name: source_name.to_string(),
            line: e.line(),
            message: e.to_string(),
        })
    }
}

impl RoleProvider for RoleFile {
    fn roles(&self, doc: &SummaryDocument) -> Result<Vec<SentenceRoles>> {
        if self.doc_id != doc.doc_id() || self.sentences.len() != doc.sentence_count() {
            return Err(SnacError::InvalidArgument(format!(
                "role file for {} ({} sentences) does not match {} ({} sentences)",
                self.doc_id,
                self.sentences.len(),
                doc.doc_id(),
                doc.sentence_count()
            )));
        }
        Ok(self
            .sentences
            .iter()
            .map(|s| {
                let mut roles = SentenceRoles::new();
                for e in s.entities.iter().filter(|e| e.role != Role::Absent) {
                    merge_role(&mut roles, e.key.to_lowercase(), e.role);
                }
                roles
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityGrid {
    pub doc_id: String,
    pub entities: Vec<String>,
    /// `roles[entity][sentence]`
    pub roles: Vec<Vec<Role>>,
}

impl EntityGrid {
    pub fn sentence_count(&self) -> usize {
        self.roles.first().map_or(0, Vec::len)
    }

    pub fn role(&self, entity: &str, sentence: usize) -> Role {
        self.entities
            .iter()
            .position(|e| e == entity)
            .map_or(Role::Absent, |i| self.roles[i][sentence])
    }
}

pub fn build_entity_grid(doc: &SummaryDocument, provider: &dyn RoleProvider) -> Result<EntityGrid> {
    let per_sentence = provider.roles(doc)?;
    let entities: Vec<String> = per_sentence
        .iter()
        .flat_map(|r| r.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let roles = entities
        .iter()
        .map(|e| {
            per_sentence
                .iter()
                .map(|r| r.get(e).copied().unwrap_or(Role::Absent))
                .collect()
        })
        .collect();
    Ok(EntityGrid {
        doc_id: doc.doc_id().to_string(),
        entities,
        roles,
    })
}

/// `p(next role | previous role)` estimated over adjacent sentence pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel<T> {
    pub counts: [[u64; 4]; 4],
    pub smoothing: T,
    pub probabilities: [[T; 4]; 4],
    pub corpus_id: String,
}

impl<T: Scalar> TransitionModel<T> {
    pub fn from_counts(counts: [[u64; 4]; 4], smoothing: T, corpus_id: impl Into<String>) -> Result<Self> {
        if smoothing.is_nan() || smoothing < T::zero() || !smoothing.is_finite() {
            return Err(SnacError::InvalidArgument(format!(
                "smoothing must be finite and >= 0, got {smoothing}"
            )));
        }
        let mut probabilities = [[T::zero(); 4]; 4];
        for (row, probs) in counts.iter().zip(probabilities.iter_mut()) {
            let total: u64 = row.iter().sum();
            let denom = T::lit(total as f64) + smoothing * T::lit(4.0);
            for (c, p) in row.iter().zip(probs.iter_mut()) {
                *p = if denom > T::zero() {
                    (T::lit(*c as f64) + smoothing) / denom
                } else {
                    // unseen source role without smoothing: uniform
                    T::lit(0.25)
                };
            }
        }
        Ok(Self {
            counts,
            smoothing,
            probabilities,
            corpus_id: corpus_id.into(),
        })
    }

    pub fn prob(&self, from: Role, to: Role) -> T {
        self.probabilities[from.index()][to.index()]
    }

    /// Recomputes probabilities from the stored counts.
    pub fn resmooth(&self, smoothing: T) -> Result<Self> {
        Self::from_counts(self.counts, smoothing, self.corpus_id.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        let table = |f: &dyn Fn(usize, usize) -> serde_json::Value| {
            Role::ALL
                .iter()
                .map(|a| {
                    let row: serde_json::Map<String, serde_json::Value> = Role::ALL
                        .iter()
                        .map(|b| (b.to_string(), f(a.index(), b.index())))
                        .collect();
                    (a.to_string(), serde_json::Value::Object(row))
                })
                .collect::<serde_json::Map<_, _>>()
        };
        let value = serde_json::json!({
            "schema_version": crate::document::SCHEMA_VERSION,
            "corpus_id": self.corpus_id,
            "smoothing": self.smoothing,
            "entity_selection": "all",
            "counts": table(&|a, b| self.counts[a][b].into()),
            "probabilities": table(&|a, b| serde_json::to_value(self.probabilities[a][b]).unwrap_or_default()),
        });
        Ok(serde_json::to_string_pretty(&value)?)
    }

    /// Restores a model from its counts and smoothing; stored probabilities
    /// are recomputed.
    pub fn from_json(json: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Wire<T> {
            corpus_id: String,
            smoothing: T,
            counts: BTreeMap<String, BTreeMap<String, u64>>,
        }
        let wire: Wire<T> = serde_json::from_str(json)?;
        let mut counts = [[0u64; 4]; 4];
        for (from, row) in &wire.counts {
            let a = Role::parse(from)
                .ok_or_else(|| SnacError::InvalidArgument(format!("unknown role {from:?}")))?;
            for (to, &c) in row {
                let b = Role::parse(to)
                    .ok_or_else(|| SnacError::InvalidArgument(format!("unknown role {to:?}")))?;
                counts[a.index()][b.index()] = c;
            }
        }
        Self::from_counts(counts, wire.smoothing, wire.corpus_id)
    }
}

pub fn transition_counts(grids: &[EntityGrid]) -> [[u64; 4]; 4] {
    let mut counts = [[0u64; 4]; 4];
    for g in grids {
        for row in &g.roles {
            for w in row.windows(2) {
                counts[w[0].index()][w[1].index()] += 1;
            }
        }
    }
    counts
}

pub fn estimate_transitions<T: Scalar>(
    grids: &[EntityGrid],
    smoothing: T,
    corpus_id: &str,
) -> Result<TransitionModel<T>> {
    if !grids.iter().any(|g| g.sentence_count() >= 2) {
        return Err(SnacError::InvalidArgument(
            "need at least one grid with two or more sentences".into(),
        ));
    }
    TransitionModel::from_counts(transition_counts(grids), smoothing, corpus_id)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct GridScore<T> {
    pub score: T,
    pub entities: usize,
    /// No entity in either sentence; the score carries no information.
    pub uninformative: bool,
}

/// Sum over entities of either sentence of `ln p(role in next | role in prev)`.
pub fn entity_grid_score<T: Scalar>(
    prev: &SentenceRoles,
    next: &SentenceRoles,
    model: &TransitionModel<T>,
) -> GridScore<T> {
    let entities: BTreeSet<&String> = prev.keys().chain(next.keys()).collect();
    let role = |r: &SentenceRoles, e: &String| r.get(e).copied().unwrap_or(Role::Absent);
    let score = entities
        .iter()
        .map(|e| model.prob(role(prev, e), role(next, e)).ln())
        .fold(T::zero(), |a, b| a + b);
    GridScore {
        score,
        entities: entities.len(),
        uninformative: entities.is_empty(),
    }
}

/// Text-level convenience: roles come from `provider` applied to each
/// sentence on its own.
pub fn entity_grid_score_text<T: Scalar>(
    context_last_sentence: &str,
    sentence: &str,
    model: &TransitionModel<T>,
    provider: &HeuristicRoles,
) -> GridScore<T> {
    entity_grid_score(
        &provider.sentence_roles(context_last_sentence),
        &provider.sentence_roles(sentence),
        model,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(rows: &[&[Role]]) -> EntityGrid {
        EntityGrid {
            doc_id: "g".into(),
            entities: (0..rows.len()).map(|i| format!("e{i}")).collect(),
            roles: rows.iter().map(|r| r.to_vec()).collect(),
        }
    }

    #[test]
    fn subject_then_object() {
        let d = SummaryDocument::from_raw_text(
            "d",
            "s",
            "Gabriel meets Bathsheba. Troy visits Gabriel. Bathsheba and Troy Smith.",
        )
        .unwrap();
        let g = build_entity_grid(&d, &HeuristicRoles::default()).unwrap();
        assert_eq!(g.entities, vec!["bathsheba", "gabriel", "troy"]);
        use Role::*;
        assert_eq!(g.roles[0], vec![O, Absent, X]);
        assert_eq!(g.roles[1], vec![S, O, Absent]);
        assert_eq!(g.roles[2], vec![Absent, S, X]);
    }

    #[test]
    fn role_file_provider() {
        let json = r#"{"doc_id":"d","sentences":[
            {"entities":[{"key":"Ann","role":"S"}]},
            {"entities":[{"key":"ann","role":"O"},{"key":"bob","role":"X"}]}]}"#;
        let file = RoleFile::parse("roles.json", json).unwrap();
        let d = SummaryDocument::from_raw_text("d", "s", "One here. Two there.").unwrap();
        let g = build_entity_grid(&d, &file).unwrap();
        assert_eq!(g.role("ann", 0), Role::S);
        assert_eq!(g.role("ann", 1), Role::O);
        assert_eq!(g.role("bob", 0), Role::Absent);

        let err = RoleFile::parse("roles.json", "{\n\"doc_id\": \"d\",\n\"sentences\": [x]}").unwrap_err();
        assert!(matches!(err, SnacError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn unsmoothed_counts() {
        use Role::*;
        let m = estimate_transitions::<f64>(&[grid(&[&[S, S]])], 0.0, "c").unwrap();
        assert_eq!(m.prob(S, S), 1.0);
        let m = estimate_transitions::<f64>(&[grid(&[&[S, O], &[S, X]])], 0.0, "c").unwrap();
        assert_eq!(m.prob(S, O), 0.5);
        assert_eq!(m.prob(S, X), 0.5);
        assert_eq!(m.prob(S, S), 0.0);
    }

    #[test]
    fn add_one_smoothing() {
        use Role::*;
        let m = estimate_transitions::<f64>(&[grid(&[&[S, O]])], 1.0, "c").unwrap();
        assert_relative_eq!(m.prob(S, O), 2.0 / 5.0);
        assert_relative_eq!(m.prob(S, S), 1.0 / 5.0);
        assert_relative_eq!(m.prob(O, S), 0.25);
        assert!(estimate_transitions::<f64>(&[grid(&[&[S]])], 1.0, "c").is_err());
        assert!(estimate_transitions::<f64>(&[grid(&[&[S, S]])], -1.0, "c").is_err());
    }

    #[test]
    fn single_entity_score() {
        use Role::*;
        // p(S|S) = 0.5
        let m = estimate_transitions::<f64>(&[grid(&[&[S, S], &[S, O]])], 0.0, "c").unwrap();
        assert_eq!(m.prob(S, S), 0.5);
        let prev = SentenceRoles::from([("ann".to_string(), S)]);
        let s = entity_grid_score(&prev, &prev, &m);
        assert_relative_eq!(s.score, 0.5f64.ln(), epsilon = 1e-12);
        assert!(!s.uninformative);

        let empty = entity_grid_score(&SentenceRoles::new(), &SentenceRoles::new(), &m);
        assert_eq!(empty.score, 0.0);
        assert!(empty.uninformative);
    }

    #[test]
    fn additive_over_entities() {
        use Role::*;
        let m = estimate_transitions::<f64>(&[grid(&[&[S, O, X, Absent, S]])], 1.0, "c").unwrap();
        let prev = SentenceRoles::from([("a".to_string(), S), ("b".to_string(), O)]);
        let next = SentenceRoles::from([("a".to_string(), O)]);
        let s = entity_grid_score(&prev, &next, &m);
        assert_relative_eq!(s.score, m.prob(S, O).ln() + m.prob(O, Absent).ln(), epsilon = 1e-12);
        assert_eq!(s.entities, 2);
    }

    #[test]
    fn json_keeps_counts() {
        use Role::*;
        let m = estimate_transitions::<f64>(&[grid(&[&[S, O, S], &[X, Absent, X]])], 1.0, "c").unwrap();
        let back = TransitionModel::<f64>::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let re = back.resmooth(0.0).unwrap();
        assert_eq!(re.prob(S, O), 1.0);
    }

    #[test]
    fn text_scoring_uses_heuristic() {
        use Role::*;
        let m = estimate_transitions::<f64>(&[grid(&[&[S, O], &[S, S]])], 0.0, "c").unwrap();
        let h = HeuristicRoles::default();
        let s = entity_grid_score_text("Gabriel meets her.", "Troy visits Gabriel.", &m, &h);
        // gabriel S -> O, troy - -> S
        assert_relative_eq!(s.score, m.prob(S, O).ln() + m.prob(Absent, S).ln(), epsilon = 1e-12);
    }
}
