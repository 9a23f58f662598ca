//! The seven error categories and their two groups.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SnacError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrorCategory {
    /// New character introduced without context.
    CharE,
    /// Reference to an event or object that was never introduced.
    RefE,
    /// Abrupt scene transition.
    SceneE,
    /// Inconsistency with an earlier span.
    InconE,
    /// Repetition of an earlier span.
    RepE,
    /// Ungrammatical or nonsensical text.
    GramE,
    /// Unclear coreference.
    CorefE,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorGroup {
    Coherence,
    Language,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 7] = [
        ErrorCategory::CharE,
        ErrorCategory::RefE,
        ErrorCategory::SceneE,
        ErrorCategory::InconE,
        ErrorCategory::RepE,
        ErrorCategory::GramE,
        ErrorCategory::CorefE,
    ];

    pub fn group(self) -> ErrorGroup {
        match self {
            ErrorCategory::CharE
            | ErrorCategory::RefE
            | ErrorCategory::SceneE
            | ErrorCategory::InconE => ErrorGroup::Coherence,
            ErrorCategory::RepE | ErrorCategory::GramE | ErrorCategory::CorefE => {
                ErrorGroup::Language
            }
        }
    }

    pub fn is_coherence(self) -> bool {
        self.group() == ErrorGroup::Coherence
    }

    /// InconE and RepE point back at the span they contradict or repeat.
    pub fn requires_antecedent(self) -> bool {
        matches!(self, ErrorCategory::InconE | ErrorCategory::RepE)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::CharE => "CharE",
            ErrorCategory::RefE => "RefE",
            ErrorCategory::SceneE => "SceneE",
            ErrorCategory::InconE => "InconE",
            ErrorCategory::RepE => "RepE",
            ErrorCategory::GramE => "GramE",
            ErrorCategory::CorefE => "CorefE",
        }
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorCategory {
    type Err = SnacError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ErrorCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| SnacError::InvalidArgument(format!("unknown error category {s:?}")))
    }
}

impl ErrorGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorGroup::Coherence => "coherence",
            ErrorGroup::Language => "language",
        }
    }

    pub fn categories(self) -> impl Iterator<Item = ErrorCategory> {
        ErrorCategory::ALL.into_iter().filter(move |c| c.group() == self)
    }
}

impl fmt::Display for ErrorGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which categories a projection or count considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Coherence,
    Language,
    All,
}

impl Scope {
    pub fn matches(self, category: ErrorCategory) -> bool {
        match self {
            Scope::Coherence => category.group() == ErrorGroup::Coherence,
            Scope::Language => category.group() == ErrorGroup::Language,
            Scope::All => true,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Coherence => "coherence",
            Scope::Language => "language",
            Scope::All => "all",
        }
    }
}

impl FromStr for Scope {
    type Err = SnacError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coherence" => Ok(Scope::Coherence),
            "language" => Ok(Scope::Language),
            "all" => Ok(Scope::All),
            other => Err(SnacError::InvalidArgument(format!("unknown scope {other:?}"))),
        }
    }
}

/// A single category, a whole group, or everything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CategorySelector {
    Category(ErrorCategory),
    Group(ErrorGroup),
    All,
}

impl CategorySelector {
    pub fn matches(self, category: ErrorCategory) -> bool {
        match self {
            CategorySelector::Category(c) => c == category,
            CategorySelector::Group(g) => category.group() == g,
            CategorySelector::All => true,
        }
    }

    pub fn label(self) -> String {
        match self {
            CategorySelector::Category(c) => c.to_string(),
            CategorySelector::Group(g) => g.to_string(),
            CategorySelector::All => "all".to_string(),
        }
    }
}

impl From<ErrorCategory> for CategorySelector {
    fn from(c: ErrorCategory) -> Self {
        CategorySelector::Category(c)
    }
}

impl From<Scope> for CategorySelector {
    fn from(s: Scope) -> Self {
        match s {
            Scope::Coherence => CategorySelector::Group(ErrorGroup::Coherence),
            Scope::Language => CategorySelector::Group(ErrorGroup::Language),
            Scope::All => CategorySelector::All,
        }
    }
}

impl FromStr for CategorySelector {
    type Err = SnacError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coherence" => Ok(CategorySelector::Group(ErrorGroup::Coherence)),
            "language" => Ok(CategorySelector::Group(ErrorGroup::Language)),
            "all" => Ok(CategorySelector::All),
            other => other.parse().map(CategorySelector::Category),
        }
    }
}
