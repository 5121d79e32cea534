//! Typed data model: criteria, field values, study records and their
//! bibliographic metadata.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Literal used for not-applicable cells in every tabular format.
pub const NA_LITERAL: &str = "N/A";

/// Separator for multi-valued cells.
pub const MULTI_SEPARATOR: char = ';';

/// Name of the criterion that carries the publication year.
pub const YEAR_CRITERION: &str = "Year";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriterionKind {
    Binary,
    Ordinal,
    Categorical,
    Numeric,
    Text,
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CriterionKind::Binary => "binary",
            CriterionKind::Ordinal => "ordinal",
            CriterionKind::Categorical => "categorical",
            CriterionKind::Numeric => "numeric",
            CriterionKind::Text => "text",
        })
    }
}

fn default_true() -> bool {
    true
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// One column of the corpus: how it is typed, which labels it admits and
/// whether it takes part in record similarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Criterion {
    pub name: String,
    pub kind: CriterionKind,
    #[serde(default, skip_serializing_if = "is_false")]
    pub multi_valued: bool,
    /// Ordered answer options, excluding the N/A literal. For categorical
    /// criteria an empty list means an open vocabulary.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub answer_options: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ordinal_values: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub na_allowed: bool,
    #[serde(default = "default_true")]
    pub similarity_participates: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub log_transform: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub display_default: bool,
}

impl Criterion {
    pub fn new(name: impl Into<String>, kind: CriterionKind) -> Self {
        Criterion {
            name: name.into(),
            kind,
            multi_valued: false,
            answer_options: Vec::new(),
            ordinal_values: BTreeMap::new(),
            na_allowed: false,
            similarity_participates: true,
            log_transform: false,
            display_default: false,
        }
    }

    /// Whether label membership is checked against `answer_options`.
    pub fn has_closed_vocabulary(&self) -> bool {
        match self.kind {
            CriterionKind::Ordinal => true,
            CriterionKind::Categorical => !self.answer_options.is_empty(),
            _ => false,
        }
    }

    /// Answer options as shown to users, with the N/A literal appended when
    /// the criterion admits it.
    pub fn answer_options_with_na(&self) -> Vec<String> {
        let mut out = self.answer_options.clone();
        if self.na_allowed {
            out.push(NA_LITERAL.to_string());
        }
        out
    }

    /// Text criteria never enter the record-similarity sum.
    pub fn enters_similarity(&self) -> bool {
        self.similarity_participates && self.kind != CriterionKind::Text
    }
}

/// A single cell of a study record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum FieldValue {
    Binary(bool),
    Ordinal(String),
    Categories(BTreeSet<String>),
    Number(f64),
    Text(String),
    NotApplicable,
}

impl FieldValue {
    pub fn categories<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        FieldValue::Categories(labels.into_iter().map(Into::into).collect())
    }

    pub fn is_na(&self) -> bool {
        matches!(self, FieldValue::NotApplicable)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FieldValue::Binary(_) => "binary",
            FieldValue::Ordinal(_) => "ordinal",
            FieldValue::Categories(_) => "categories",
            FieldValue::Number(_) => "number",
            FieldValue::Text(_) => "text",
            FieldValue::NotApplicable => "not-applicable",
        }
    }

    /// Labels this value owns for faceting; empty for N/A.
    pub fn labels(&self) -> Vec<String> {
        match self {
            FieldValue::Binary(b) => vec![binary_label(*b).to_string()],
            FieldValue::Ordinal(l) => vec![l.clone()],
            FieldValue::Categories(set) => set.iter().cloned().collect(),
            FieldValue::Number(n) => vec![format_number(*n)],
            FieldValue::Text(t) => vec![t.clone()],
            FieldValue::NotApplicable => Vec::new(),
        }
    }

    /// Serialized table cell.
    pub fn to_cell(&self) -> String {
        match self {
            FieldValue::Binary(b) => binary_label(*b).to_string(),
            FieldValue::Ordinal(l) => l.clone(),
            FieldValue::Categories(set) => {
                let parts: Vec<&str> = set.iter().map(String::as_str).collect();
                parts.join(&MULTI_SEPARATOR.to_string())
            }
            FieldValue::Number(n) => format_number(*n),
            FieldValue::Text(t) => t.clone(),
            FieldValue::NotApplicable => NA_LITERAL.to_string(),
        }
    }
}

pub fn binary_label(b: bool) -> &'static str {
    if b {
        "Yes"
    } else {
        "No"
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_number(n: f64) -> String {
    format!("{n}")
}

/// Split a multi-valued cell on the separator, trimming each piece and
/// dropping empty ones.
pub fn split_multi(cell: &str) -> impl Iterator<Item = &str> {
    cell.split(MULTI_SEPARATOR).map(str::trim).filter(|s| !s.is_empty())
}

/// A parsed bibliography entry. Field names are lowercased; values have
/// their outer delimiters removed but are otherwise verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BibEntry {
    pub entry_type: String,
    pub key: String,
    pub fields: BTreeMap<String, String>,
}

impl BibEntry {
    pub fn field(&self, name: &str) -> Option<&str> {
        self.fields.get(name).map(String::as_str)
    }

    pub fn title(&self) -> Option<&str> {
        self.field("title")
    }

    pub fn year(&self) -> Option<i32> {
        let raw = self.field("year")?;
        let digits: String = raw.chars().filter(char::is_ascii_digit).collect();
        digits.parse().ok()
    }

    pub fn venue(&self) -> Option<&str> {
        self.field("journal").or_else(|| self.field("booktitle")).or_else(|| self.field("publisher"))
    }

    pub fn authors(&self) -> Vec<String> {
        self.field("author")
            .map(|a| a.split(" and ").map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
            .unwrap_or_default()
    }

    /// Lowercased family name of the first author. Handles both
    /// "Family, Given" and "Given Family" forms.
    pub fn first_author_family(&self) -> Option<String> {
        let first = self.authors().into_iter().next()?;
        family_name(&first)
    }

    /// An external link for the entry: DOI resolver first, then url.
    pub fn link(&self) -> Option<String> {
        if let Some(doi) = self.field("doi") {
            let doi = doi.trim();
            let doi = doi
                .strip_prefix("https://doi.org/")
                .or_else(|| doi.strip_prefix("http://doi.org/"))
                .unwrap_or(doi);
            return Some(format!("https://doi.org/{doi}"));
        }
        self.field("url").map(str::to_string)
    }
}

pub fn family_name(name: &str) -> Option<String> {
    let cleaned: String = name.chars().filter(|c| *c != '{' && *c != '}').collect();
    let family = match cleaned.split_once(',') {
        Some((family, _)) => family.trim().to_string(),
        None => cleaned.split_whitespace().last()?.to_string(),
    };
    if family.is_empty() {
        None
    } else {
        Some(family.to_lowercase())
    }
}

/// One annotated study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub study_id: String,
    pub year: i32,
    pub values: BTreeMap<String, FieldValue>,
    #[serde(default)]
    pub authors: Vec<String>,
    #[serde(default, rename = "abstract")]
    pub abstract_text: String,
    #[serde(default)]
    pub bib_entry: Option<BibEntry>,
}

impl StudyRecord {
    pub fn value(&self, criterion: &str) -> Option<&FieldValue> {
        self.values.get(criterion)
    }
}
