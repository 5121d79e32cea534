//! Record-against-schema validation. Violations are data, never errors.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Criterion, CriterionKind, FieldValue, StudyRecord, YEAR_CRITERION};
use crate::schema::Schema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    MissingCriterion,
    UnknownCriterion,
    KindMismatch,
    UnknownOption,
    NotApplicableForbidden,
    MultipleValues,
    EmptyCell,
    NonFiniteNumber,
    YearMismatch,
    EmptyStudyId,
    DuplicateStudyId,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::MissingCriterion => "missing criterion",
            Rule::UnknownCriterion => "unknown criterion",
            Rule::KindMismatch => "kind mismatch",
            Rule::UnknownOption => "unknown option",
            Rule::NotApplicableForbidden => "N/A not allowed",
            Rule::MultipleValues => "multiple values on single-valued criterion",
            Rule::EmptyCell => "empty cell",
            Rule::NonFiniteNumber => "non-finite number",
            Rule::YearMismatch => "year mismatch",
            Rule::EmptyStudyId => "empty study id",
            Rule::DuplicateStudyId => "duplicate study id",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub study_id: String,
    pub criterion: Option<String>,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.criterion {
            Some(c) => write!(f, "{} / {}: {}", self.study_id, c, self.rule)?,
            None => write!(f, "{}: {}", self.study_id, self.rule)?,
        }
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

pub fn validate_record(record: &StudyRecord, schema: &Schema) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |criterion: Option<&str>, rule: Rule, detail: String| {
        out.push(Violation {
            study_id: record.study_id.clone(),
            criterion: criterion.map(str::to_string),
            rule,
            detail,
        })
    };

    if record.study_id.trim().is_empty() {
        push(None, Rule::EmptyStudyId, String::new());
    }
    for c in schema.criteria() {
        match record.values.get(&c.name) {
            None => push(Some(&c.name), Rule::MissingCriterion, String::new()),
            Some(v) => {
                if let Some((rule, detail)) = check_value(c, v) {
                    push(Some(&c.name), rule, detail);
                }
            }
        }
    }
    for name in record.values.keys() {
        if schema.get(name).is_none() {
            push(Some(name), Rule::UnknownCriterion, String::new());
        }
    }
    match record.values.get(YEAR_CRITERION) {
        Some(FieldValue::Number(y)) if *y != f64::from(record.year) => push(
            Some(YEAR_CRITERION),
            Rule::YearMismatch,
            format!("record year {} vs value {y}", record.year),
        ),
        _ => {}
    }
    out
}

/// Type-check one value against its criterion.
pub fn check_value(c: &Criterion, v: &FieldValue) -> Option<(Rule, String)> {
    let mismatch = || Some((Rule::KindMismatch, format!("{} value on {} criterion", v.kind_name(), c.kind)));
    match (c.kind, v) {
        (_, FieldValue::NotApplicable) => {
            if c.na_allowed {
                None
            } else {
                Some((Rule::NotApplicableForbidden, String::new()))
            }
        }
        (CriterionKind::Binary, FieldValue::Binary(_)) => None,
        (CriterionKind::Ordinal, FieldValue::Ordinal(label)) => {
            if c.answer_options.iter().any(|o| o == label) {
                None
            } else {
                Some((Rule::UnknownOption, label.clone()))
            }
        }
        (CriterionKind::Categorical, FieldValue::Categories(set)) => {
            if !c.multi_valued && set.len() > 1 {
                return Some((Rule::MultipleValues, format!("{} labels", set.len())));
            }
            if c.has_closed_vocabulary() {
                if let Some(bad) = set.iter().find(|l| !c.answer_options.contains(l)) {
                    return Some((Rule::UnknownOption, bad.clone()));
                }
            }
            None
        }
        (CriterionKind::Numeric, FieldValue::Number(n)) => {
            if n.is_finite() {
                None
            } else {
                Some((Rule::NonFiniteNumber, n.to_string()))
            }
        }
        (CriterionKind::Text, FieldValue::Text(_)) => None,
        _ => mismatch(),
    }
}
