//! Per-criterion include/exclude filters shared by every view.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CriterionKind, FieldValue, StudyRecord};
use crate::schema::Schema;
use crate::snapshot::CorpusSnapshot;

fn default_true() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionFilter {
    /// Match records owning at least one of these labels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub include: Option<BTreeSet<String>>,
    /// Reject records owning any of these labels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclude: Option<BTreeSet<String>>,
    /// Inclusive bounds; numeric criteria only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric_range: Option<[f64; 2]>,
    /// Allowed levels; ordinal criteria only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordinal_levels: Option<BTreeSet<String>>,
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub include_na: bool,
}

impl Default for CriterionFilter {
    fn default() -> Self {
        CriterionFilter {
            include: None,
            exclude: None,
            numeric_range: None,
            ordinal_levels: None,
            include_na: true,
        }
    }
}

/// Conjunction of per-criterion filters. Serializes to canonical JSON:
/// keys sorted, defaults omitted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FilterSpec {
    pub criteria: BTreeMap<String, CriterionFilter>,
}

impl FilterSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.criteria.is_empty()
    }

    pub fn with(mut self, criterion: impl Into<String>, filter: CriterionFilter) -> Self {
        self.criteria.insert(criterion.into(), filter);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        serde_json::from_str(text).map_err(|e| Error::InvalidFilter(e.to_string()))
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("filter specs always serialize")
    }

    pub fn validate(&self, schema: &Schema) -> Result<()> {
        for (name, f) in &self.criteria {
            let c = schema.require(name)?;
            if let (Some(inc), Some(exc)) = (&f.include, &f.exclude) {
                if let Some(both) = inc.intersection(exc).next() {
                    return Err(Error::InvalidFilter(format!(
                        "{name}: {both:?} is both included and excluded"
                    )));
                }
            }
            if let Some([lo, hi]) = f.numeric_range {
                if c.kind != CriterionKind::Numeric {
                    return Err(Error::InvalidFilter(format!(
                        "{name}: numeric_range on a {} criterion",
                        c.kind
                    )));
                }
                if lo.is_nan() || hi.is_nan() || lo > hi {
                    return Err(Error::InvalidFilter(format!("{name}: bad range [{lo}, {hi}]")));
                }
            }
            if let Some(levels) = &f.ordinal_levels {
                if c.kind != CriterionKind::Ordinal {
                    return Err(Error::InvalidFilter(format!(
                        "{name}: ordinal_levels on a {} criterion",
                        c.kind
                    )));
                }
                if let Some(bad) = levels.iter().find(|l| !c.answer_options.contains(l)) {
                    return Err(Error::InvalidFilter(format!("{name}: unknown level {bad:?}")));
                }
            }
        }
        Ok(())
    }

    /// Whether one record passes. Assumes a validated spec.
    pub fn matches(&self, record: &StudyRecord) -> bool {
        self.criteria.iter().all(|(name, f)| match record.value(name) {
            Some(v) => f.matches(v),
            None => f.include_na,
        })
    }
}

/// Labels a value owns for filtering and counting; `None` means N/A.
/// Empty category sets count as N/A.
pub fn owned_labels(v: &FieldValue) -> Option<Vec<String>> {
    match v {
        FieldValue::NotApplicable => None,
        FieldValue::Categories(s) if s.is_empty() => None,
        other => Some(other.labels()),
    }
}

impl CriterionFilter {
    pub fn include<I: IntoIterator<Item = S>, S: Into<String>>(labels: I) -> Self {
        CriterionFilter { include: Some(labels.into_iter().map(Into::into).collect()), ..Self::default() }
    }

    pub fn exclude<I: IntoIterator<Item = S>, S: Into<String>>(labels: I) -> Self {
        CriterionFilter { exclude: Some(labels.into_iter().map(Into::into).collect()), ..Self::default() }
    }

    pub fn matches(&self, v: &FieldValue) -> bool {
        let Some(labels) = owned_labels(v) else {
            return self.include_na;
        };
        if let Some(inc) = &self.include {
            if !labels.iter().any(|l| inc.contains(l)) {
                return false;
            }
        }
        if let Some(exc) = &self.exclude {
            if labels.iter().any(|l| exc.contains(l)) {
                return false;
            }
        }
        if let (Some([lo, hi]), FieldValue::Number(n)) = (self.numeric_range, v) {
            if *n < lo || *n > hi {
                return false;
            }
        }
        if let (Some(levels), FieldValue::Ordinal(l)) = (&self.ordinal_levels, v) {
            if !levels.contains(l) {
                return false;
            }
        }
        true
    }
}

/// Ids of the matching records ordered by (year, id).
pub fn apply_filter(snapshot: &CorpusSnapshot, spec: &FilterSpec) -> Result<Vec<String>> {
    spec.validate(snapshot.schema())?;
    let mut hits: Vec<&StudyRecord> = snapshot.records().iter().filter(|r| spec.matches(r)).collect();
    hits.sort_by(|a, b| (a.year, &a.study_id).cmp(&(b.year, &b.study_id)));
    Ok(hits.into_iter().map(|r| r.study_id.clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_json_omits_defaults() {
        let spec = FilterSpec::new()
            .with("Sensors", CriterionFilter::include(["IMU", "EEG"]))
            .with("Accuracy", CriterionFilter { include_na: false, ..Default::default() });
        let json = spec.to_canonical_json();
        assert_eq!(json, r#"{"Accuracy":{"include_na":false},"Sensors":{"include":["EEG","IMU"]}}"#);
        assert_eq!(FilterSpec::from_json(&json).unwrap(), spec);
        assert_eq!(FilterSpec::from_json("").unwrap(), FilterSpec::new());
        assert!(FilterSpec::from_json("{\"x\":{\"bogus\":1}}").is_err());
    }

    #[test]
    fn any_of_include_none_of_exclude() {
        let v = FieldValue::categories(["IMU", "Microphone"]);
        assert!(CriterionFilter::include(["IMU", "EEG"]).matches(&v));
        assert!(!CriterionFilter::include(["EEG"]).matches(&v));
        assert!(!CriterionFilter::exclude(["Microphone"]).matches(&v));
        assert!(CriterionFilter::exclude(["EEG"]).matches(&v));
    }

    #[test]
    fn na_follows_include_na() {
        let f = CriterionFilter::include(["IMU"]);
        assert!(f.matches(&FieldValue::NotApplicable));
        assert!(f.matches(&FieldValue::categories(Vec::<String>::new())));
        let f = CriterionFilter { include_na: false, ..f };
        assert!(!f.matches(&FieldValue::NotApplicable));
    }

    #[test]
    fn numeric_range_is_inclusive() {
        let f = CriterionFilter { numeric_range: Some([2.0, 5.0]), ..Default::default() };
        assert!(f.matches(&FieldValue::Number(2.0)));
        assert!(f.matches(&FieldValue::Number(5.0)));
        assert!(!f.matches(&FieldValue::Number(5.5)));
    }
}
