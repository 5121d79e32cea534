//! Criterion schema: construction, validation and the manifest format.
//!
//! A manifest is a TOML document with one `[[criterion]]` table per column:
//!
//! ```toml
//! [[criterion]]
//! name = "Discreetness of Interactions"
//! kind = "ordinal"
//! answer_options = ["Low", "Medium", "High"]
//! ordinal_values = { Low = 0.0, Medium = 0.5, High = 1.0 }
//! na_allowed = true
//! ```

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Criterion, CriterionKind, NA_LITERAL, YEAR_CRITERION};

const DEFAULT_MANIFEST: &str = include_str!("default_schema.toml");

/// Validated, ordered list of criteria.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Schema {
    criteria: Vec<Criterion>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    #[serde(rename = "criterion", default)]
    criteria: Vec<Criterion>,
}

impl<'de> Deserialize<'de> for Schema {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let criteria = Vec::<Criterion>::deserialize(d)?;
        Schema::new(criteria).map_err(serde::de::Error::custom)
    }
}

impl Schema {
    pub fn new(criteria: Vec<Criterion>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &criteria {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate criterion {:?}", c.name)));
            }
            check_criterion(c)?;
        }
        match criteria.iter().find(|c| c.name == YEAR_CRITERION) {
            Some(c) if c.kind == CriterionKind::Numeric && !c.na_allowed => {}
            Some(_) => return Err(Error::Schema(format!("{YEAR_CRITERION:?} must be numeric without N/A"))),
            None => return Err(Error::Schema(format!("schema has no {YEAR_CRITERION:?} criterion"))),
        }
        Ok(Schema { criteria })
    }

    pub fn from_manifest(text: &str) -> Result<Self> {
        let manifest: Manifest = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        Schema::new(manifest.criteria)
    }

    pub fn to_manifest(&self) -> String {
        let manifest = Manifest { criteria: self.criteria.clone() };
        // Criterion is plain data; serialization cannot fail.
        toml::to_string_pretty(&manifest).expect("schema manifest serializes")
    }

    pub fn criteria(&self) -> &[Criterion] {
        &self.criteria
    }

    pub fn len(&self) -> usize {
        self.criteria.len()
    }

    pub fn is_empty(&self) -> bool {
        self.criteria.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&Criterion> {
        self.get(name).ok_or_else(|| Error::UnknownCriterion(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.criteria.iter().map(|c| c.name.as_str())
    }

    /// Criteria that enter the database-similarity sum.
    pub fn participating(&self) -> impl Iterator<Item = &Criterion> {
        self.criteria.iter().filter(|c| c.enters_similarity())
    }

    pub fn display_defaults(&self) -> impl Iterator<Item = &Criterion> {
        self.criteria.iter().filter(|c| c.display_default)
    }

    /// Copy of the schema with one criterion's participation flag changed.
    pub fn with_participation(&self, name: &str, participates: bool) -> Result<Self> {
        let mut criteria = self.criteria.clone();
        let c = criteria
            .iter_mut()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownCriterion(name.to_string()))?;
        c.similarity_participates = participates;
        Schema::new(criteria)
    }
}

fn check_criterion(c: &Criterion) -> Result<()> {
    let fail = |msg: String| Err(Error::Schema(format!("{:?}: {msg}", c.name)));
    if c.name.trim().is_empty() || c.name != c.name.trim() {
        return fail("name must be non-empty without surrounding whitespace".into());
    }
    if c.multi_valued
        && matches!(c.kind, CriterionKind::Numeric | CriterionKind::Binary | CriterionKind::Text)
    {
        return fail(format!("{} criteria cannot be multi-valued", c.kind));
    }
    if c.log_transform && c.kind != CriterionKind::Numeric {
        return fail("log_transform applies to numeric criteria only".into());
    }
    if c.answer_options.iter().any(|o| o == NA_LITERAL) {
        return fail("N/A is expressed with na_allowed, not as an answer option".into());
    }
    let mut opts = HashSet::new();
    for o in &c.answer_options {
        if !opts.insert(o.as_str()) {
            return fail(format!("duplicate answer option {o:?}"));
        }
        if o.contains(crate::model::MULTI_SEPARATOR) {
            return fail(format!("answer option {o:?} contains the multi-value separator"));
        }
    }
    match c.kind {
        CriterionKind::Ordinal => {
            if c.answer_options.is_empty() {
                return fail("ordinal criteria need answer options".into());
            }
            for o in &c.answer_options {
                if !c.ordinal_values.contains_key(o) {
                    return fail(format!("no ordinal value for option {o:?}"));
                }
            }
            if let Some(extra) = c.ordinal_values.keys().find(|k| !opts.contains(k.as_str())) {
                return fail(format!("ordinal value for unknown option {extra:?}"));
            }
            let values: Vec<f64> = c.ordinal_values.values().copied().collect();
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if min != 0.0 || max != 1.0 || values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return fail("ordinal values must span exactly [0, 1]".into());
            }
        }
        _ if !c.ordinal_values.is_empty() => {
            return fail("ordinal_values given for a non-ordinal criterion".into());
        }
        CriterionKind::Numeric | CriterionKind::Text if !c.answer_options.is_empty() => {
            return fail(format!("{} criteria take no answer options", c.kind));
        }
        _ => {}
    }
    Ok(())
}

/// The bundled 34-criterion manifest for the earable-interaction corpus.
pub fn default_schema() -> Schema {
    Schema::from_manifest(DEFAULT_MANIFEST).expect("bundled manifest is valid")
}

pub fn default_manifest() -> &'static str {
    DEFAULT_MANIFEST
}

/// Ordinal value lookup used by normalization.
pub fn ordinal_value(c: &Criterion, label: &str) -> Option<f64> {
    c.ordinal_values.get(label).copied()
}

/// Index from criterion name to position, for callers that iterate records
/// many times.
pub fn positions(schema: &Schema) -> BTreeMap<&str, usize> {
    schema.names().enumerate().map(|(i, n)| (n, i)).collect()
}
