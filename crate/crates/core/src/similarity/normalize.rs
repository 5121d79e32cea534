//! Mapping of scalar criterion values onto [0, 1].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{Criterion, CriterionKind, FieldValue, StudyRecord};
use crate::schema::Schema;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

/// Observed min/max of each numeric column after its transform.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusStats {
    numeric: BTreeMap<String, Range>,
}

impl CorpusStats {
    pub fn from_records(schema: &Schema, records: &[StudyRecord]) -> Self {
        let mut numeric = BTreeMap::new();
        for c in schema.criteria().iter().filter(|c| c.kind == CriterionKind::Numeric) {
            let observed = records.iter().filter_map(|r| match r.values.get(&c.name) {
                Some(FieldValue::Number(v)) => Some(transform(c, *v)),
                _ => None,
            });
            let range = observed.fold(None, |acc: Option<Range>, v| {
                Some(match acc {
                    None => Range { min: v, max: v },
                    Some(r) => Range { min: r.min.min(v), max: r.max.max(v) },
                })
            });
            if let Some(r) = range {
                numeric.insert(c.name.clone(), r);
            }
        }
        CorpusStats { numeric }
    }

    pub fn with_range(mut self, criterion: &str, min: f64, max: f64) -> Self {
        self.numeric.insert(criterion.to_string(), Range { min, max });
        self
    }

    pub fn range(&self, criterion: &str) -> Option<Range> {
        self.numeric.get(criterion).copied()
    }
}

/// `ln(1 + v)` for log-transformed criteria, identity otherwise. Negative
/// counts are floored at zero before the log.
pub fn transform(c: &Criterion, v: f64) -> f64 {
    if c.log_transform {
        v.max(0.0).ln_1p()
    } else {
        v
    }
}

/// Normalized value in [0, 1], or `None` for N/A.
///
/// Binary maps to 1/0, ordinal to its configured level, numeric to min-max
/// over the (transformed) corpus column. A numeric value outside the
/// observed range is clamped with a warning.
pub fn normalize_scalar(c: &Criterion, v: &FieldValue, stats: &CorpusStats) -> Result<Option<f64>> {
    let mismatch = || {
        Error::Schema(format!(
            "{} value cannot be normalized for {} criterion {:?}",
            v.kind_name(),
            c.kind,
            c.name
        ))
    };
    match (c.kind, v) {
        (_, FieldValue::NotApplicable) => Ok(None),
        (CriterionKind::Binary, FieldValue::Binary(b)) => Ok(Some(if *b { 1.0 } else { 0.0 })),
        (CriterionKind::Ordinal, FieldValue::Ordinal(label)) => c
            .ordinal_values
            .get(label)
            .copied()
            .map(Some)
            .ok_or_else(|| Error::Schema(format!("{label:?} is not an option of {:?}", c.name))),
        (CriterionKind::Numeric, FieldValue::Number(x)) => {
            let range = stats
                .range(&c.name)
                .ok_or_else(|| Error::Schema(format!("no corpus range for {:?}", c.name)))?;
            let t = transform(c, *x);
            let span = range.max - range.min;
            if span <= 0.0 {
                return Ok(Some(0.0));
            }
            let norm = (t - range.min) / span;
            if !(0.0..=1.0).contains(&norm) {
                tracing::warn!(criterion = %c.name, value = x, "value outside corpus range, clamped");
            }
            Ok(Some(norm.clamp(0.0, 1.0)))
        }
        _ => Err(mismatch()),
    }
}
