//! Per-criterion answer-option counts.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::NA_LITERAL;
use crate::snapshot::CorpusSnapshot;

use super::filter::owned_labels;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bar {
    pub label: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Distribution {
    pub criterion: String,
    /// Sorted by count descending, then label ascending. N/A, when present,
    /// is an ordinary bar labelled "N/A".
    pub bars: Vec<Bar>,
    pub truncated: bool,
    pub total_records: usize,
    pub na_count: usize,
}

pub fn distribution(
    snapshot: &CorpusSnapshot,
    ids: &[String],
    criterion: &str,
    max_bars: usize,
) -> Result<Distribution> {
    snapshot.schema().require(criterion)?;
    if max_bars == 0 {
        return Err(Error::InvalidFilter("max_bars must be positive".into()));
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut na_count = 0;
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            continue;
        }
        let record = snapshot.require_record(id)?;
        match record.value(criterion).and_then(owned_labels) {
            Some(labels) => {
                let distinct: HashSet<String> = labels.into_iter().collect();
                for l in distinct {
                    *counts.entry(l).or_default() += 1;
                }
            }
            None => na_count += 1,
        }
    }
    let mut bars: Vec<Bar> = counts.into_iter().map(|(label, count)| Bar { label, count }).collect();
    if na_count > 0 {
        bars.push(Bar { label: NA_LITERAL.to_string(), count: na_count });
    }
    bars.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.label.cmp(&b.label)));
    let truncated = bars.len() > max_bars;
    bars.truncate(max_bars);
    Ok(Distribution {
        criterion: criterion.to_string(),
        bars,
        truncated,
        total_records: seen.len(),
        na_count,
    })
}
