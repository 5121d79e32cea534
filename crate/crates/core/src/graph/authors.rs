//! Shared-authorship detection with near-match flagging.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::model::StudyRecord;

use super::review::{ReviewEntry, ReviewKind};
use super::AuthorEdge;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NamePolicy {
    /// Remove combining marks after decomposition ("Röddiger" → "roddiger").
    pub strip_diacritics: bool,
    /// Largest edit distance that still produces a review entry.
    pub max_flag_distance: usize,
}

impl Default for NamePolicy {
    fn default() -> Self {
        NamePolicy { strip_diacritics: false, max_flag_distance: 2 }
    }
}

/// Trim, collapse inner whitespace and case-fold.
pub fn normalize_name(name: &str, policy: &NamePolicy) -> String {
    let collapsed = name.split_whitespace().collect::<Vec<_>>().join(" ");
    let folded = collapsed.to_lowercase();
    if policy.strip_diacritics {
        folded.nfd().filter(|c| !is_combining_mark(*c)).nfc().collect()
    } else {
        folded.nfc().collect()
    }
}

pub fn name_distance(a: &str, b: &str) -> usize {
    strsim::levenshtein(a, b)
}

/// Exact shared names become edges; names within the flag distance become
/// review entries and never edges.
pub fn shared_author_pairs(
    records: &[StudyRecord],
    policy: &NamePolicy,
) -> (Vec<AuthorEdge>, Vec<ReviewEntry>) {
    // normalized name -> first original spelling, per record
    let names: Vec<BTreeMap<String, &str>> = records
        .iter()
        .map(|r| {
            let mut m = BTreeMap::new();
            for a in &r.authors {
                let n = normalize_name(a, policy);
                if !n.is_empty() {
                    m.entry(n).or_insert(a.as_str());
                }
            }
            m
        })
        .collect();

    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&x, &y| records[x].study_id.cmp(&records[y].study_id));

    let mut edges = Vec::new();
    let mut queue = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            let (a, b) = (&names[i], &names[j]);
            let shared: BTreeSet<&String> = a.keys().filter(|n| b.contains_key(*n)).collect();
            if !shared.is_empty() {
                edges.push(AuthorEdge {
                    a: records[i].study_id.clone(),
                    b: records[j].study_id.clone(),
                    shared: shared.iter().map(|n| a[*n].to_string()).collect(),
                    reviewed: false,
                });
            }
            for (na, orig_a) in a.iter().filter(|(n, _)| !shared.contains(n)) {
                for (nb, orig_b) in b.iter().filter(|(n, _)| !shared.contains(n)) {
                    let d = name_distance(na, nb);
                    if d == 0 || d > policy.max_flag_distance {
                        continue;
                    }
                    let longest = na.chars().count().max(nb.chars().count()) as f64;
                    queue.push(ReviewEntry::new(
                        ReviewKind::Author,
                        &records[i].study_id,
                        &records[j].study_id,
                        vec![orig_a.to_string(), orig_b.to_string(), format!("levenshtein distance {d}")],
                        1.0 - d as f64 / longest,
                    ));
                }
            }
        }
    }
    (edges, queue)
}
