//! Scholarly relationships between studies: shared authorship and
//! citations, plus the review queue for uncertain matches.

pub mod authors;
pub mod citations;
pub mod review;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BibEntry, StudyRecord};

pub use authors::{name_distance, normalize_name, shared_author_pairs, NamePolicy};
pub use citations::{match_citations, score_reference, CitationMatches, MatcherConfig};
pub use review::{
    queue_from_csv, queue_to_csv, DecisionLog, ReviewDecision, ReviewEntry, ReviewKind, Verdict,
};

/// Undirected co-authorship edge; `a < b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorEdge {
    pub a: String,
    pub b: String,
    pub shared: Vec<String>,
    #[serde(default)]
    pub reviewed: bool,
}

/// Directed citation edge from the citing to the cited study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationEdge {
    pub citing: String,
    pub cited: String,
    pub confidence: f64,
    #[serde(default)]
    pub reviewed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScholarlyGraph {
    pub author_edges: Vec<AuthorEdge>,
    pub citation_edges: Vec<CitationEdge>,
    /// Entries still awaiting a verdict.
    pub review_queue: Vec<ReviewEntry>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub names: NamePolicy,
    pub citations: MatcherConfig,
}

impl ScholarlyGraph {
    pub fn review_entry(&self, key: &str) -> Option<&ReviewEntry> {
        self.review_queue.iter().find(|e| e.key == key)
    }

    /// Move a queued entry into the graph (accept) or drop it (reject).
    pub fn apply(&mut self, key: &str, verdict: Verdict) -> Result<ReviewEntry> {
        let pos = self
            .review_queue
            .iter()
            .position(|e| e.key == key)
            .ok_or_else(|| Error::UnknownReview(key.to_string()))?;
        let entry = self.review_queue.remove(pos);
        if verdict == Verdict::Accept {
            self.accept(&entry);
        }
        Ok(entry)
    }

    fn accept(&mut self, entry: &ReviewEntry) {
        let (a, b) = (&entry.ids.0, &entry.ids.1);
        match entry.kind {
            ReviewKind::Author => {
                let names = entry.evidence.iter().take(2).cloned();
                match self.author_edges.iter_mut().find(|e| &e.a == a && &e.b == b) {
                    Some(edge) => {
                        edge.shared.extend(names);
                        edge.reviewed = true;
                    }
                    None => {
                        self.author_edges.push(AuthorEdge {
                            a: a.clone(),
                            b: b.clone(),
                            shared: names.collect(),
                            reviewed: true,
                        });
                        self.author_edges.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
                    }
                }
            }
            ReviewKind::Citation => {
                match self.citation_edges.iter_mut().find(|e| &e.citing == a && &e.cited == b) {
                    Some(edge) => edge.reviewed = true,
                    None => {
                        self.citation_edges.push(CitationEdge {
                            citing: a.clone(),
                            cited: b.clone(),
                            confidence: entry.score,
                            reviewed: true,
                        });
                        self.citation_edges.sort_by(|x, y| (&x.citing, &x.cited).cmp(&(&y.citing, &y.cited)));
                    }
                }
            }
        }
    }
}

/// Build the graph and apply any recorded review decisions. Decisions whose
/// key no longer matches a queued entry are ignored; the last decision for
/// a key wins.
pub fn extract_graph(
    records: &[StudyRecord],
    references: &BTreeMap<String, Vec<BibEntry>>,
    config: &GraphConfig,
    decisions: &[ReviewDecision],
) -> ScholarlyGraph {
    let (author_edges, mut queue) = shared_author_pairs(records, &config.names);
    let cites = match_citations(records, references, &config.citations);
    queue.extend(cites.review);
    let mut graph = ScholarlyGraph {
        author_edges,
        citation_edges: cites.edges,
        review_queue: queue,
        warnings: cites.warnings,
    };
    let latest: HashMap<&str, Verdict> = decisions.iter().map(|d| (d.key.as_str(), d.verdict)).collect();
    let keys: Vec<String> = graph.review_queue.iter().map(|e| e.key.clone()).collect();
    for key in keys {
        if let Some(v) = latest.get(key.as_str()) {
            graph.apply(&key, *v).expect("key taken from the queue");
        }
    }
    graph
}

/// Look up a queued entry and produce the decision to record for it.
pub fn resolve_review(graph: &ScholarlyGraph, key: &str, verdict: Verdict) -> Result<ReviewDecision> {
    let entry = graph.review_entry(key).ok_or_else(|| Error::UnknownReview(key.to_string()))?;
    Ok(ReviewDecision { key: key.to_string(), verdict, entry: entry.clone() })
}
