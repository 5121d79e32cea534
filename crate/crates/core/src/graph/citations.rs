//! Fuzzy matching of reference-list entries against the corpus
//! bibliography.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{BibEntry, StudyRecord};
use crate::similarity::embedding::tokenize;

use super::review::{ReviewEntry, ReviewKind};
use super::CitationEdge;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatcherConfig {
    pub title_weight: f64,
    pub year_weight: f64,
    pub author_weight: f64,
    /// Scores at or above this become edges.
    pub edge_threshold: f64,
    /// Scores in [flag_threshold, edge_threshold) go to review.
    pub flag_threshold: f64,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig {
            title_weight: 0.7,
            year_weight: 0.2,
            author_weight: 0.1,
            edge_threshold: 0.90,
            flag_threshold: 0.60,
        }
    }
}

pub fn title_tokens(title: &str) -> BTreeSet<String> {
    tokenize(title).into_iter().collect()
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

struct Candidate<'a> {
    id: &'a str,
    tokens: BTreeSet<String>,
    year: Option<i32>,
    family: Option<String>,
    title: &'a str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchScore {
    pub score: f64,
    pub title: f64,
    pub year_match: bool,
    pub author_match: bool,
}

/// Weighted match score, rounded to 1e-9 so threshold comparisons do not
/// depend on summation order.
pub fn score_reference(reference: &BibEntry, target: &BibEntry, config: &MatcherConfig) -> MatchScore {
    let r = title_tokens(reference.title().unwrap_or(""));
    let t = title_tokens(target.title().unwrap_or(""));
    score_parts(
        &r,
        reference.year(),
        reference.first_author_family().as_deref(),
        &t,
        target.year(),
        target.first_author_family().as_deref(),
        config,
    )
}

fn score_parts(
    ref_tokens: &BTreeSet<String>,
    ref_year: Option<i32>,
    ref_family: Option<&str>,
    tokens: &BTreeSet<String>,
    year: Option<i32>,
    family: Option<&str>,
    config: &MatcherConfig,
) -> MatchScore {
    let title = jaccard(ref_tokens, tokens);
    let year_match = ref_year.is_some() && ref_year == year;
    let author_match = ref_family.is_some() && ref_family == family;
    let raw = config.title_weight * title
        + if year_match { config.year_weight } else { 0.0 }
        + if author_match { config.author_weight } else { 0.0 };
    MatchScore { score: (raw * 1e9).round() / 1e9, title, year_match, author_match }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CitationMatches {
    pub edges: Vec<CitationEdge>,
    pub review: Vec<ReviewEntry>,
    pub warnings: Vec<String>,
}

/// Match every study's references against the corpus. Each reference
/// yields at most one edge or review entry: its best candidate, ties broken
/// by year match and then by id.
pub fn match_citations(
    records: &[StudyRecord],
    references: &BTreeMap<String, Vec<BibEntry>>,
    config: &MatcherConfig,
) -> CitationMatches {
    let candidates: Vec<Candidate<'_>> = records
        .iter()
        .filter_map(|r| {
            let bib = r.bib_entry.as_ref()?;
            let title = bib.title()?;
            Some(Candidate {
                id: &r.study_id,
                tokens: title_tokens(title),
                year: bib.year().or(Some(r.year)),
                family: bib.first_author_family(),
                title,
            })
        })
        .collect();
    let years: BTreeMap<&str, i32> = records.iter().map(|r| (r.study_id.as_str(), r.year)).collect();

    let mut out = CitationMatches::default();
    let mut edges: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut seen_review = BTreeSet::new();
    for (citing, refs) in references {
        if !years.contains_key(citing.as_str()) {
            out.warnings.push(format!("references given for unknown study {citing}"));
            continue;
        }
        for reference in refs {
            let ref_title = reference.title().unwrap_or("");
            let tokens = title_tokens(ref_title);
            if tokens.is_empty() {
                continue;
            }
            let ref_year = reference.year();
            let ref_family = reference.first_author_family();
            let best = candidates
                .iter()
                .filter(|c| c.id != citing)
                .map(|c| {
                    let s = score_parts(
                        &tokens,
                        ref_year,
                        ref_family.as_deref(),
                        &c.tokens,
                        c.year,
                        c.family.as_deref(),
                        config,
                    );
                    (c, s)
                })
                .max_by(|(ca, sa), (cb, sb)| {
                    sa.score
                        .total_cmp(&sb.score)
                        .then(sa.year_match.cmp(&sb.year_match))
                        .then_with(|| cb.id.cmp(ca.id))
                });
            let Some((cand, s)) = best else { continue };
            if s.score >= config.edge_threshold {
                let slot = edges.entry((citing.clone(), cand.id.to_string())).or_insert(0.0);
                *slot = slot.max(s.score);
            } else if s.score >= config.flag_threshold {
                let entry = ReviewEntry::new(
                    ReviewKind::Citation,
                    citing,
                    cand.id,
                    vec![
                        ref_title.to_string(),
                        cand.title.to_string(),
                        format!(
                            "title jaccard {:.4}; year {}; first author {}",
                            s.title,
                            if s.year_match { "match" } else { "differs" },
                            if s.author_match { "match" } else { "differs" }
                        ),
                    ],
                    s.score,
                );
                if seen_review.insert(entry.key.clone()) {
                    out.review.push(entry);
                }
            }
        }
    }
    for ((citing, cited), confidence) in edges {
        if years[citing.as_str()] < years[cited.as_str()] {
            out.warnings.push(format!(
                "{citing} ({}) cites the later study {cited} ({})",
                years[citing.as_str()],
                years[cited.as_str()]
            ));
        }
        out.edges.push(CitationEdge { citing, cited, confidence, reviewed: false });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bib(key: &str, title: &str, year: Option<i32>, author: &str) -> BibEntry {
        let mut fields = BTreeMap::new();
        fields.insert("title".to_string(), title.to_string());
        if let Some(y) = year {
            fields.insert("year".to_string(), y.to_string());
        }
        fields.insert("author".to_string(), author.to_string());
        BibEntry { entry_type: "article".into(), key: key.into(), fields }
    }

    fn rec(id: &str, year: i32, title: &str, author: &str) -> StudyRecord {
        StudyRecord {
            study_id: id.into(),
            year,
            values: Default::default(),
            authors: vec![author.into()],
            abstract_text: String::new(),
            bib_entry: Some(bib(id, title, Some(year), author)),
        }
    }

    const TITLE: &str = "one two three four five six seven eight nine ten";

    #[test]
    fn perfect_match_has_confidence_one() {
        let records = [rec("a", 2020, TITLE, "Doe, Jane"), rec("b", 2022, "unrelated", "X")];
        let refs = BTreeMap::from([("b".to_string(), vec![bib("r", TITLE, Some(2020), "Jane Doe")])]);
        let m = match_citations(&records, &refs, &MatcherConfig::default());
        assert_eq!(m.edges.len(), 1);
        assert_eq!(m.edges[0].confidence, 1.0);
        assert_eq!((m.edges[0].citing.as_str(), m.edges[0].cited.as_str()), ("b", "a"));
        assert!(m.review.is_empty());
    }

    #[test]
    fn two_substitutions_go_to_review() {
        let perturbed = "one two three four five six seven eight alpha beta";
        let s = score_reference(
            &bib("r", perturbed, Some(2020), "Doe, J."),
            &bib("a", TITLE, Some(2020), "Doe, Jane"),
            &MatcherConfig::default(),
        );
        // 0.7 * 8/12 + 0.2 + 0.1
        assert!((s.score - (0.7 * 8.0 / 12.0 + 0.3)).abs() < 1e-9);
        assert!((s.score - 0.7667).abs() < 1e-4);

        let records = [rec("a", 2020, TITLE, "Doe, Jane"), rec("b", 2022, "unrelated", "X")];
        let refs = BTreeMap::from([("b".to_string(), vec![bib("r", perturbed, Some(2020), "Doe, J.")])]);
        let m = match_citations(&records, &refs, &MatcherConfig::default());
        assert!(m.edges.is_empty());
        assert_eq!(m.review.len(), 1);
        assert_eq!(m.review[0].ids, ("b".to_string(), "a".to_string()));
    }

    #[test]
    fn outside_reference_is_ignored() {
        let records = [rec("a", 2020, TITLE, "Doe, Jane"), rec("b", 2022, "unrelated", "X")];
        let refs = BTreeMap::from([(
            "b".to_string(),
            vec![bib("r", "completely different words here", Some(1999), "Other, A")],
        )]);
        let m = match_citations(&records, &refs, &MatcherConfig::default());
        assert!(m.edges.is_empty() && m.review.is_empty());
    }

    #[test]
    fn self_reference_is_skipped() {
        let records = [rec("a", 2020, TITLE, "Doe, Jane"), rec("b", 2021, "x y z", "X")];
        let refs = BTreeMap::from([("a".to_string(), vec![bib("r", TITLE, Some(2020), "Doe, Jane")])]);
        let m = match_citations(&records, &refs, &MatcherConfig::default());
        assert!(m.edges.is_empty());
    }

    #[test]
    fn ties_prefer_year_match_then_id() {
        let records = [
            rec("c", 2019, TITLE, "Doe, Jane"),
            rec("b", 2020, TITLE, "Doe, Jane"),
            rec("z", 2022, "unrelated", "X"),
        ];
        // Same title for both; no author, reference year 2020 matches b.
        let refs = BTreeMap::from([("z".to_string(), vec![bib("r", TITLE, Some(2020), "")])]);
        let cfg = MatcherConfig { edge_threshold: 0.7, ..MatcherConfig::default() };
        let m = match_citations(&records, &refs, &cfg);
        assert_eq!(m.edges[0].cited, "b");

        let refs = BTreeMap::from([("z".to_string(), vec![bib("r", TITLE, None, "")])]);
        let m = match_citations(&records, &refs, &cfg);
        assert_eq!(m.edges[0].cited, "b", "lexicographic tie-break");
    }

    #[test]
    fn later_cited_study_warns() {
        let records = [rec("a", 2024, TITLE, "Doe, Jane"), rec("b", 2020, "unrelated", "X")];
        let refs = BTreeMap::from([("b".to_string(), vec![bib("r", TITLE, Some(2024), "Doe, Jane")])]);
        let m = match_citations(&records, &refs, &MatcherConfig::default());
        assert_eq!(m.edges.len(), 1);
        assert_eq!(m.warnings.len(), 1);
    }
}
