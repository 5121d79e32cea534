//! Mixed-type record similarity over the participating criteria.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{Criterion, CriterionKind, FieldValue, StudyRecord};
use crate::schema::Schema;

use super::matrix::{SimilarityMatrix, SimilarityMode, Square};
use super::normalize::{normalize_scalar, CorpusStats};
use super::zscore::zscore_standardize;

/// Similarity of two values of the same criterion, in [0, 1].
///
/// Scalars score `1 - |a - b|` after normalization. Categories (single or
/// multi-valued) score `|A ∩ B| / sqrt(|A| |B|)`. N/A or an empty set on
/// either side scores 0. Text never participates and scores 0.
pub fn criterion_similarity(
    a: &FieldValue,
    b: &FieldValue,
    criterion: &Criterion,
    stats: &CorpusStats,
) -> Result<f64> {
    if a.is_na() || b.is_na() {
        return Ok(0.0);
    }
    match criterion.kind {
        CriterionKind::Categorical => match (a, b) {
            (FieldValue::Categories(x), FieldValue::Categories(y)) => Ok(set_similarity(x, y)),
            _ => Err(Error::Schema(format!(
                "non-category values on categorical criterion {:?}",
                criterion.name
            ))),
        },
        CriterionKind::Text => Ok(0.0),
        _ => {
            let x = normalize_scalar(criterion, a, stats)?;
            let y = normalize_scalar(criterion, b, stats)?;
            Ok(match (x, y) {
                (Some(x), Some(y)) => 1.0 - (x - y).abs(),
                _ => 0.0,
            })
        }
    }
}

/// Intersection size over the geometric mean of the two cardinalities.
pub fn set_similarity(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let shared = a.intersection(b).count() as f64;
    shared / ((a.len() * b.len()) as f64).sqrt()
}

enum Prepared<'a> {
    Missing,
    Scalar(f64),
    Set(&'a BTreeSet<String>),
}

fn prepare<'a>(c: &Criterion, v: Option<&'a FieldValue>, stats: &CorpusStats) -> Result<Prepared<'a>> {
    let Some(v) = v else {
        return Ok(Prepared::Missing);
    };
    Ok(match (c.kind, v) {
        (_, FieldValue::NotApplicable) => Prepared::Missing,
        (CriterionKind::Categorical, FieldValue::Categories(set)) if set.is_empty() => Prepared::Missing,
        (CriterionKind::Categorical, FieldValue::Categories(set)) => Prepared::Set(set),
        (CriterionKind::Text, _) => Prepared::Missing,
        _ => match normalize_scalar(c, v, stats)? {
            Some(x) => Prepared::Scalar(x),
            None => Prepared::Missing,
        },
    })
}

fn pair_score(a: &Prepared<'_>, b: &Prepared<'_>) -> f64 {
    match (a, b) {
        (Prepared::Scalar(x), Prepared::Scalar(y)) => 1.0 - (x - y).abs(),
        (Prepared::Set(x), Prepared::Set(y)) => set_similarity(x, y),
        _ => 0.0,
    }
}

/// Resolve the participating criteria: the schema flags, or an explicit
/// subset of the schema.
pub fn participating_criteria<'s>(
    schema: &'s Schema,
    explicit: Option<&BTreeSet<String>>,
) -> Result<Vec<&'s Criterion>> {
    match explicit {
        None => Ok(schema.participating().collect()),
        Some(names) => {
            for n in names {
                let c = schema.require(n)?;
                if c.kind == CriterionKind::Text {
                    return Err(Error::Schema(format!("text criterion {n:?} cannot participate")));
                }
            }
            Ok(schema.criteria().iter().filter(|c| names.contains(&c.name)).collect())
        }
    }
}

/// Sum of per-criterion similarities for every pair of records, with
/// z-scores over all unordered pairs. The row/column order follows
/// `records`.
pub fn database_similarity(
    schema: &Schema,
    records: &[StudyRecord],
    participating: Option<&BTreeSet<String>>,
) -> Result<SimilarityMatrix> {
    let n = records.len();
    if n < 2 {
        return Err(Error::DegenerateCorpus(format!(
            "database similarity needs at least two records, got {n}"
        )));
    }
    let criteria = participating_criteria(schema, participating)?;
    let stats = CorpusStats::from_records(schema, records);

    let mut prepared = Vec::with_capacity(n);
    for r in records {
        let row =
            criteria.iter().map(|c| prepare(c, r.values.get(&c.name), &stats)).collect::<Result<Vec<_>>>()?;
        prepared.push(row);
    }

    let mut raw = Square::zeros(n);
    for i in 0..n {
        for j in i..n {
            let sum: f64 = prepared[i].iter().zip(&prepared[j]).map(|(a, b)| pair_score(a, b)).sum();
            raw.set_sym(i, j, sum);
        }
    }
    let z = zscore_standardize(&raw);
    let mut flags = Vec::new();
    if z.degenerate {
        flags.push("zero-variance pair population; z-scores set to 0".to_string());
    }
    Ok(SimilarityMatrix {
        mode: SimilarityMode::Database,
        ids: records.iter().map(|r| r.study_id.clone()).collect(),
        raw,
        z: z.z,
        population_mean: z.mean,
        population_sd: z.sd,
        degenerate: z.degenerate,
        excluded: vec![false; n],
        flags,
    })
}
