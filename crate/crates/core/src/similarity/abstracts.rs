//! Cosine similarity between abstract embeddings.

use crate::error::{Error, Result};
use crate::model::StudyRecord;

use super::embedding::EmbeddingProvider;
use super::matrix::{SimilarityMatrix, SimilarityMode, Square};
use super::zscore::zscore_standardize_masked;

/// Cosine of two vectors; `None` when either has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    // sqrt(na * nb) keeps self-similarity at exactly 1.
    Some((dot / (na * nb).sqrt()).clamp(-1.0, 1.0))
}

/// Pairwise abstract similarity. Records with an empty abstract are
/// flagged, kept in the id list and excluded from pair statistics and
/// neighbor results.
pub fn abstract_similarity(
    records: &[StudyRecord],
    provider: &dyn EmbeddingProvider,
) -> Result<SimilarityMatrix> {
    let n = records.len();
    let excluded: Vec<bool> = records.iter().map(|r| r.abstract_text.trim().is_empty()).collect();
    let mut flags: Vec<String> = records
        .iter()
        .filter(|r| r.abstract_text.trim().is_empty())
        .map(|r| format!("{}: empty abstract, excluded", r.study_id))
        .collect();
    let present: Vec<usize> = (0..n).filter(|&i| !excluded[i]).collect();
    if present.len() < 2 {
        return Err(Error::DegenerateCorpus(format!(
            "abstract similarity needs at least two abstracts, got {}",
            present.len()
        )));
    }
    let texts: Vec<&str> = present.iter().map(|&i| records[i].abstract_text.as_str()).collect();
    let vectors = provider.embed(&texts)?;
    if vectors.len() != texts.len() {
        return Err(Error::Config(format!(
            "provider {} returned {} vectors for {} texts",
            provider.name(),
            vectors.len(),
            texts.len()
        )));
    }
    if let Some(bad) = vectors.iter().find(|v| v.len() != provider.dimension()) {
        return Err(Error::Config(format!(
            "provider {} returned a {}-dimensional vector, expected {}",
            provider.name(),
            bad.len(),
            provider.dimension()
        )));
    }

    let mut raw = Square::zeros(n);
    for (a, &i) in present.iter().enumerate() {
        for (b, &j) in present.iter().enumerate().skip(a) {
            let score = match cosine(&vectors[a], &vectors[b]) {
                Some(c) => c,
                None => {
                    if i != j {
                        flags.push(format!(
                            "{} / {}: zero embedding vector, cosine set to 0",
                            records[i].study_id, records[j].study_id
                        ));
                    }
                    0.0
                }
            };
            raw.set_sym(i, j, score);
        }
    }
    let z = zscore_standardize_masked(&raw, &excluded.iter().map(|e| !e).collect::<Vec<_>>());
    if z.degenerate {
        flags.push("zero-variance pair population; z-scores set to 0".to_string());
    }
    Ok(SimilarityMatrix {
        mode: SimilarityMode::Abstract,
        ids: records.iter().map(|r| r.study_id.clone()).collect(),
        raw,
        z: z.z,
        population_mean: z.mean,
        population_sd: z.sd,
        degenerate: z.degenerate,
        excluded,
        flags,
    })
}
