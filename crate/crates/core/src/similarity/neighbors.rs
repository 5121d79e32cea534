use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};

use super::matrix::SimilarityMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub study_id: String,
    pub z: f64,
    pub raw: f64,
}

/// Partners of `study_id` with z at or above `threshold`, restricted to
/// `filter` when given. Sorted by z descending, then id ascending.
pub fn neighbors(
    matrix: &SimilarityMatrix,
    study_id: &str,
    threshold: f64,
    filter: Option<&BTreeSet<String>>,
) -> Result<Vec<Neighbor>> {
    let i = matrix.index_of(study_id).ok_or_else(|| Error::UnknownStudy(study_id.to_string()))?;
    if let Some(f) = filter {
        if let Some(unknown) = f.iter().find(|id| matrix.index_of(id).is_none()) {
            return Err(Error::UnknownStudy(unknown.clone()));
        }
    }
    if matrix.excluded[i] {
        return Ok(Vec::new());
    }
    let mut out: Vec<Neighbor> = (0..matrix.len())
        .filter(|&j| j != i && !matrix.excluded[j])
        .filter(|&j| filter.is_none_or(|f| f.contains(&matrix.ids[j])))
        .filter(|&j| matrix.z.get(i, j) >= threshold)
        .map(|j| Neighbor {
            study_id: matrix.ids[j].clone(),
            z: matrix.z.get(i, j),
            raw: matrix.raw.get(i, j),
        })
        .collect();
    out.sort_by(|a, b| b.z.total_cmp(&a.z).then_with(|| a.study_id.cmp(&b.study_id)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::matrix::{SimilarityMode, Square};
    use crate::similarity::zscore::zscore_standardize;

    fn matrix() -> SimilarityMatrix {
        let raw = Square::from_rows(&[
            vec![4.0, 3.0, 1.0, 3.0],
            vec![3.0, 4.0, 2.0, 0.0],
            vec![1.0, 2.0, 4.0, 2.5],
            vec![3.0, 0.0, 2.5, 4.0],
        ]);
        let z = zscore_standardize(&raw);
        SimilarityMatrix {
            mode: SimilarityMode::Database,
            ids: vec!["a".into(), "b".into(), "c".into(), "d".into()],
            raw,
            z: z.z,
            population_mean: z.mean,
            population_sd: z.sd,
            degenerate: false,
            excluded: vec![false; 4],
            flags: vec![],
        }
    }

    #[test]
    fn no_threshold_returns_all_sorted() {
        let m = matrix();
        let ids: Vec<_> =
            neighbors(&m, "a", f64::NEG_INFINITY, None).unwrap().into_iter().map(|n| n.study_id).collect();
        // b and d tie on raw 3.0; id breaks the tie.
        assert_eq!(ids, ["b", "d", "c"]);
    }

    #[test]
    fn threshold_above_max_is_empty() {
        let m = matrix();
        let max = m.max_pair_z().unwrap();
        assert!(neighbors(&m, "a", max + 1e-9, None).unwrap().is_empty());
    }

    #[test]
    fn filter_restricts_partners() {
        let m = matrix();
        let f: BTreeSet<String> = ["c".to_string()].into();
        let n = neighbors(&m, "a", f64::NEG_INFINITY, Some(&f)).unwrap();
        assert_eq!(n.len(), 1);
        assert_eq!(n[0].raw, 1.0);
    }

    #[test]
    fn unknown_id() {
        let m = matrix();
        assert!(matches!(neighbors(&m, "zz", 0.0, None), Err(Error::UnknownStudy(_))));
    }
}
