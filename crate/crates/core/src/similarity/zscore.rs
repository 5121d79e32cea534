//! Standardization of pairwise scores against the population of all
//! unordered off-diagonal pairs.

use super::matrix::Square;

#[derive(Debug, Clone, PartialEq)]
pub struct ZScores {
    pub z: Square,
    pub mean: f64,
    pub sd: f64,
    pub degenerate: bool,
}

/// Population moments of a list of pair scores. `None` when the population
/// is degenerate (fewer than two values or all values equal).
pub fn pair_moments(values: &[f64]) -> Option<(f64, f64)> {
    if values.len() < 2 || values.windows(2).all(|w| w[0] == w[1]) {
        return None;
    }
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count).sqrt();
    (sd > 0.0 && sd.is_finite()).then_some((mean, sd))
}

pub fn zscore_standardize(raw: &Square) -> ZScores {
    zscore_standardize_masked(raw, &vec![true; raw.n()])
}

/// Standardize using only pairs whose endpoints are both `included`.
/// Rows of excluded indices, and every entry of a degenerate population,
/// get z = 0.
pub fn zscore_standardize_masked(raw: &Square, included: &[bool]) -> ZScores {
    let n = raw.n();
    assert_eq!(included.len(), n);
    let mut values = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            if included[i] && included[j] {
                values.push(raw.get(i, j));
            }
        }
    }
    let mut z = Square::zeros(n);
    let Some((mean, sd)) = pair_moments(&values) else {
        let mean = values.first().copied().unwrap_or(0.0);
        return ZScores { z, mean, sd: 0.0, degenerate: true };
    };
    for i in 0..n {
        if !included[i] {
            continue;
        }
        for (j, &keep) in included.iter().enumerate().skip(i) {
            if keep {
                z.set_sym(i, j, (raw.get(i, j) - mean) / sd);
            }
        }
    }
    ZScores { z, mean, sd, degenerate: false }
}
