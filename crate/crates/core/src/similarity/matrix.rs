use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityMode {
    Database,
    Abstract,
}

impl SimilarityMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SimilarityMode::Database => "database",
            SimilarityMode::Abstract => "abstract",
        }
    }
}

impl fmt::Display for SimilarityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SimilarityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "db" | "database" => Ok(SimilarityMode::Database),
            "abstract" | "abstracts" => Ok(SimilarityMode::Abstract),
            other => Err(Error::Config(format!("unknown similarity mode {other:?}"))),
        }
    }
}

/// Dense square matrix with symmetric writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Square {
    n: usize,
    data: Vec<f64>,
}

impl Square {
    pub fn zeros(n: usize) -> Self {
        Square { n, data: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Square::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Write `v` to both (i, j) and (j, i).
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// Pairwise study similarity for one mode, raw and standardized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub mode: SimilarityMode,
    pub ids: Vec<String>,
    pub raw: Square,
    pub z: Square,
    pub population_mean: f64,
    pub population_sd: f64,
    /// Set when the pair population has fewer than two pairs or zero
    /// variance; all z-scores are then 0.
    pub degenerate: bool,
    /// Studies left out of the pair statistics and of neighbor results
    /// (abstract mode: empty abstracts).
    pub excluded: Vec<bool>,
    pub flags: Vec<String>,
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn raw_between(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.raw.get(self.index_of(a)?, self.index_of(b)?))
    }

    pub fn z_between(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.z.get(self.index_of(a)?, self.index_of(b)?))
    }

    /// Unordered off-diagonal pairs that take part in the statistics.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.len();
        (0..n)
            .flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !self.excluded[i] && !self.excluded[j])
    }

    pub fn max_pair_z(&self) -> Option<f64> {
        self.pairs().map(|(i, j)| self.z.get(i, j)).reduce(f64::max)
    }
}
