//! Database (criteria) and abstract (embedding) similarity.

mod abstracts;
mod database;
pub mod embedding;
pub mod export;
mod matrix;
mod neighbors;
mod normalize;
mod zscore;

pub use abstracts::{abstract_similarity, cosine};
pub use database::{criterion_similarity, database_similarity, participating_criteria, set_similarity};
pub use embedding::{fallback_embedder, CachedProvider, EmbeddingCache, EmbeddingProvider, FallbackEmbedder};
pub use matrix::{SimilarityMatrix, SimilarityMode, Square};
pub use neighbors::{neighbors, Neighbor};
pub use normalize::{normalize_scalar, transform, CorpusStats, Range};
pub use zscore::{pair_moments, zscore_standardize, zscore_standardize_masked, ZScores};
