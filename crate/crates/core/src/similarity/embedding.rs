//! Text-embedding providers and the on-disk embedding cache.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{EmbeddingFailure, Error, Result, TextStatus};

/// Anything that turns texts into fixed-dimension vectors.
pub trait EmbeddingProvider: Send + Sync {
    /// Stable identifier; part of the cache key.
    fn name(&self) -> &str;

    fn dimension(&self) -> usize;

    /// One vector per input text, each of length `dimension()`.
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>>;
}

/// Lowercased alphanumeric word tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

/// Deterministic stand-in for an external embedding model: idf-weighted
/// term-frequency vectors over a fitted vocabulary.
///
/// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, so terms shared by every
/// document keep a positive weight.
#[derive(Debug, Clone)]
pub struct FallbackEmbedder {
    name: String,
    vocabulary: BTreeMap<String, usize>,
    idf: Vec<f64>,
}

/// Fit the fallback provider on a corpus of texts.
pub fn fallback_embedder<S: AsRef<str>>(corpus: &[S]) -> Result<FallbackEmbedder> {
    let docs: Vec<BTreeSet<String>> = corpus
        .iter()
        .map(|t| tokenize(t.as_ref()).into_iter().collect())
        .filter(|set: &BTreeSet<String>| !set.is_empty())
        .collect();
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in &docs {
        for term in doc {
            *df.entry(term.clone()).or_default() += 1;
        }
    }
    if df.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let n = docs.len() as f64;
    let mut hasher = Sha256::new();
    let mut vocabulary = BTreeMap::new();
    let mut idf = Vec::with_capacity(df.len());
    for (i, (term, count)) in df.iter().enumerate() {
        hasher.update(term.as_bytes());
        hasher.update([0]);
        hasher.update(count.to_le_bytes());
        vocabulary.insert(term.clone(), i);
        idf.push(((1.0 + n) / (1.0 + *count as f64)).ln() + 1.0);
    }
    let fingerprint = hex::encode(&hasher.finalize()[..8]);
    Ok(FallbackEmbedder { name: format!("fallback-tfidf-{fingerprint}"), vocabulary, idf })
}

impl FallbackEmbedder {
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.vocabulary.keys().map(String::as_str)
    }

    fn vector(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.idf.len()];
        for token in tokenize(text) {
            if let Some(&i) = self.vocabulary.get(&token) {
                v[i] += 1.0;
            }
        }
        for (x, w) in v.iter_mut().zip(&self.idf) {
            *x *= w;
        }
        v
    }
}

impl EmbeddingProvider for FallbackEmbedder {
    fn name(&self) -> &str {
        &self.name
    }

    fn dimension(&self) -> usize {
        self.idf.len()
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    provider: String,
    vector: Vec<f64>,
}

/// Content-addressed vector store: one JSON file per (provider, text).
#[derive(Debug, Clone)]
pub struct EmbeddingCache {
    dir: PathBuf,
}

impl EmbeddingCache {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(EmbeddingCache { dir: dir.as_ref().to_path_buf() })
    }

    pub fn key(provider: &str, text: &str) -> String {
        let mut h = Sha256::new();
        h.update(provider.as_bytes());
        h.update([0]);
        h.update(text.as_bytes());
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, provider: &str, text: &str) -> Option<Vec<f64>> {
        let bytes = fs::read(self.path(&Self::key(provider, text))).ok()?;
        let entry: CacheEntry = serde_json::from_slice(&bytes).ok()?;
        (entry.provider == provider).then_some(entry.vector)
    }

    pub fn put(&self, provider: &str, text: &str, vector: &[f64]) -> Result<()> {
        let entry = CacheEntry { provider: provider.to_string(), vector: vector.to_vec() };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(&serde_json::to_vec(&entry)?)?;
        tmp.persist(self.path(&Self::key(provider, text))).map_err(|e| Error::Io(e.error))?;
        Ok(())
    }
}

/// Wraps a provider with the disk cache and batches the misses.
pub struct CachedProvider<P> {
    inner: P,
    cache: EmbeddingCache,
    batch_size: usize,
}

impl<P: EmbeddingProvider> CachedProvider<P> {
    pub fn new(inner: P, cache: EmbeddingCache, batch_size: usize) -> Self {
        CachedProvider { inner, cache, batch_size: batch_size.max(1) }
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedProvider<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        let name = self.inner.name();
        let mut out: Vec<Option<Vec<f64>>> = texts.iter().map(|t| self.cache.get(name, t)).collect();
        let mut statuses: Vec<TextStatus> =
            out.iter().map(|v| if v.is_some() { TextStatus::Cached } else { TextStatus::Ok }).collect();
        let misses: Vec<usize> = (0..texts.len()).filter(|&i| out[i].is_none()).collect();
        let mut failed = false;
        for chunk in misses.chunks(self.batch_size) {
            let batch: Vec<&str> = chunk.iter().map(|&i| texts[i]).collect();
            match self.inner.embed(&batch) {
                Ok(vectors) if vectors.len() == batch.len() => {
                    for (&i, v) in chunk.iter().zip(vectors) {
                        self.cache.put(name, texts[i], &v)?;
                        out[i] = Some(v);
                    }
                }
                Ok(vectors) => {
                    failed = true;
                    let msg =
                        format!("provider returned {} vectors for {} texts", vectors.len(), batch.len());
                    for &i in chunk {
                        statuses[i] = TextStatus::Failed(msg.clone());
                    }
                }
                Err(e) => {
                    failed = true;
                    for &i in chunk {
                        statuses[i] = TextStatus::Failed(e.to_string());
                    }
                }
            }
        }
        if failed {
            return Err(Error::Embedding(EmbeddingFailure { provider: name.to_string(), statuses }));
        }
        Ok(out.into_iter().map(|v| v.expect("all texts embedded")).collect())
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        (**self).embed(texts)
    }
}
