//! Service and pipeline configuration: one TOML file plus `STUDYSCOPE_*`
//! environment overrides. Relative paths resolve against the config file's
//! directory.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DecisionLog, GraphConfig};
use crate::ingest::{self, AliasMap, Bibliography, IngestReport};
use crate::model::StudyRecord;
use crate::schema::{default_schema, Schema};
use crate::similarity::{fallback_embedder, CachedProvider, EmbeddingCache};
use crate::snapshot::{BuildSettings, CorpusSnapshot, Embedding, SnapshotBuilder};
use crate::submissions::SubmissionStore;

pub const ENV_PREFIX: &str = "STUDYSCOPE_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderChoice {
    #[default]
    Fallback,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub provider: ProviderChoice,
    pub cache_dir: Option<PathBuf>,
    pub batch_size: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig { provider: ProviderChoice::Fallback, cache_dir: None, batch_size: 32 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Criterion manifest; the built-in schema when absent.
    pub schema: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub abstracts: Option<PathBuf>,
    pub bibliography: Option<PathBuf>,
    /// Directory of `<study_id>.bib` reference lists.
    pub references: Option<PathBuf>,
    /// Alias CSV per criterion.
    pub aliases: BTreeMap<String, PathBuf>,
    pub decisions: Option<PathBuf>,
    pub submissions: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
    /// Shared secret for the maintainer endpoints; they are disabled
    /// without one.
    pub maintainer_token: Option<String>,
    /// Accepted submissions per rolling minute.
    pub submissions_per_minute: u32,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { bind: "127.0.0.1:8080".into(), maintainer_token: None, submissions_per_minute: 10 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub server: ServerConfig,
    pub data: DataConfig,
    pub embedding: EmbeddingConfig,
    pub graph: GraphConfig,
    /// Explicit database-similarity criteria; schema flags when absent.
    pub participating: Option<BTreeSet<String>>,
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

fn parse_env<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("{ENV_PREFIX}{key}: cannot parse {value:?}")))
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Read a config file, resolve its relative paths and apply the process
    /// environment.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        cfg.apply_env(std::env::vars())?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let d = &mut self.data;
        for p in [
            &mut d.schema,
            &mut d.corpus,
            &mut d.abstracts,
            &mut d.bibliography,
            &mut d.references,
            &mut d.decisions,
            &mut d.submissions,
        ] {
            resolve(base, p);
        }
        for p in d.aliases.values_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        resolve(base, &mut self.embedding.cache_dir);
    }

    /// Apply `STUDYSCOPE_*` overrides from `vars`; other keys are ignored.
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> Result<()> {
        for (k, v) in vars {
            let Some(key) = k.strip_prefix(ENV_PREFIX) else { continue };
            match key {
                "BIND" => self.server.bind = v,
                "MAINTAINER_TOKEN" => self.server.maintainer_token = Some(v),
                "SUBMISSIONS_PER_MINUTE" => self.server.submissions_per_minute = parse_env(key, &v)?,
                "SCHEMA" => self.data.schema = Some(v.into()),
                "CORPUS" => self.data.corpus = Some(v.into()),
                "ABSTRACTS" => self.data.abstracts = Some(v.into()),
                "BIBLIOGRAPHY" => self.data.bibliography = Some(v.into()),
                "REFERENCES" => self.data.references = Some(v.into()),
                "DECISIONS" => self.data.decisions = Some(v.into()),
                "SUBMISSIONS" => self.data.submissions = Some(v.into()),
                "EMBEDDING_PROVIDER" => {
                    self.embedding.provider = match v.as_str() {
                        "fallback" => ProviderChoice::Fallback,
                        "none" => ProviderChoice::None,
                        other => return Err(Error::Config(format!("unknown embedding provider {other:?}"))),
                    }
                }
                "EMBEDDING_CACHE" => self.embedding.cache_dir = Some(v.into()),
                "EDGE_THRESHOLD" => self.graph.citations.edge_threshold = parse_env(key, &v)?,
                "FLAG_THRESHOLD" => self.graph.citations.flag_threshold = parse_env(key, &v)?,
                "MAX_NAME_DISTANCE" => self.graph.names.max_flag_distance = parse_env(key, &v)?,
                _ => {}
            }
        }
        let m = &self.graph.citations;
        if !(0.0..=1.0).contains(&m.flag_threshold) || m.flag_threshold > m.edge_threshold {
            return Err(Error::Config(format!(
                "matcher thresholds must satisfy 0 <= flag ({}) <= edge ({})",
                m.flag_threshold, m.edge_threshold
            )));
        }
        Ok(())
    }

    pub fn settings(&self) -> BuildSettings {
        BuildSettings { graph: self.graph, participating: self.participating.clone() }
    }

    pub fn schema(&self) -> Result<Schema> {
        match &self.data.schema {
            Some(p) => Schema::from_manifest(&std::fs::read_to_string(p)?),
            None => Ok(default_schema()),
        }
    }

    pub fn aliases(&self) -> Result<AliasMap> {
        let mut map = AliasMap::new();
        for (criterion, path) in &self.data.aliases {
            map.load_csv(criterion, &std::fs::read(path)?)?;
        }
        Ok(map)
    }

    /// Embedding choice for a given record set. The fallback is fitted on
    /// the records' abstracts, so it is recomputed on every rebuild.
    pub fn embedding_for(&self, records: &[StudyRecord]) -> Result<Embedding> {
        match self.embedding.provider {
            ProviderChoice::None => Ok(Embedding::Disabled),
            ProviderChoice::Fallback => match &self.embedding.cache_dir {
                None => Ok(Embedding::Fallback),
                Some(dir) => {
                    let texts: Vec<&str> = records.iter().map(|r| r.abstract_text.as_str()).collect();
                    match fallback_embedder(&texts) {
                        Ok(f) => Ok(Embedding::Provider(Arc::new(CachedProvider::new(
                            f,
                            EmbeddingCache::open(dir)?,
                            self.embedding.batch_size,
                        )))),
                        Err(Error::EmptyVocabulary) => Ok(Embedding::Fallback),
                        Err(e) => Err(e),
                    }
                }
            },
        }
    }
}

/// Everything read from disk on the way to a snapshot.
#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub ingest: IngestReport,
    pub abstract_notes: Vec<String>,
    pub bibliography_warnings: Vec<ingest::BibWarning>,
}

/// Reference lists from a directory of `<study_id>.bib` files, sorted by
/// file name.
pub fn read_reference_dir(dir: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("bib") {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
        out.push((stem.to_string(), std::fs::read(&path)?));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Run the full ingestion pipeline described by `config`. Rejected rows are
/// reported, not fatal; accepted submissions are folded in.
pub fn load_snapshot(config: &Config) -> Result<(CorpusSnapshot, LoadReport)> {
    let schema = config.schema()?;
    let corpus_path =
        config.data.corpus.as_ref().ok_or_else(|| Error::Config("no corpus table configured".into()))?;
    let aliases = config.aliases()?;
    let (mut records, ingest_report) =
        ingest::parse_corpus_table(&std::fs::read(corpus_path)?, &schema, &aliases)?;
    let mut report = LoadReport { ingest: ingest_report, ..Default::default() };

    if let Some(path) = &config.data.submissions {
        for (_, record) in SubmissionStore::open(path)?.accepted_records()? {
            records.retain(|r| r.study_id != record.study_id);
            records.push(record);
        }
    }

    let ids: BTreeSet<String> = records.iter().map(|r| r.study_id.clone()).collect();
    let mut abstracts = BTreeMap::new();
    if let Some(path) = &config.data.abstracts {
        let loaded = ingest::load_abstracts(&std::fs::read(path)?, &ids)?;
        abstracts = loaded.texts;
        report.abstract_notes = loaded.notes;
    }
    for r in &mut records {
        if let Some(t) = abstracts.get(&r.study_id) {
            if !t.is_empty() || r.abstract_text.is_empty() {
                r.abstract_text = t.clone();
            }
        }
    }

    let bibliography = match &config.data.bibliography {
        Some(path) => {
            let refs = match &config.data.references {
                Some(dir) => read_reference_dir(dir)?,
                None => Vec::new(),
            };
            Some(ingest::load_bibliography(&std::fs::read(path)?, &refs)?)
        }
        None => None,
    };
    if let Some(b) = &bibliography {
        report.bibliography_warnings = b.warnings.clone();
    }

    let decisions = match &config.data.decisions {
        Some(p) => DecisionLog::new(p).load()?,
        None => Vec::new(),
    };

    let embedding = config.embedding_for(&records)?;
    let mut builder = SnapshotBuilder::new(schema, records)
        .decisions(decisions)
        .settings(config.settings())
        .embedding(embedding);
    if let Some(b) = bibliography {
        builder = builder.bibliography(Bibliography { warnings: Vec::new(), ..b });
    }
    Ok((builder.build()?, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_env() {
        let mut cfg = Config::from_toml(
            r#"
            [server]
            bind = "0.0.0.0:9000"
            [data]
            corpus = "corpus.csv"
            [graph.citations]
            edge_threshold = 0.95
            "#,
        )
        .unwrap();
        cfg.resolve_paths(Path::new("/data"));
        assert_eq!(cfg.data.corpus.as_deref(), Some(Path::new("/data/corpus.csv")));
        assert_eq!(cfg.graph.citations.edge_threshold, 0.95);
        assert_eq!(cfg.graph.citations.title_weight, 0.7);

        cfg.apply_env([
            ("STUDYSCOPE_BIND".to_string(), "127.0.0.1:1".to_string()),
            ("STUDYSCOPE_EMBEDDING_PROVIDER".to_string(), "none".to_string()),
            ("UNRELATED".to_string(), "x".to_string()),
        ])
        .unwrap();
        assert_eq!(cfg.server.bind, "127.0.0.1:1");
        assert_eq!(cfg.embedding.provider, ProviderChoice::None);
    }

    #[test]
    fn bad_env_values_are_errors() {
        let mut cfg = Config::default();
        assert!(cfg.apply_env([("STUDYSCOPE_FLAG_THRESHOLD".to_string(), "high".to_string())]).is_err());
        assert!(cfg.apply_env([("STUDYSCOPE_FLAG_THRESHOLD".to_string(), "0.95".to_string())]).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::from_toml("[server]\nport = 1").is_err());
    }
}
