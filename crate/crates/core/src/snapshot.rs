//! Immutable, content-addressed corpus snapshots.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{extract_graph, GraphConfig, ReviewDecision, ScholarlyGraph, Verdict};
use crate::ingest::Bibliography;
use crate::model::{BibEntry, StudyRecord};
use crate::schema::Schema;
use crate::similarity::{
    abstract_similarity, database_similarity, fallback_embedder, EmbeddingProvider, SimilarityMatrix,
    SimilarityMode,
};
use crate::validate::{validate_record, Rule, Violation};

/// Which embedding provider backs the abstract matrix.
#[derive(Clone, Default)]
pub enum Embedding {
    /// Deterministic TF-IDF fitted on the corpus abstracts.
    #[default]
    Fallback,
    Provider(Arc<dyn EmbeddingProvider>),
    /// Skip the abstract matrix.
    Disabled,
}

impl std::fmt::Debug for Embedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Embedding::Fallback => f.write_str("Fallback"),
            Embedding::Provider(p) => write!(f, "Provider({})", p.name()),
            Embedding::Disabled => f.write_str("Disabled"),
        }
    }
}

/// Settings that shape derived content; part of the snapshot hash.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildSettings {
    pub graph: GraphConfig,
    /// Explicit database-similarity criteria; `None` uses the schema flags.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub participating: Option<BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSnapshot {
    snapshot_id: String,
    schema: Schema,
    /// Sorted by study id.
    records: Vec<StudyRecord>,
    /// Reference lists per citing study.
    references: BTreeMap<String, Vec<BibEntry>>,
    decisions: Vec<ReviewDecision>,
    settings: BuildSettings,
    embedding_provider: Option<String>,
    graph: ScholarlyGraph,
    matrices: BTreeMap<SimilarityMode, SimilarityMatrix>,
    /// Non-fatal build notes (missing abstracts, skipped matrices, ...).
    notes: Vec<String>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl CorpusSnapshot {
    pub fn id(&self) -> &str {
        &self.snapshot_id
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn records(&self) -> &[StudyRecord] {
        &self.records
    }

    pub fn record(&self, id: &str) -> Option<&StudyRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    pub fn require_record(&self, id: &str) -> Result<&StudyRecord> {
        self.record(id).ok_or_else(|| Error::UnknownStudy(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.study_id.as_str())
    }

    pub fn references(&self) -> &BTreeMap<String, Vec<BibEntry>> {
        &self.references
    }

    pub fn decisions(&self) -> &[ReviewDecision] {
        &self.decisions
    }

    pub fn settings(&self) -> &BuildSettings {
        &self.settings
    }

    pub fn graph(&self) -> &ScholarlyGraph {
        &self.graph
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn matrix(&self, mode: SimilarityMode) -> Result<&SimilarityMatrix> {
        self.matrices.get(&mode).ok_or_else(|| Error::MatrixAbsent(mode.to_string()))
    }

    pub fn has_matrix(&self, mode: SimilarityMode) -> bool {
        self.matrices.contains_key(&mode)
    }

    /// A builder seeded with this snapshot's inputs.
    pub fn to_builder(&self) -> SnapshotBuilder {
        SnapshotBuilder {
            schema: self.schema.clone(),
            records: self.records.clone(),
            abstracts: BTreeMap::new(),
            bibliography: None,
            references: self.references.clone(),
            decisions: self.decisions.clone(),
            settings: self.settings.clone(),
            embedding: Embedding::Fallback,
        }
    }

    /// New snapshot with `record` added, or replacing the record with the
    /// same id.
    pub fn with_record(&self, record: StudyRecord, embedding: Embedding) -> Result<CorpusSnapshot> {
        let mut b = self.to_builder().embedding(embedding);
        b.records.retain(|r| r.study_id != record.study_id);
        b.records.push(record);
        b.build()
    }

    /// New snapshot with one more review decision applied.
    pub fn with_decision(&self, decision: ReviewDecision, embedding: Embedding) -> Result<CorpusSnapshot> {
        let mut b = self.to_builder().embedding(embedding);
        b.decisions.push(decision);
        b.build()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        std::fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        serde_json::to_writer(&mut tmp, self)?;
        tmp.persist(path).map_err(|e| Error::Io(e.error))?;
        Ok(())
    }

    /// Load a saved snapshot and check that its id still matches its inputs.
    pub fn load(path: impl AsRef<Path>) -> Result<CorpusSnapshot> {
        let bytes = std::fs::read(path)?;
        let mut snap: CorpusSnapshot = serde_json::from_slice(&bytes)?;
        snap.index = index_of(&snap.records);
        let expected = content_hash(
            &snap.schema,
            &snap.records,
            &snap.references,
            &snap.decisions,
            &snap.settings,
            snap.embedding_provider.as_deref(),
        )?;
        if expected != snap.snapshot_id {
            return Err(Error::Config(format!(
                "snapshot file is inconsistent: id {} but content hashes to {expected}",
                snap.snapshot_id
            )));
        }
        Ok(snap)
    }
}

fn index_of(records: &[StudyRecord]) -> BTreeMap<String, usize> {
    records.iter().enumerate().map(|(i, r)| (r.study_id.clone(), i)).collect()
}

/// Effective decisions: the last verdict per key, ordered by key.
fn effective_decisions(decisions: Vec<ReviewDecision>) -> Vec<ReviewDecision> {
    let mut latest: BTreeMap<String, ReviewDecision> = BTreeMap::new();
    for d in decisions {
        latest.insert(d.key.clone(), d);
    }
    latest.into_values().collect()
}

fn content_hash(
    schema: &Schema,
    records: &[StudyRecord],
    references: &BTreeMap<String, Vec<BibEntry>>,
    decisions: &[ReviewDecision],
    settings: &BuildSettings,
    embedding_provider: Option<&str>,
) -> Result<String> {
    #[derive(Serialize)]
    struct Inputs<'a> {
        schema: &'a Schema,
        records: &'a [StudyRecord],
        references: &'a BTreeMap<String, Vec<BibEntry>>,
        decisions: Vec<(&'a str, Verdict)>,
        settings: &'a BuildSettings,
        embedding_provider: Option<&'a str>,
    }
    let inputs = Inputs {
        schema,
        records,
        references,
        decisions: decisions.iter().map(|d| (d.key.as_str(), d.verdict)).collect(),
        settings,
        embedding_provider,
    };
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&inputs)?);
    Ok(hex::encode(&h.finalize()[..16]))
}

pub struct SnapshotBuilder {
    schema: Schema,
    records: Vec<StudyRecord>,
    abstracts: BTreeMap<String, String>,
    bibliography: Option<BTreeMap<String, BibEntry>>,
    references: BTreeMap<String, Vec<BibEntry>>,
    decisions: Vec<ReviewDecision>,
    settings: BuildSettings,
    embedding: Embedding,
}

impl SnapshotBuilder {
    pub fn new(schema: Schema, records: Vec<StudyRecord>) -> Self {
        SnapshotBuilder {
            schema,
            records,
            abstracts: BTreeMap::new(),
            bibliography: None,
            references: BTreeMap::new(),
            decisions: Vec::new(),
            settings: BuildSettings::default(),
            embedding: Embedding::default(),
        }
    }

    /// Abstract text per study id; overrides text already on the records.
    pub fn abstracts(mut self, texts: BTreeMap<String, String>) -> Self {
        self.abstracts = texts;
        self
    }

    /// Corpus entries are attached to records whose id equals the citation
    /// key; reference lists feed the citation matcher.
    pub fn bibliography(mut self, bib: Bibliography) -> Self {
        self.bibliography = Some(bib.entries);
        self.references = bib.references;
        self
    }

    pub fn decisions(mut self, decisions: Vec<ReviewDecision>) -> Self {
        self.decisions = decisions;
        self
    }

    pub fn settings(mut self, settings: BuildSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn embedding(mut self, embedding: Embedding) -> Self {
        self.embedding = embedding;
        self
    }

    pub fn build(self) -> Result<CorpusSnapshot> {
        let SnapshotBuilder {
            schema,
            mut records,
            abstracts,
            bibliography,
            references,
            decisions,
            settings,
            embedding,
        } = self;

        records.sort_by(|a, b| a.study_id.cmp(&b.study_id));
        let mut violations: Vec<Violation> = Vec::new();
        for w in records.windows(2) {
            if w[0].study_id == w[1].study_id {
                violations.push(Violation {
                    study_id: w[1].study_id.clone(),
                    criterion: None,
                    rule: Rule::DuplicateStudyId,
                    detail: String::new(),
                });
            }
        }
        for r in &records {
            violations.extend(validate_record(r, &schema));
        }
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        if let Some(id) =
            abstracts.keys().find(|id| records.binary_search_by(|r| r.study_id.cmp(id)).is_err())
        {
            return Err(Error::UnknownStudy(id.clone()));
        }

        let mut notes = Vec::new();
        for r in &mut records {
            if let Some(text) = abstracts.get(&r.study_id) {
                r.abstract_text = text.clone();
            }
            if let Some(entries) = &bibliography {
                r.bib_entry = entries.get(&r.study_id).cloned();
                if r.bib_entry.is_none() {
                    notes.push(format!("{}: no bibliography entry", r.study_id));
                }
            }
            if r.authors.is_empty() {
                if let Some(bib) = &r.bib_entry {
                    r.authors = bib.authors();
                }
            }
        }

        let decisions = effective_decisions(decisions);
        let graph = extract_graph(&records, &references, &settings.graph, &decisions);

        let mut matrices = BTreeMap::new();
        match database_similarity(&schema, &records, settings.participating.as_ref()) {
            Ok(m) => {
                matrices.insert(SimilarityMode::Database, m);
            }
            Err(Error::DegenerateCorpus(msg)) => notes.push(format!("database matrix skipped: {msg}")),
            Err(e) => return Err(e),
        }

        let provider: Option<Arc<dyn EmbeddingProvider>> = match embedding {
            Embedding::Disabled => None,
            Embedding::Provider(p) => Some(p),
            Embedding::Fallback => {
                let texts: Vec<&str> = records.iter().map(|r| r.abstract_text.as_str()).collect();
                match fallback_embedder(&texts) {
                    Ok(f) => Some(Arc::new(f)),
                    Err(e) => {
                        notes.push(format!("abstract matrix skipped: {e}"));
                        None
                    }
                }
            }
        };
        let provider_name = provider.as_ref().map(|p| p.name().to_string());
        if let Some(p) = &provider {
            match abstract_similarity(&records, p.as_ref()) {
                Ok(m) => {
                    matrices.insert(SimilarityMode::Abstract, m);
                }
                Err(e @ (Error::DegenerateCorpus(_) | Error::Embedding(_) | Error::EmptyVocabulary)) => {
                    notes.push(format!("abstract matrix skipped: {e}"))
                }
                Err(e) => return Err(e),
            }
        }

        let snapshot_id =
            content_hash(&schema, &records, &references, &decisions, &settings, provider_name.as_deref())?;
        let index = index_of(&records);
        Ok(CorpusSnapshot {
            snapshot_id,
            schema,
            records,
            references,
            decisions,
            settings,
            embedding_provider: provider_name,
            graph,
            matrices,
            notes,
            index,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Criterion, CriterionKind, FieldValue};

    fn schema() -> Schema {
        let mut sensors = Criterion::new("Sensors", CriterionKind::Categorical);
        sensors.multi_valued = true;
        Schema::new(vec![Criterion::new("Year", CriterionKind::Numeric), sensors]).unwrap()
    }

    fn rec(id: &str, year: i32, sensors: &[&str], abs: &str) -> StudyRecord {
        StudyRecord {
            study_id: id.into(),
            year,
            values: BTreeMap::from([
                ("Year".to_string(), FieldValue::Number(year as f64)),
                ("Sensors".to_string(), FieldValue::categories(sensors.iter().copied())),
            ]),
            authors: vec![],
            abstract_text: abs.into(),
            bib_entry: None,
        }
    }

    fn corpus() -> Vec<StudyRecord> {
        vec![
            rec("b", 2021, &["IMU"], "head gestures with an imu"),
            rec("a", 2020, &["IMU", "Microphone"], "teeth clicks heard by a microphone"),
            rec("c", 2022, &["EEG"], "brain signals in the ear"),
        ]
    }

    #[test]
    fn deterministic_id_and_sorted_records() {
        let s1 = SnapshotBuilder::new(schema(), corpus()).build().unwrap();
        let s2 = SnapshotBuilder::new(schema(), corpus().into_iter().rev().collect()).build().unwrap();
        assert_eq!(s1.id(), s2.id());
        assert_eq!(s1.ids().collect::<Vec<_>>(), ["a", "b", "c"]);
        assert!(s1.has_matrix(SimilarityMode::Database));
        assert!(s1.has_matrix(SimilarityMode::Abstract));
        assert_eq!(s1.record("b").unwrap().year, 2021);
    }

    #[test]
    fn edit_changes_id() {
        let s1 = SnapshotBuilder::new(schema(), corpus()).build().unwrap();
        let mut edited = corpus();
        edited[0].values.insert("Sensors".into(), FieldValue::categories(["EOG"]));
        let s2 = SnapshotBuilder::new(schema(), edited).build().unwrap();
        assert_ne!(s1.id(), s2.id());
    }

    #[test]
    fn invalid_record_fails_build() {
        let mut bad = corpus();
        bad[0].values.remove("Sensors");
        assert!(matches!(SnapshotBuilder::new(schema(), bad).build(), Err(Error::Validation(_))));
        let mut dup = corpus();
        dup.push(dup[0].clone());
        match SnapshotBuilder::new(schema(), dup).build() {
            Err(Error::Validation(v)) => assert_eq!(v[0].rule, Rule::DuplicateStudyId),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn disabled_embedding_leaves_abstract_matrix_absent() {
        let s = SnapshotBuilder::new(schema(), corpus()).embedding(Embedding::Disabled).build().unwrap();
        assert!(matches!(s.matrix(SimilarityMode::Abstract), Err(Error::MatrixAbsent(_))));
    }

    #[test]
    fn with_record_adds_and_rehashes() {
        let s = SnapshotBuilder::new(schema(), corpus()).build().unwrap();
        let s2 = s.with_record(rec("d", 2023, &["IMU"], ""), Embedding::Fallback).unwrap();
        assert_eq!(s2.len(), 4);
        assert_ne!(s.id(), s2.id());
        assert!(s2.record("d").is_some());
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("snap.json");
        let s = SnapshotBuilder::new(schema(), corpus()).build().unwrap();
        s.save(&p).unwrap();
        let back = CorpusSnapshot::load(&p).unwrap();
        assert_eq!(back.id(), s.id());
        assert_eq!(back.record("c"), s.record("c"));
    }
}
