//! Community submissions awaiting maintainer review.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{record_from_cells, AliasMap, STUDY_ID_COLUMN};
use crate::model::StudyRecord;
use crate::schema::Schema;
use crate::validate::{Rule, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubmissionStatus {
    Pending,
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub id: String,
    pub contact: String,
    #[serde(default)]
    pub note: String,
    /// Parsed candidate record; absent for note-only submissions.
    pub record: Option<StudyRecord>,
    pub status: SubmissionStatus,
    /// Snapshot that first contained the record, once accepted.
    #[serde(default)]
    pub snapshot_id: Option<String>,
}

/// Parse a candidate record from a column→cell map. Unknown columns are
/// violations; so is anything `validate_record` reports.
pub fn parse_candidate(
    cells: &BTreeMap<String, String>,
    schema: &Schema,
) -> std::result::Result<StudyRecord, Vec<Violation>> {
    let study_id = cells.get(STUDY_ID_COLUMN).cloned().unwrap_or_default();
    let mut violations: Vec<Violation> = cells
        .keys()
        .filter(|k| {
            k.as_str() != STUDY_ID_COLUMN
                && k.as_str() != crate::ingest::AUTHORS_COLUMN
                && schema.get(k).is_none()
        })
        .map(|k| Violation {
            study_id: study_id.clone(),
            criterion: Some(k.clone()),
            rule: Rule::UnknownCriterion,
            detail: String::new(),
        })
        .collect();
    let borrowed: BTreeMap<&str, &str> = cells.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
    let (record, found) = record_from_cells(&borrowed, schema, &AliasMap::new());
    violations.extend(found);
    if record.is_none() && violations.is_empty() {
        violations.push(Violation {
            study_id: study_id.clone(),
            criterion: Some(crate::model::YEAR_CRITERION.to_string()),
            rule: Rule::MissingCriterion,
            detail: String::new(),
        });
    }
    match record {
        Some(r) if violations.is_empty() => Ok(r),
        _ => Err(violations),
    }
}

/// Cells from a CSV fragment: a header line and one data row.
pub fn cells_from_csv(fragment: &str) -> Result<BTreeMap<String, String>> {
    let mut rdr = csv::Reader::from_reader(fragment.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = rdr.records();
    let row = rows.next().ok_or_else(|| Error::Config("CSV fragment has no data row".into()))??;
    if rows.next().is_some() {
        return Err(Error::Config("CSV fragment must hold exactly one row".into()));
    }
    if row.len() != header.len() {
        return Err(Error::Config(format!(
            "CSV fragment row has {} cells, header has {}",
            row.len(),
            header.len()
        )));
    }
    Ok(header.into_iter().zip(row.iter().map(str::to_string)).collect())
}

/// JSON file of submissions, rewritten atomically on every change.
#[derive(Debug)]
pub struct SubmissionStore {
    path: Option<PathBuf>,
    items: Vec<Submission>,
}

impl SubmissionStore {
    /// A store that lives only in memory.
    pub fn ephemeral() -> Self {
        SubmissionStore { path: None, items: Vec::new() }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let items = match std::fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        Ok(SubmissionStore { path: Some(path), items })
    }

    pub fn list(&self) -> &[Submission] {
        &self.items
    }

    pub fn get(&self, id: &str) -> Option<&Submission> {
        self.items.iter().find(|s| s.id == id)
    }

    pub fn accepted_records(&self) -> Result<Vec<(String, StudyRecord)>> {
        Ok(self
            .items
            .iter()
            .filter(|s| s.status == SubmissionStatus::Accepted)
            .filter_map(|s| s.record.clone().map(|r| (s.id.clone(), r)))
            .collect())
    }

    pub fn add(&mut self, contact: String, note: String, record: Option<StudyRecord>) -> Result<Submission> {
        let sub = Submission {
            id: format!("sub-{:06}", self.items.len() + 1),
            contact,
            note,
            record,
            status: SubmissionStatus::Pending,
            snapshot_id: None,
        };
        self.items.push(sub.clone());
        self.save()?;
        Ok(sub)
    }

    pub fn set_status(
        &mut self,
        id: &str,
        status: SubmissionStatus,
        snapshot_id: Option<String>,
    ) -> Result<Submission> {
        let item =
            self.items.iter_mut().find(|s| s.id == id).ok_or_else(|| Error::UnknownReview(id.to_string()))?;
        item.status = status;
        item.snapshot_id = snapshot_id;
        let out = item.clone();
        self.save()?;
        Ok(out)
    }

    fn save(&self) -> Result<()> {
        let Some(path) = &self.path else { return Ok(()) };
        let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        std::fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        serde_json::to_writer_pretty(&mut tmp, &self.items)?;
        tmp.persist(path).map_err(|e| Error::Io(e.error))?;
        Ok(())
    }
}
