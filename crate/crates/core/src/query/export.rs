//! Byte-stable CSV export of selected records and columns.

use crate::error::{Error, Result};
use crate::ingest::{AUTHORS_COLUMN, STUDY_ID_COLUMN};
use crate::model::{StudyRecord, MULTI_SEPARATOR, NA_LITERAL};
use crate::snapshot::CorpusSnapshot;

/// Every column in ingestion order: study id, authors, then the schema.
pub fn all_columns(snapshot: &CorpusSnapshot) -> Vec<String> {
    [STUDY_ID_COLUMN, AUTHORS_COLUMN]
        .into_iter()
        .chain(snapshot.schema().names())
        .map(str::to_string)
        .collect()
}

fn cell(record: &StudyRecord, column: &str) -> String {
    match column {
        STUDY_ID_COLUMN => record.study_id.clone(),
        AUTHORS_COLUMN => record.authors.join(&MULTI_SEPARATOR.to_string()),
        name => record.value(name).map(|v| v.to_cell()).unwrap_or_else(|| NA_LITERAL.to_string()),
    }
}

/// Header equals `columns`; one row per id in the given order.
pub fn export_csv(snapshot: &CorpusSnapshot, ids: &[String], columns: &[String]) -> Result<Vec<u8>> {
    for c in columns {
        if c != STUDY_ID_COLUMN && c != AUTHORS_COLUMN && snapshot.schema().get(c).is_none() {
            return Err(Error::UnknownColumn(c.clone()));
        }
    }
    let records = ids.iter().map(|id| snapshot.require_record(id)).collect::<Result<Vec<_>>>()?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(columns)?;
    for r in records {
        w.write_record(columns.iter().map(|c| cell(r, c)))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}
