//! Parsing of the corpus table, abstracts, bibliography and alias maps.

mod abstracts;
mod aliases;
pub mod bibtex;
mod table;

use serde::Serialize;

pub use abstracts::{load_abstracts, Abstracts, ABSTRACT_COLUMN};
pub use aliases::AliasMap;
pub use bibtex::{load_bibliography, parse_bibtex, BibWarning, Bibliography};
pub use table::{check_header, parse_cell, parse_corpus_table, record_from_cells};

use crate::error::{Error, Result};
use crate::validate::Violation;

pub const STUDY_ID_COLUMN: &str = "study_id";
pub const AUTHORS_COLUMN: &str = "authors";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub rows_parsed: usize,
    pub rejected_rows: usize,
    pub record_count: usize,
    pub violations: Vec<Violation>,
    /// (criterion, label) pairs outside a closed vocabulary.
    pub unknown_labels: Vec<(String, String)>,
    pub duplicate_ids: Vec<String>,
}

impl IngestReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.duplicate_ids.is_empty()
    }
}

pub(crate) fn decode_utf8(bytes: &[u8]) -> Result<&str> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Encoding { offset: e.valid_up_to() })?;
    Ok(text.strip_prefix('\u{feff}').unwrap_or(text))
}
