use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::ingest::{decode_utf8, STUDY_ID_COLUMN};

pub const ABSTRACT_COLUMN: &str = "abstract";

/// Abstract text per study, total over the corpus ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Abstracts {
    pub texts: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

/// Read a two-column `study_id,abstract` CSV. Ids outside `corpus_ids` are
/// a hard error; corpus ids absent from the file get an empty abstract and
/// a note.
pub fn load_abstracts(bytes: &[u8], corpus_ids: &BTreeSet<String>) -> Result<Abstracts> {
    let text = decode_utf8(bytes)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != [STUDY_ID_COLUMN, ABSTRACT_COLUMN] {
        let missing = [STUDY_ID_COLUMN, ABSTRACT_COLUMN]
            .into_iter()
            .filter(|c| !header.iter().any(|h| h == c))
            .map(str::to_string)
            .collect();
        let unexpected =
            header.iter().filter(|h| *h != STUDY_ID_COLUMN && *h != ABSTRACT_COLUMN).cloned().collect();
        return Err(Error::Header { missing, unexpected });
    }
    let mut out = Abstracts::default();
    for row in rdr.records() {
        let row = row?;
        let id = row[0].trim();
        if !corpus_ids.contains(id) {
            return Err(Error::UnknownStudy(id.to_string()));
        }
        let prev = out.texts.insert(id.to_string(), row[1].trim().to_string());
        if prev.is_some() {
            out.notes.push(format!("{id}: duplicate abstract, last one kept"));
        }
    }
    for id in corpus_ids {
        if !out.texts.contains_key(id) {
            out.texts.insert(id.clone(), String::new());
            out.notes.push(format!("{id}: no abstract, left empty"));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(list: &[&str]) -> BTreeSet<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn total_mapping() {
        let doc = "study_id,abstract\na,one\nb,two\nc,\"three, with comma\"\n";
        let a = load_abstracts(doc.as_bytes(), &ids(&["a", "b", "c"])).unwrap();
        assert_eq!(a.texts.len(), 3);
        assert_eq!(a.texts["c"], "three, with comma");
        assert!(a.notes.is_empty());
    }

    #[test]
    fn unknown_id_is_fatal() {
        let doc = "study_id,abstract\nX9,text\n";
        let err = load_abstracts(doc.as_bytes(), &ids(&["a"])).unwrap_err();
        assert!(err.to_string().contains("X9"));
    }

    #[test]
    fn missing_gets_empty_with_note() {
        let doc = "study_id,abstract\na,one\n";
        let a = load_abstracts(doc.as_bytes(), &ids(&["a", "b"])).unwrap();
        assert_eq!(a.texts["b"], "");
        assert_eq!(a.notes.len(), 1);
        assert!(a.notes[0].starts_with("b:"));
    }
}
