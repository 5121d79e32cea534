//! CSV renderings of a similarity matrix.

use crate::error::Result;
use crate::model::format_number;

use super::matrix::{SimilarityMatrix, Square};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scores {
    Raw,
    Z,
}

/// Square CSV: header row and first column carry the study ids.
pub fn matrix_csv(m: &SimilarityMatrix, scores: Scores) -> Result<String> {
    let data: &Square = match scores {
        Scores::Raw => &m.raw,
        Scores::Z => &m.z,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["study_id".to_string()];
    header.extend(m.ids.iter().cloned());
    w.write_record(&header)?;
    for (i, id) in m.ids.iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(data.row(i).iter().map(|v| format_number(*v)));
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is UTF-8"))
}

/// One line per unordered included pair: `id_a,id_b,raw,z`.
pub fn edge_list_csv(m: &SimilarityMatrix, min_z: Option<f64>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id_a", "id_b", "raw", "z"])?;
    for (i, j) in m.pairs() {
        let z = m.z.get(i, j);
        if min_z.is_some_and(|t| z < t) {
            continue;
        }
        w.write_record([
            m.ids[i].as_str(),
            m.ids[j].as_str(),
            &format_number(m.raw.get(i, j)),
            &format_number(z),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is UTF-8"))
}
