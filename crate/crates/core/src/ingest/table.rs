//! Corpus table parsing: one CSV row per study.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::ingest::{decode_utf8, AliasMap, IngestReport, AUTHORS_COLUMN, STUDY_ID_COLUMN};
use crate::model::{
    split_multi, Criterion, CriterionKind, FieldValue, StudyRecord, NA_LITERAL, YEAR_CRITERION,
};
use crate::schema::Schema;
use crate::validate::{validate_record, Rule, Violation};

/// Parse a single cell for `criterion`, applying the alias map to labels.
pub fn parse_cell(
    criterion: &Criterion,
    raw: &str,
    aliases: &AliasMap,
) -> std::result::Result<FieldValue, (Rule, String)> {
    let cell = raw.trim();
    if cell == NA_LITERAL {
        return Ok(FieldValue::NotApplicable);
    }
    let name = criterion.name.as_str();
    match criterion.kind {
        CriterionKind::Binary => {
            let label = aliases.apply(name, cell);
            match label.to_ascii_lowercase().as_str() {
                "yes" | "true" => Ok(FieldValue::Binary(true)),
                "no" | "false" => Ok(FieldValue::Binary(false)),
                "" => Err((Rule::EmptyCell, String::new())),
                _ => Err((Rule::UnknownOption, label.to_string())),
            }
        }
        CriterionKind::Ordinal => {
            if cell.is_empty() {
                return Err((Rule::EmptyCell, String::new()));
            }
            Ok(FieldValue::Ordinal(aliases.apply(name, cell).to_string()))
        }
        CriterionKind::Categorical => Ok(FieldValue::Categories(
            split_multi(cell).map(|l| aliases.apply(name, l).to_string()).collect(),
        )),
        CriterionKind::Numeric => {
            if cell.is_empty() {
                return Err((Rule::EmptyCell, String::new()));
            }
            cell.parse::<f64>()
                .map(FieldValue::Number)
                .map_err(|_| (Rule::KindMismatch, format!("{cell:?} is not a number")))
        }
        CriterionKind::Text => Ok(FieldValue::Text(cell.to_string())),
    }
}

/// Check the header row against the schema contract.
pub fn check_header(header: &[String], schema: &Schema) -> Result<()> {
    let expected: Vec<&str> = [STUDY_ID_COLUMN, AUTHORS_COLUMN].into_iter().chain(schema.names()).collect();
    let got: HashSet<&str> = header.iter().map(String::as_str).collect();
    let missing: Vec<String> = expected.iter().filter(|n| !got.contains(*n)).map(|n| n.to_string()).collect();
    let mut seen = HashSet::new();
    let unexpected: Vec<String> = header
        .iter()
        .filter(|h| !expected.contains(&h.as_str()) || !seen.insert(h.as_str()))
        .cloned()
        .collect();
    if missing.is_empty() && unexpected.is_empty() {
        Ok(())
    } else {
        Err(Error::Header { missing, unexpected })
    }
}

/// Build one record from a header→cell map. Returns the record (when the
/// row is structurally usable) and every violation found.
pub fn record_from_cells(
    cells: &BTreeMap<&str, &str>,
    schema: &Schema,
    aliases: &AliasMap,
) -> (Option<StudyRecord>, Vec<Violation>) {
    let study_id = cells.get(STUDY_ID_COLUMN).copied().unwrap_or("").trim().to_string();
    let authors: Vec<String> =
        cells.get(AUTHORS_COLUMN).map(|a| split_multi(a).map(str::to_string).collect()).unwrap_or_default();
    let mut violations = Vec::new();
    let mut values = BTreeMap::new();
    for c in schema.criteria() {
        let Some(raw) = cells.get(c.name.as_str()) else {
            continue;
        };
        match parse_cell(c, raw, aliases) {
            Ok(v) => {
                values.insert(c.name.clone(), v);
            }
            Err((rule, detail)) => violations.push(Violation {
                study_id: study_id.clone(),
                criterion: Some(c.name.clone()),
                rule,
                detail,
            }),
        }
    }
    let year = match values.get(YEAR_CRITERION) {
        Some(FieldValue::Number(y)) if y.fract() == 0.0 && y.abs() < 1e6 => Some(*y as i32),
        Some(FieldValue::Number(y)) => {
            violations.push(Violation {
                study_id: study_id.clone(),
                criterion: Some(YEAR_CRITERION.to_string()),
                rule: Rule::KindMismatch,
                detail: format!("year {y} is not an integer"),
            });
            None
        }
        _ => None,
    };
    let record = StudyRecord {
        study_id,
        year: year.unwrap_or_default(),
        values,
        authors,
        abstract_text: String::new(),
        bib_entry: None,
    };
    // Parse failures already left their criterion out of `values`; skip the
    // resulting duplicate "missing criterion" reports. Without a usable year
    // the remaining fields are still checked so every problem is reported.
    let failed: BTreeSet<Option<String>> = violations.iter().map(|v| v.criterion.clone()).collect();
    let year_known = year.is_some();
    violations.extend(validate_record(&record, schema).into_iter().filter(|v| {
        !(v.rule == Rule::MissingCriterion && failed.contains(&v.criterion))
            && (year_known || v.rule != Rule::YearMismatch)
    }));
    (year_known.then_some(record), violations)
}

pub fn parse_corpus_table(
    bytes: &[u8],
    schema: &Schema,
    aliases: &AliasMap,
) -> Result<(Vec<StudyRecord>, IngestReport)> {
    let text = decode_utf8(bytes)?;
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    check_header(&header, schema)?;
    aliases.check_against(schema)?;

    let mut report = IngestReport::default();
    let mut records: Vec<StudyRecord> = Vec::new();
    let mut ids = HashSet::new();
    let mut unknown = BTreeSet::new();

    for (row_no, row) in rdr.records().enumerate() {
        let row = row?;
        report.rows_parsed += 1;
        if row.len() != header.len() {
            report.violations.push(Violation {
                study_id: row.get(0).unwrap_or("").trim().to_string(),
                criterion: None,
                rule: Rule::KindMismatch,
                detail: format!("row {} has {} cells, header has {}", row_no + 2, row.len(), header.len()),
            });
            report.rejected_rows += 1;
            continue;
        }
        let cells: BTreeMap<&str, &str> = header.iter().map(String::as_str).zip(row.iter()).collect();
        let (record, violations) = record_from_cells(&cells, schema, aliases);
        for v in &violations {
            if v.rule == Rule::UnknownOption {
                if let Some(c) = &v.criterion {
                    unknown.insert((c.clone(), v.detail.clone()));
                }
            }
        }
        let rejected = !violations.is_empty();
        report.violations.extend(violations);
        match record {
            Some(r) if !rejected => {
                if !ids.insert(r.study_id.clone()) {
                    report.duplicate_ids.push(r.study_id);
                    report.rejected_rows += 1;
                } else {
                    records.push(r);
                }
            }
            _ => report.rejected_rows += 1,
        }
    }
    report.unknown_labels = unknown.into_iter().collect();
    report.record_count = records.len();
    Ok((records, report))
}
