use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ingest::STUDY_ID_COLUMN;
use crate::model::{Criterion, NA_LITERAL};
use crate::query::{self, owned_labels, FilterSpec};
use crate::similarity::{neighbors, SimilarityMode};
use crate::snapshot::CorpusSnapshot;
use crate::submissions::{cells_from_csv, parse_candidate, SubmissionStatus};

use super::{ApiError, AppState};

type ApiResult<T> = Result<T, ApiError>;

const DEFAULT_MAX_BARS: usize = 20;
const DEFAULT_Z_THRESHOLD: f64 = 1.0;
const NEIGHBOR_SUMMARY: usize = 5;

#[derive(Debug, Default, Deserialize)]
pub struct ViewQuery {
    snapshot: Option<String>,
    filter: Option<String>,
    columns: Option<String>,
    criterion: Option<String>,
    max_bars: Option<usize>,
    mode: Option<String>,
    focus: Option<String>,
    threshold: Option<f64>,
    edges: Option<String>,
    color_by: Option<String>,
}

/// The current snapshot, or 404 when the caller pinned a different one.
fn snapshot_for(state: &AppState, pinned: Option<&str>) -> ApiResult<Arc<CorpusSnapshot>> {
    let snap = state.current();
    match pinned {
        Some(id) if id != snap.id() => Err(ApiError::new(
            StatusCode::NOT_FOUND,
            format!("unknown snapshot {id:?}; current is {}", snap.id()),
        )),
        _ => Ok(snap),
    }
}

fn filtered_ids(snap: &CorpusSnapshot, filter: Option<&str>) -> ApiResult<Vec<String>> {
    let spec = FilterSpec::from_json(filter.unwrap_or(""))?;
    Ok(query::apply_filter(snap, &spec)?)
}

fn parse_columns(raw: Option<&str>) -> Option<Vec<String>> {
    raw.map(|s| s.split(',').map(str::trim).filter(|c| !c.is_empty()).map(str::to_string).collect())
}

fn echo<'a>(snap: &'a CorpusSnapshot, names: impl IntoIterator<Item = &'a str>) -> Vec<&'a Criterion> {
    names.into_iter().filter_map(|n| snap.schema().get(n)).collect()
}

pub async fn snapshot_info(State(state): State<Arc<AppState>>) -> Json<Value> {
    let snap = state.current();
    let matrices: Vec<SimilarityMode> = [SimilarityMode::Database, SimilarityMode::Abstract]
        .into_iter()
        .filter(|m| snap.has_matrix(*m))
        .collect();
    Json(json!({
        "snapshot_id": snap.id(),
        "records": snap.len(),
        "schema": snap.schema(),
        "matrices": matrices,
        "review_queue": snap.graph().review_queue.len(),
        "notes": snap.notes(),
    }))
}

pub async fn studies(
    State(state): State<Arc<AppState>>,
    Query(q): Query<ViewQuery>,
) -> ApiResult<Json<Value>> {
    let snap = snapshot_for(&state, q.snapshot.as_deref())?;
    let ids = filtered_ids(&snap, q.filter.as_deref())?;
    let columns = parse_columns(q.columns.as_deref())
        .unwrap_or_else(|| snap.schema().display_defaults().map(|c| c.name.clone()).collect());
    // Reuse the export rules for cell rendering and column validation.
    let csv = query::export_csv(&snap, &ids, &columns)?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(csv.as_slice());
    let mut rows = Vec::with_capacity(ids.len());
    for (id, row) in ids.iter().zip(rdr.records()) {
        let row = row.map_err(crate::error::Error::from)?;
        let cells: serde_json::Map<String, Value> =
            columns.iter().zip(row.iter()).map(|(c, v)| (c.clone(), Value::String(v.to_string()))).collect();
        rows.push(json!({ "study_id": id, "cells": cells }));
    }
    Ok(Json(json!({
        "snapshot_id": snap.id(),
        "schema": echo(&snap, columns.iter().map(String::as_str)),
        "columns": columns,
        "count": rows.len(),
        "records": rows,
    })))
}

#[derive(Serialize)]
struct NeighborSummary {
    study_id: String,
    z: f64,
    raw: f64,
}

pub async fn study(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<ViewQuery>,
) -> ApiResult<Json<Value>> {
    let snap = snapshot_for(&state, q.snapshot.as_deref())?;
    let record = snap.require_record(&id)?;
    let values: serde_json::Map<String, Value> = snap
        .schema()
        .criteria()
        .iter()
        .map(|c| {
            let cell = record.value(&c.name).map(|v| v.to_cell()).unwrap_or_else(|| NA_LITERAL.to_string());
            (c.name.clone(), Value::String(cell))
        })
        .collect();
    let mut similar = serde_json::Map::new();
    for mode in [SimilarityMode::Database, SimilarityMode::Abstract] {
        if let Ok(m) = snap.matrix(mode) {
            let top: Vec<NeighborSummary> = neighbors(m, &id, f64::NEG_INFINITY, None)?
                .into_iter()
                .take(NEIGHBOR_SUMMARY)
                .map(|n| NeighborSummary { study_id: n.study_id, z: n.z, raw: n.raw })
                .collect();
            similar.insert(mode.to_string(), json!(top));
        }
    }
    Ok(Json(json!({
        "snapshot_id": snap.id(),
        "schema": snap.schema(),
        "record": {
            "study_id": record.study_id,
            "year": record.year,
            "authors": record.authors,
            "values": values,
            "abstract": record.abstract_text,
            "bib_entry": record.bib_entry,
            "link": record.bib_entry.as_ref().and_then(|b| b.link()),
        },
        "neighbors": similar,
    })))
}

pub async fn distribution(
    State(state): State<Arc<AppState>>,
    Query(q): Query<ViewQuery>,
) -> ApiResult<Json<Value>> {
    let snap = snapshot_for(&state, q.snapshot.as_deref())?;
    let criterion =
        q.criterion.as_deref().ok_or_else(|| ApiError::bad_request("missing criterion parameter"))?;
    let ids = filtered_ids(&snap, q.filter.as_deref())?;
    let dist = query::distribution(&snap, &ids, criterion, q.max_bars.unwrap_or(DEFAULT_MAX_BARS))?;
    Ok(Json(json!({
        "snapshot_id": snap.id(),
        "schema": echo(&snap, [criterion]),
        "criterion": dist.criterion,
        "bars": dist.bars,
        "truncated": dist.truncated,
        "total_records": dist.total_records,
        "na_count": dist.na_count,
    })))
}

pub async fn similarity(
    State(state): State<Arc<AppState>>,
    Query(q): Query<ViewQuery>,
) -> ApiResult<Json<Value>> {
    let snap = snapshot_for(&state, q.snapshot.as_deref())?;
    let mode: SimilarityMode = q.mode.as_deref().unwrap_or("db").parse()?;
    let threshold = q.threshold.unwrap_or(DEFAULT_Z_THRESHOLD);
    if threshold.is_nan() {
        return Err(ApiError::bad_request("threshold must be a number"));
    }
    let ids = filtered_ids(&snap, q.filter.as_deref())?;
    let matrix = snap.matrix(mode)?;
    let keep: BTreeSet<&str> = ids.iter().map(String::as_str).collect();

    let nodes: Vec<Value> = ids
        .iter()
        .map(|id| {
            let r = snap.require_record(id).expect("filtered ids exist");
            let i = matrix.index_of(id).expect("matrix covers every record");
            json!({ "study_id": id, "year": r.year, "excluded": matrix.excluded[i] })
        })
        .collect();
    let edges: Vec<Value> = matrix
        .pairs()
        .filter(|&(i, j)| keep.contains(matrix.ids[i].as_str()) && keep.contains(matrix.ids[j].as_str()))
        .filter(|&(i, j)| matrix.z.get(i, j) >= threshold)
        .map(|(i, j)| {
            json!({
                "a": matrix.ids[i],
                "b": matrix.ids[j],
                "raw": matrix.raw.get(i, j),
                "z": matrix.z.get(i, j),
            })
        })
        .collect();
    let mut body = json!({
        "snapshot_id": snap.id(),
        "schema": echo(&snap, snap.schema().display_defaults().map(|c| c.name.as_str())),
        "mode": mode,
        "threshold": threshold,
        "degenerate": matrix.degenerate,
        "nodes": nodes,
        "edges": edges,
    });
    if let Some(focus) = &q.focus {
        let filter: BTreeSet<String> = ids.iter().cloned().collect();
        let ranked = neighbors(matrix, focus, threshold, Some(&filter))?;
        body["focus"] = json!(focus);
        body["neighbors"] = json!(ranked);
    }
    Ok(Json(body))
}

pub async fn timeline(
    State(state): State<Arc<AppState>>,
    Query(q): Query<ViewQuery>,
) -> ApiResult<Json<Value>> {
    let snap = snapshot_for(&state, q.snapshot.as_deref())?;
    let (authors, citations) = match q.edges.as_deref().unwrap_or("both") {
        "authors" => (true, false),
        "citations" => (false, true),
        "both" => (true, true),
        other => return Err(ApiError::bad_request(format!("unknown edge kind {other:?}"))),
    };
    if let Some(c) = &q.color_by {
        snap.schema().require(c)?;
    }
    let ids = filtered_ids(&snap, q.filter.as_deref())?;
    let keep: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
    let nodes: Vec<Value> = ids
        .iter()
        .map(|id| {
            let r = snap.require_record(id).expect("filtered ids exist");
            let mut node = json!({ "study_id": id, "year": r.year });
            if let Some(c) = &q.color_by {
                let labels =
                    r.value(c).and_then(owned_labels).unwrap_or_else(|| vec![NA_LITERAL.to_string()]);
                node["labels"] = json!(labels);
            }
            node
        })
        .collect();
    let graph = snap.graph();
    let mut edges = Vec::new();
    if authors {
        edges.extend(
            graph
                .author_edges
                .iter()
                .filter(|e| keep.contains(e.a.as_str()) && keep.contains(e.b.as_str()))
                .map(|e| {
                    json!({
                        "kind": "author",
                        "style": "dashed",
                        "directed": false,
                        "source": e.a,
                        "target": e.b,
                        "shared": e.shared,
                        "reviewed": e.reviewed,
                    })
                }),
        );
    }
    if citations {
        edges.extend(
            graph
                .citation_edges
                .iter()
                .filter(|e| keep.contains(e.citing.as_str()) && keep.contains(e.cited.as_str()))
                .map(|e| {
                    json!({
                        "kind": "citation",
                        "style": "solid",
                        "directed": true,
                        "source": e.citing,
                        "target": e.cited,
                        "confidence": e.confidence,
                        "reviewed": e.reviewed,
                    })
                }),
        );
    }
    Ok(Json(json!({
        "snapshot_id": snap.id(),
        "schema": echo(&snap, q.color_by.as_deref()),
        "color_by": q.color_by,
        "nodes": nodes,
        "edges": edges,
    })))
}

pub async fn export(State(state): State<Arc<AppState>>, Query(q): Query<ViewQuery>) -> ApiResult<Response> {
    let snap = snapshot_for(&state, q.snapshot.as_deref())?;
    let ids = filtered_ids(&snap, q.filter.as_deref())?;
    let columns = parse_columns(q.columns.as_deref()).unwrap_or_else(|| query::all_columns(&snap));
    let body = query::export_csv(&snap, &ids, &columns)?;
    let mut headers = HeaderMap::new();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("text/csv; charset=utf-8"));
    headers.insert(
        header::CONTENT_DISPOSITION,
        HeaderValue::from_static("attachment; filename=\"studies.csv\""),
    );
    headers
        .insert("x-snapshot-id", HeaderValue::from_str(snap.id()).expect("hex ids are valid header values"));
    Ok((headers, body).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmissionRequest {
    contact: String,
    #[serde(default)]
    note: String,
    /// Candidate record as a column→cell map.
    record: Option<BTreeMap<String, String>>,
    /// Candidate record as a CSV fragment (header plus one row).
    row: Option<String>,
    #[serde(rename = "abstract")]
    abstract_text: Option<String>,
}

pub async fn submit(
    State(state): State<Arc<AppState>>,
    body: Result<Json<SubmissionRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    if !state.limiter.check() {
        return Err(ApiError::new(StatusCode::TOO_MANY_REQUESTS, "too many submissions; retry later"));
    }
    let Json(req) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    if req.contact.trim().is_empty() {
        return Err(ApiError::bad_request("contact is required"));
    }
    let cells = match (req.record, req.row) {
        (Some(_), Some(_)) => return Err(ApiError::bad_request("give either record or row, not both")),
        (Some(map), None) => Some(map),
        (None, Some(row)) => Some(cells_from_csv(&row)?),
        (None, None) => None,
    };
    if cells.is_none() && req.note.trim().is_empty() {
        return Err(ApiError::bad_request("a submission needs a record or a note"));
    }
    let snap = state.current();
    let record = match cells {
        None => None,
        Some(cells) => {
            let mut record = parse_candidate(&cells, snap.schema()).map_err(|violations| ApiError {
                status: StatusCode::BAD_REQUEST,
                message: format!("{} field violation(s)", violations.len()),
                violations,
            })?;
            if snap.record(&record.study_id).is_some() {
                return Err(ApiError::bad_request(format!(
                    "{}: {} already exists",
                    STUDY_ID_COLUMN, record.study_id
                )));
            }
            record.abstract_text = req.abstract_text.unwrap_or_default();
            Some(record)
        }
    };
    let sub = state.writer.lock().add(req.contact, req.note, record)?;
    Ok((
        StatusCode::CREATED,
        Json(json!({ "snapshot_id": snap.id(), "submission": { "id": sub.id, "status": sub.status } })),
    ))
}

fn check_maintainer(state: &AppState, headers: &HeaderMap) -> ApiResult<()> {
    let Some(expected) = &state.maintainer_token else {
        return Err(ApiError::new(StatusCode::FORBIDDEN, "maintainer endpoints are disabled"));
    };
    let given = headers.get("x-maintainer-token").and_then(|v| v.to_str().ok()).or_else(|| {
        headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
    });
    match given {
        Some(t) if t == expected => Ok(()),
        _ => Err(ApiError::new(StatusCode::UNAUTHORIZED, "maintainer token required")),
    }
}

pub async fn list_submissions(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
) -> ApiResult<Json<Value>> {
    check_maintainer(&state, &headers)?;
    let snap = state.current();
    let store = state.writer.lock();
    Ok(Json(json!({ "snapshot_id": snap.id(), "submissions": store.list() })))
}

pub async fn accept_submission(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    check_maintainer(&state, &headers)?;
    // Single writer: hold the store lock across rebuild and publish.
    let mut store = state.writer.lock();
    let sub = store
        .get(&id)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown submission {id:?}")))?;
    if sub.status != SubmissionStatus::Pending {
        return Err(ApiError::new(StatusCode::CONFLICT, format!("submission {id} is already resolved")));
    }
    let current = state.current();
    let snapshot_id = match &sub.record {
        Some(record) => {
            let mut records = current.records().to_vec();
            records.push(record.clone());
            let embedding = (state.embedding)(&records)?;
            let next = current.with_record(record.clone(), embedding)?;
            let next_id = next.id().to_string();
            state.publish(next);
            next_id
        }
        None => current.id().to_string(),
    };
    let sub = store.set_status(&id, SubmissionStatus::Accepted, Some(snapshot_id.clone()))?;
    Ok(Json(json!({ "snapshot_id": snapshot_id, "submission": sub })))
}

pub async fn reject_submission(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    check_maintainer(&state, &headers)?;
    let mut store = state.writer.lock();
    match store.get(&id) {
        None => return Err(ApiError::new(StatusCode::NOT_FOUND, format!("unknown submission {id:?}"))),
        Some(s) if s.status != SubmissionStatus::Pending => {
            return Err(ApiError::new(StatusCode::CONFLICT, format!("submission {id} is already resolved")))
        }
        Some(_) => {}
    }
    let sub = store.set_status(&id, SubmissionStatus::Rejected, None)?;
    Ok(Json(json!({ "snapshot_id": state.current().id(), "submission": sub })))
}
