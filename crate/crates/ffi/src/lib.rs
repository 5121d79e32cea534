//! C ABI over the studyscope engine.
//!
//! Snapshots are opaque handles. Every fallible call returns a
//! [`StudyscopeStatus`]; on failure a message is available from
//! [`studyscope_last_error`] on the same thread. Strings returned through
//! out-parameters are owned by the caller and released with
//! [`studyscope_string_free`].

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use studyscope::config::{load_snapshot, Config};
use studyscope::query::{self, FilterSpec};
use studyscope::similarity::{neighbors, SimilarityMode};
use studyscope::snapshot::CorpusSnapshot;
use studyscope::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyscopeStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    UnknownStudy = 6,
    UnknownCriterion = 7,
    InvalidFilter = 8,
    MatrixAbsent = 9,
    Internal = 10,
}

/// Opaque snapshot handle.
pub struct StudyscopeSnapshot {
    inner: CorpusSnapshot,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> StudyscopeStatus {
    match e {
        Error::Io(_) => StudyscopeStatus::Io,
        Error::Validation(_) => StudyscopeStatus::Validation,
        Error::UnknownStudy(_) => StudyscopeStatus::UnknownStudy,
        Error::UnknownCriterion(_) | Error::UnknownColumn(_) => StudyscopeStatus::UnknownCriterion,
        Error::InvalidFilter(_) => StudyscopeStatus::InvalidFilter,
        Error::MatrixAbsent(_) => StudyscopeStatus::MatrixAbsent,
        Error::Schema(_)
        | Error::Header { .. }
        | Error::Encoding { .. }
        | Error::Csv(_)
        | Error::Bibtex { .. }
        | Error::Json(_)
        | Error::Config(_)
        | Error::Alias { .. } => StudyscopeStatus::Parse,
        _ => StudyscopeStatus::Internal,
    }
}

struct Failure(StudyscopeStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(StudyscopeStatus::Parse, e.to_string())
    }
}

/// Run `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> StudyscopeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            StudyscopeStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            StudyscopeStatus::Internal
        }
    }
}

/// # Safety
/// `p` is NULL or a valid NUL-terminated string.
unsafe fn required_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(StudyscopeStatus::NullArgument, format!("{what} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(StudyscopeStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

/// # Safety
/// `p` is NULL or a valid NUL-terminated string.
unsafe fn optional_str<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        required_str(p, what).map(Some)
    }
}

/// # Safety
/// `snap` is NULL or a live handle.
unsafe fn handle<'a>(snap: *const StudyscopeSnapshot) -> Result<&'a CorpusSnapshot, Failure> {
    snap.as_ref()
        .map(|s| &s.inner)
        .ok_or_else(|| Failure(StudyscopeStatus::NullArgument, "snapshot is NULL".into()))
}

/// # Safety
/// `out` is NULL or writable.
unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(StudyscopeStatus::NullArgument, "out is NULL".into()));
    }
    let c = CString::new(s).map_err(|_| Failure(StudyscopeStatus::Internal, "output contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

/// # Safety
/// `out` is NULL or writable.
unsafe fn write_handle(out: *mut *mut StudyscopeSnapshot, snap: CorpusSnapshot) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(StudyscopeStatus::NullArgument, "out is NULL".into()));
    }
    *out = Box::into_raw(Box::new(StudyscopeSnapshot { inner: snap }));
    Ok(())
}

fn filtered(snap: &CorpusSnapshot, filter_json: Option<&str>) -> Result<Vec<String>, Failure> {
    let spec = FilterSpec::from_json(filter_json.unwrap_or(""))?;
    Ok(query::apply_filter(snap, &spec)?)
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn studyscope_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Build a snapshot from a TOML config file.
///
/// # Safety
/// `config_path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn studyscope_snapshot_open_config(
    config_path: *const c_char,
    out: *mut *mut StudyscopeSnapshot,
) -> StudyscopeStatus {
    guard(|| {
        let path = required_str(config_path, "config_path")?;
        let (snap, _) = load_snapshot(&Config::load(path)?)?;
        write_handle(out, snap)
    })
}

/// Build a snapshot from individual input files. Every path except
/// `corpus_path` may be NULL.
///
/// # Safety
/// Non-NULL paths are NUL-terminated strings; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn studyscope_snapshot_open_files(
    schema_path: *const c_char,
    corpus_path: *const c_char,
    abstracts_path: *const c_char,
    bibliography_path: *const c_char,
    references_dir: *const c_char,
    out: *mut *mut StudyscopeSnapshot,
) -> StudyscopeStatus {
    guard(|| {
        let mut cfg = Config::default();
        cfg.data.corpus = Some(PathBuf::from(required_str(corpus_path, "corpus_path")?));
        cfg.data.schema = optional_str(schema_path, "schema_path")?.map(PathBuf::from);
        cfg.data.abstracts = optional_str(abstracts_path, "abstracts_path")?.map(PathBuf::from);
        cfg.data.bibliography = optional_str(bibliography_path, "bibliography_path")?.map(PathBuf::from);
        cfg.data.references = optional_str(references_dir, "references_dir")?.map(PathBuf::from);
        let (snap, _) = load_snapshot(&cfg)?;
        write_handle(out, snap)
    })
}

/// Load a snapshot previously saved as JSON.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn studyscope_snapshot_load(
    path: *const c_char,
    out: *mut *mut StudyscopeSnapshot,
) -> StudyscopeStatus {
    guard(|| {
        let p = required_str(path, "path")?;
        write_handle(out, CorpusSnapshot::load(p)?)
    })
}

/// # Safety
/// `snap` is NULL or a handle from one of the open functions, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn studyscope_snapshot_free(snap: *mut StudyscopeSnapshot) {
    if !snap.is_null() {
        drop(Box::from_raw(snap));
    }
}

/// # Safety
/// `snap` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn studyscope_snapshot_id(
    snap: *const StudyscopeSnapshot,
    out: *mut *mut c_char,
) -> StudyscopeStatus {
    guard(|| {
        let s = handle(snap)?;
        write_string(out, s.id().to_string())
    })
}

/// Number of records; 0 for a NULL handle.
///
/// # Safety
/// `snap` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn studyscope_snapshot_len(snap: *const StudyscopeSnapshot) -> usize {
    snap.as_ref().map_or(0, |s| s.inner.len())
}

/// Matching study ids as a JSON array. `filter_json` may be NULL.
///
/// # Safety
/// `snap` is a live handle; strings are NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn studyscope_filter(
    snap: *const StudyscopeSnapshot,
    filter_json: *const c_char,
    out: *mut *mut c_char,
) -> StudyscopeStatus {
    guard(|| {
        let s = handle(snap)?;
        let ids = filtered(s, optional_str(filter_json, "filter_json")?)?;
        write_string(out, serde_json::to_string(&ids)?)
    })
}

/// Distribution of one criterion over the filtered records, as JSON.
///
/// # Safety
/// `snap` is a live handle; strings are NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn studyscope_distribution(
    snap: *const StudyscopeSnapshot,
    filter_json: *const c_char,
    criterion: *const c_char,
    max_bars: usize,
    out: *mut *mut c_char,
) -> StudyscopeStatus {
    guard(|| {
        let s = handle(snap)?;
        let ids = filtered(s, optional_str(filter_json, "filter_json")?)?;
        let d = query::distribution(s, &ids, required_str(criterion, "criterion")?, max_bars)?;
        write_string(out, serde_json::to_string(&d)?)
    })
}

/// Neighbors of `study_id` at or above `threshold`, as JSON. `mode` is
/// "db" or "abstract".
///
/// # Safety
/// `snap` is a live handle; strings are NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn studyscope_neighbors(
    snap: *const StudyscopeSnapshot,
    study_id: *const c_char,
    mode: *const c_char,
    threshold: f64,
    out: *mut *mut c_char,
) -> StudyscopeStatus {
    guard(|| {
        let s = handle(snap)?;
        let mode: SimilarityMode = required_str(mode, "mode")?.parse()?;
        let found = neighbors(s.matrix(mode)?, required_str(study_id, "study_id")?, threshold, None)?;
        write_string(out, serde_json::to_string(&found)?)
    })
}

/// CSV export of the filtered records. `columns_json` is a JSON array of
/// column names, or NULL for every column.
///
/// # Safety
/// `snap` is a live handle; strings are NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn studyscope_export_csv(
    snap: *const StudyscopeSnapshot,
    filter_json: *const c_char,
    columns_json: *const c_char,
    out: *mut *mut c_char,
) -> StudyscopeStatus {
    guard(|| {
        let s = handle(snap)?;
        let ids = filtered(s, optional_str(filter_json, "filter_json")?)?;
        let columns: Vec<String> = match optional_str(columns_json, "columns_json")? {
            Some(j) => {
                let cols: Vec<String> = serde_json::from_str(j)?;
                let distinct: BTreeSet<&String> = cols.iter().collect();
                if distinct.len() != cols.len() {
                    return Err(Failure(StudyscopeStatus::InvalidFilter, "duplicate column".into()));
                }
                cols
            }
            None => query::all_columns(s),
        };
        let bytes = query::export_csv(s, &ids, &columns)?;
        let text = String::from_utf8(bytes)
            .map_err(|_| Failure(StudyscopeStatus::Internal, "non-UTF-8 export".into()))?;
        write_string(out, text)
    })
}

/// # Safety
/// `s` is NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn studyscope_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
