use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use studyscope_ffi::*;

fn fixture(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/synthetic").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn open() -> *mut StudyscopeSnapshot {
    let mut snap = ptr::null_mut();
    let status = unsafe {
        studyscope_snapshot_open_files(
            fixture("schema.toml").as_ptr(),
            fixture("corpus.csv").as_ptr(),
            fixture("abstracts.csv").as_ptr(),
            fixture("corpus.bib").as_ptr(),
            fixture("references").as_ptr(),
            &mut snap,
        )
    };
    assert_eq!(status, StudyscopeStatus::Ok, "{:?}", last_error());
    snap
}

fn last_error() -> Option<String> {
    let p = studyscope_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn take(s: *mut std::ffi::c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { studyscope_string_free(s) };
    out
}

#[test]
fn open_query_free() {
    let snap = open();
    assert_eq!(unsafe { studyscope_snapshot_len(snap) }, 10);

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { studyscope_snapshot_id(snap, &mut out) }, StudyscopeStatus::Ok);
    assert_eq!(take(out).len(), 32);

    let filter = CString::new(r#"{"Sensors":{"include":["EEG","EOG","EMG"]}}"#).unwrap();
    assert_eq!(unsafe { studyscope_filter(snap, filter.as_ptr(), &mut out) }, StudyscopeStatus::Ok);
    let ids: Vec<String> = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(ids, ["s03", "s06", "s08"]);

    let crit = CString::new("Input Body Part").unwrap();
    assert_eq!(
        unsafe { studyscope_distribution(snap, ptr::null(), crit.as_ptr(), 3, &mut out) },
        StudyscopeStatus::Ok
    );
    let d: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(d["total_records"], 10);
    assert_eq!(d["truncated"], true);
    assert_eq!(d["bars"].as_array().unwrap().len(), 3);

    let id = CString::new("s04").unwrap();
    let mode = CString::new("db").unwrap();
    assert_eq!(
        unsafe { studyscope_neighbors(snap, id.as_ptr(), mode.as_ptr(), 0.0, &mut out) },
        StudyscopeStatus::Ok
    );
    let n: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(n[0]["study_id"], "s10");

    let cols = CString::new(r#"["study_id","Year"]"#).unwrap();
    assert_eq!(
        unsafe { studyscope_export_csv(snap, filter.as_ptr(), cols.as_ptr(), &mut out) },
        StudyscopeStatus::Ok
    );
    assert_eq!(take(out), "study_id,Year\ns03,2020\ns06,2022\ns08,2023\n");

    unsafe { studyscope_snapshot_free(snap) };
}

#[test]
fn error_codes_and_messages() {
    let snap = open();
    let mut out = ptr::null_mut();

    let bad = CString::new(r#"{"Nope":{}}"#).unwrap();
    assert_eq!(
        unsafe { studyscope_filter(snap, bad.as_ptr(), &mut out) },
        StudyscopeStatus::UnknownCriterion
    );
    assert!(last_error().unwrap().contains("Nope"));

    let clash = CString::new(r#"{"Sensors":{"include":["IMU"],"exclude":["IMU"]}}"#).unwrap();
    assert_eq!(unsafe { studyscope_filter(snap, clash.as_ptr(), &mut out) }, StudyscopeStatus::InvalidFilter);

    let id = CString::new("missing").unwrap();
    let mode = CString::new("db").unwrap();
    assert_eq!(
        unsafe { studyscope_neighbors(snap, id.as_ptr(), mode.as_ptr(), 0.0, &mut out) },
        StudyscopeStatus::UnknownStudy
    );

    assert_eq!(unsafe { studyscope_snapshot_id(ptr::null(), &mut out) }, StudyscopeStatus::NullArgument);
    assert_eq!(unsafe { studyscope_snapshot_len(ptr::null()) }, 0);

    // Success clears the message.
    assert_eq!(unsafe { studyscope_snapshot_id(snap, &mut out) }, StudyscopeStatus::Ok);
    take(out);
    assert!(last_error().is_none());

    let mut other = ptr::null_mut();
    let missing = CString::new("/nonexistent/corpus.csv").unwrap();
    assert_eq!(
        unsafe {
            studyscope_snapshot_open_files(
                ptr::null(),
                missing.as_ptr(),
                ptr::null(),
                ptr::null(),
                ptr::null(),
                &mut other,
            )
        },
        StudyscopeStatus::Io
    );
    assert!(other.is_null());

    unsafe {
        studyscope_snapshot_free(snap);
        studyscope_snapshot_free(ptr::null_mut());
        studyscope_string_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header =
        std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/studyscope.h"))
            .unwrap();
    for sym in [
        "studyscope_last_error",
        "studyscope_snapshot_open_config",
        "studyscope_snapshot_open_files",
        "studyscope_snapshot_load",
        "studyscope_snapshot_free",
        "studyscope_snapshot_id",
        "studyscope_snapshot_len",
        "studyscope_filter",
        "studyscope_distribution",
        "studyscope_neighbors",
        "studyscope_export_csv",
        "studyscope_string_free",
        "typedef struct StudyscopeSnapshot StudyscopeSnapshot",
        "STUDYSCOPE_STATUS_MATRIX_ABSENT = 9",
    ] {
        assert!(header.contains(sym), "header lacks {sym}");
    }
}

/// Compile and run a C program against the header and shared library.
/// Skipped when no C compiler is on PATH.
#[test]
fn c_program_links_and_runs() {
    use std::process::Command;

    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/capi-* -> target/<profile>
    let lib_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    if !lib_dir.join("libstudyscope_ffi.so").exists() {
        eprintln!("skipping: shared library not built for this target");
        return;
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out_dir = tempfile_dir();
    let exe = out_dir.join("smoke");
    let compiled = Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-lstudyscope_ffi")
        .arg("-o")
        .arg(&exe)
        .status();
    match compiled {
        Err(_) => {
            eprintln!("skipping: no C compiler ({cc})");
            return;
        }
        Ok(s) => assert!(s.success(), "C compile failed"),
    }
    let args: Vec<String> = ["schema.toml", "corpus.csv", "abstracts.csv", "corpus.bib", "references"]
        .iter()
        .map(|n| fixture(n).into_string().unwrap())
        .collect();
    let run = Command::new(&exe).args(&args).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
    std::fs::remove_dir_all(&out_dir).ok();
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("studyscope-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
