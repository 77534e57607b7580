//! C ABI for the countdown query engine.
//!
//! The interface is handle-based: `cd_engine_new` creates an opaque engine,
//! data is attached with `cd_engine_generate` / `cd_engine_load_dir`,
//! queries return an opaque result handle whose cells are read as rendered
//! text. Every fallible call returns a `CdStatus`; the detailed message for
//! the most recent failure is available from `cd_engine_last_error` until
//! the next call on the same engine.
//!
//! All handles are single-owner: free results with `cd_result_free` and
//! engines with `cd_engine_free`. Handles must not be shared across threads
//! without external synchronization.

// Every entry point null-checks its pointers and returns a status instead
// of dereferencing blindly, which is the contract C callers rely on.
#![allow(clippy::not_unsafe_ptr_arg_deref)]

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use countdown::engine::{Engine, QueryOutput};
use countdown::estimators::EstimatorKind;
use countdown::executor::Executor;
use countdown::optimizer::{Decision, MaxSelectivity, OptimizerConfig};
use countdown::plan::explain;
use countdown::storage::{GeneratorSpec, SchemaKind};

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdStatus {
    Ok = 0,
    /// A pointer argument was null or a string was not valid UTF-8.
    InvalidArgument = 1,
    /// Parsing, planning, or execution failed; see cd_engine_last_error.
    QueryError = 2,
    /// Data generation or loading failed; see cd_engine_last_error.
    DataError = 3,
    /// The engine panicked internally; the handle stays usable.
    Internal = 4,
    /// The output buffer was too small; the required size was written.
    BufferTooSmall = 5,
}

/// Opaque engine handle: catalog, executor, and optimizer configuration.
pub struct CdEngine {
    engine: Engine,
    last_error: Option<CString>,
}

/// Opaque query result: rows plus the rendered plan and push-down report.
pub struct CdResult {
    output: QueryOutput,
    plan_text: CString,
    report_text: CString,
    column_names: Vec<CString>,
}

fn set_error(engine: &mut CdEngine, message: impl Into<Vec<u8>>) {
    engine.last_error = CString::new(message).ok();
}

unsafe fn cstr<'a>(s: *const c_char) -> Option<&'a str> {
    if s.is_null() {
        return None;
    }
    unsafe { CStr::from_ptr(s) }.to_str().ok()
}

/// Creates an engine with an empty catalog and default configuration.
#[no_mangle]
pub extern "C" fn cd_engine_new() -> *mut CdEngine {
    Box::into_raw(Box::new(CdEngine {
        engine: Engine::new(),
        last_error: None,
    }))
}

/// Frees an engine handle. Passing null is a no-op.
#[no_mangle]
pub extern "C" fn cd_engine_free(engine: *mut CdEngine) {
    if !engine.is_null() {
        drop(unsafe { Box::from_raw(engine) });
    }
}

/// Message for the most recent failure on this engine, or null. The pointer
/// is borrowed and valid until the next engine call.
#[no_mangle]
pub extern "C" fn cd_engine_last_error(engine: *const CdEngine) -> *const c_char {
    if engine.is_null() {
        return std::ptr::null();
    }
    match &unsafe { &*engine }.last_error {
        Some(msg) => msg.as_ptr(),
        None => std::ptr::null(),
    }
}

fn guard<F: FnOnce(&mut CdEngine) -> CdStatus>(engine: *mut CdEngine, f: F) -> CdStatus {
    if engine.is_null() {
        return CdStatus::InvalidArgument;
    }
    let engine = unsafe { &mut *engine };
    engine.last_error = None;
    match catch_unwind(AssertUnwindSafe(|| f(engine))) {
        Ok(status) => status,
        Err(_) => {
            set_error(engine, "internal panic");
            CdStatus::Internal
        }
    }
}

/// Generates and registers a synthetic database. `schema` is "tpch_lite" or
/// "ssb_lite".
#[no_mangle]
pub extern "C" fn cd_engine_generate(
    engine: *mut CdEngine,
    schema: *const c_char,
    scale: f64,
    skew: f64,
    correlation: f64,
    seed: u64,
) -> CdStatus {
    guard(engine, |e| {
        let Some(schema) = (unsafe { cstr(schema) }) else {
            set_error(e, "schema must be a UTF-8 string");
            return CdStatus::InvalidArgument;
        };
        let spec = match SchemaKind::parse(schema) {
            Ok(kind) => GeneratorSpec {
                schema: kind,
                scale,
                skew,
                correlation,
                seed,
            },
            Err(err) => {
                set_error(e, err.to_string());
                return CdStatus::DataError;
            }
        };
        match e.engine.generate(&spec) {
            Ok(_) => CdStatus::Ok,
            Err(err) => {
                set_error(e, err.to_string());
                CdStatus::DataError
            }
        }
    })
}

/// Loads every table listed in a directory's manifest (the layout written
/// by the CLI `gen` command).
#[no_mangle]
pub extern "C" fn cd_engine_load_dir(engine: *mut CdEngine, dir: *const c_char) -> CdStatus {
    guard(engine, |e| {
        let Some(dir) = (unsafe { cstr(dir) }) else {
            set_error(e, "dir must be a UTF-8 path");
            return CdStatus::InvalidArgument;
        };
        match e.engine.load_dir(Path::new(dir)) {
            Ok(_) => CdStatus::Ok,
            Err(err) => {
                set_error(e, err.to_string());
                CdStatus::DataError
            }
        }
    })
}

/// Sets the optimizer configuration. `estimator` is one of exact, uniform,
/// equiwidth, equidepth, cms, sample. When `max_selectivity_abs` is
/// negative the ratio applies, otherwise the absolute row bound does.
#[no_mangle]
pub extern "C" fn cd_engine_configure(
    engine: *mut CdEngine,
    estimator: *const c_char,
    pushdown_enabled: bool,
    min_table_size: u64,
    max_selectivity_ratio: f64,
    max_selectivity_abs: i64,
) -> CdStatus {
    guard(engine, |e| {
        let Some(estimator) = (unsafe { cstr(estimator) }) else {
            set_error(e, "estimator must be a UTF-8 string");
            return CdStatus::InvalidArgument;
        };
        let kind = match EstimatorKind::parse(estimator) {
            Ok(k) => k,
            Err(err) => {
                set_error(e, err.to_string());
                return CdStatus::InvalidArgument;
            }
        };
        let max = if max_selectivity_abs >= 0 {
            MaxSelectivity::Absolute(max_selectivity_abs as u64)
        } else {
            MaxSelectivity::Ratio(max_selectivity_ratio)
        };
        if let Err(err) = max.validate() {
            set_error(e, err.to_string());
            return CdStatus::InvalidArgument;
        }
        e.engine.config = OptimizerConfig {
            estimator: kind,
            push_down_min_table_size: min_table_size,
            push_down_max_selectivity: max,
            pushdown_enabled,
            seed: e.engine.config.seed,
        };
        CdStatus::Ok
    })
}

/// Caps the executor's per-operator output rows.
#[no_mangle]
pub extern "C" fn cd_engine_set_max_rows(engine: *mut CdEngine, max_rows: u64) -> CdStatus {
    guard(engine, |e| {
        e.engine.executor = Executor::with_max_rows(max_rows);
        CdStatus::Ok
    })
}

/// Parses, optimizes, and executes a query. On success `*out` owns a result
/// handle that must be freed with `cd_result_free`.
#[no_mangle]
pub extern "C" fn cd_engine_query(
    engine: *mut CdEngine,
    sql: *const c_char,
    out: *mut *mut CdResult,
) -> CdStatus {
    guard(engine, |e| {
        if out.is_null() {
            set_error(e, "out must not be null");
            return CdStatus::InvalidArgument;
        }
        let Some(sql) = (unsafe { cstr(sql) }) else {
            set_error(e, "sql must be a UTF-8 string");
            return CdStatus::InvalidArgument;
        };
        match e.engine.query(sql) {
            Ok(output) => {
                let plan_text =
                    CString::new(explain(&output.plan, &e.engine.catalog)).unwrap_or_default();
                let mut report = String::new();
                if let Some(order) = &output.report.join_order {
                    report.push_str(&format!("join order: {order}\n"));
                }
                for entry in &output.report.entries {
                    let decision = match &entry.decision {
                        Decision::Pushed { temp, rows } => {
                            format!("pushed as {temp} ({rows} rows)")
                        }
                        Decision::Reverted => "reverted".to_string(),
                        Decision::Probe => "probe".to_string(),
                        Decision::BelowMinSize => "below min size".to_string(),
                        Decision::NoSelection => "no selection".to_string(),
                    };
                    report.push_str(&format!("{}: {decision}\n", entry.table));
                }
                let column_names = output
                    .result
                    .columns
                    .iter()
                    .map(|c| CString::new(c.name.clone()).unwrap_or_default())
                    .collect();
                let result = Box::new(CdResult {
                    output,
                    plan_text,
                    report_text: CString::new(report).unwrap_or_default(),
                    column_names,
                });
                unsafe { *out = Box::into_raw(result) };
                CdStatus::Ok
            }
            Err(err) => {
                set_error(e, err.to_string());
                CdStatus::QueryError
            }
        }
    })
}

/// Frees a result handle. Passing null is a no-op.
#[no_mangle]
pub extern "C" fn cd_result_free(result: *mut CdResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}

#[no_mangle]
pub extern "C" fn cd_result_row_count(result: *const CdResult) -> u64 {
    if result.is_null() {
        return 0;
    }
    unsafe { &*result }.output.result.row_count as u64
}

#[no_mangle]
pub extern "C" fn cd_result_column_count(result: *const CdResult) -> u64 {
    if result.is_null() {
        return 0;
    }
    unsafe { &*result }.output.result.columns.len() as u64
}

/// Borrowed column name, or null when out of range.
#[no_mangle]
pub extern "C" fn cd_result_column_name(result: *const CdResult, column: u64) -> *const c_char {
    if result.is_null() {
        return std::ptr::null();
    }
    match unsafe { &*result }.column_names.get(column as usize) {
        Some(name) => name.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Wall time of the query, query string to finished execution, in
/// microseconds.
#[no_mangle]
pub extern "C" fn cd_result_micros(result: *const CdResult) -> u64 {
    if result.is_null() {
        return 0;
    }
    unsafe { &*result }.output.micros
}

/// Borrowed rendering of the final plan tree.
#[no_mangle]
pub extern "C" fn cd_result_plan(result: *const CdResult) -> *const c_char {
    if result.is_null() {
        return std::ptr::null();
    }
    unsafe { &*result }.plan_text.as_ptr()
}

/// Borrowed push-down decision report, one line per table.
#[no_mangle]
pub extern "C" fn cd_result_report(result: *const CdResult) -> *const c_char {
    if result.is_null() {
        return std::ptr::null();
    }
    unsafe { &*result }.report_text.as_ptr()
}

/// Renders one cell as text into `buf`. `*written` receives the full length
/// including the trailing NUL; when `cap` is too small the content is
/// truncated and `BufferTooSmall` is returned.
#[no_mangle]
pub extern "C" fn cd_result_cell(
    result: *const CdResult,
    row: u64,
    column: u64,
    buf: *mut c_char,
    cap: usize,
    written: *mut usize,
) -> CdStatus {
    if result.is_null() || buf.is_null() {
        return CdStatus::InvalidArgument;
    }
    let rs = &unsafe { &*result }.output.result;
    let (row, column) = (row as usize, column as usize);
    if row >= rs.row_count || column >= rs.columns.len() {
        return CdStatus::InvalidArgument;
    }
    let text = rs.columns[column].data.render(row);
    let bytes = text.as_bytes();
    let needed = bytes.len() + 1;
    if !written.is_null() {
        unsafe { *written = needed };
    }
    if cap == 0 {
        return CdStatus::BufferTooSmall;
    }
    let copy = bytes.len().min(cap - 1);
    unsafe {
        std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, copy);
        *buf.add(copy) = 0;
    }
    if needed > cap {
        CdStatus::BufferTooSmall
    } else {
        CdStatus::Ok
    }
}
